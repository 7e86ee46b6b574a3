"""Workflow translation to external DSLs: an Airflow 2.x-style DAG script
and a CWL v1.2 Workflow document.

Both emissions are deterministic given (workflow, clock); pass `now` to pin
the clock for byte-identical output.
"""

from __future__ import annotations

import json
import keyword
import re
import shlex
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import yaml

from .contracts import AccessKind, CommandSpec, EndpointSpec, OutputMode, ToolContract, ValueType, PLACEHOLDER_RE
from .registry import utc_now_rfc3339
from .workflows import OUTPUT_REF_RE, Invocation, ValidatedWorkflow, resolve_bindings

CWL_VERSION = "v1.2"
HTTP_HELPER = "flowviz-http-call"

_CWL_TYPES = {
    ValueType.string: "string",
    ValueType.int: "int",
    ValueType.float: "float",
    ValueType.bool: "boolean",
    ValueType.file: "File",
}


@dataclass
class ExportDocument:
    format: str  # "airflow" | "cwl"
    content: str
    workflow_name: str
    generated_at: str

    def as_dict(self) -> dict:
        return {
            "format": self.format,
            "content": self.content,
            "workflowName": self.workflow_name,
            "generatedAt": self.generated_at,
        }


def _var_names(task_ids: List[str]) -> Dict[str, str]:
    """Map task ids to unique python variable names, keeping valid ids as-is."""
    out: Dict[str, str] = {}
    used = set()
    for tid in task_ids:
        var = tid if tid.isidentifier() and not keyword.iskeyword(tid) else "t_" + re.sub(r"[^0-9A-Za-z_]", "_", tid)
        while var in used:
            var += "_"
        out[tid] = var
        used.add(var)
    return out


def emit_airflow_script(
    workflow: ValidatedWorkflow,
    contracts,
    now: Optional[str] = None,
) -> ExportDocument:
    """Render the workflow as an Airflow DAG script: one operator per task
    (Bash for library tools, HTTP for api tools), one `u >> v` statement per
    edge, edges sorted lexicographically."""
    generated_at = now or utc_now_rfc3339()
    spec = workflow.spec
    run_at = spec.schedule.runAt or generated_at
    names = _var_names([t.id for t in spec.tasks])
    # symbolic upstream outputs so references render as sibling file paths
    outputs = {t.id: f"./{t.id}.out" for t in spec.tasks}

    lines: List[str] = []
    lines.append(f"# Workflow: {spec.name}")
    lines.append(f"# Owner: {spec.owner}")
    lines.append(f"# Generated: {generated_at}")
    lines.append("from datetime import datetime")
    lines.append("")
    lines.append("from airflow import DAG")
    lines.append("from airflow.operators.bash import BashOperator")
    lines.append("from airflow.providers.http.operators.http import SimpleHttpOperator")
    lines.append("")
    lines.append("with DAG(")
    lines.append(f"    dag_id={spec.name!r},")
    lines.append(f"    start_date=datetime.fromisoformat({run_at.replace('Z', '+00:00')!r}),")
    lines.append("    schedule_interval='@once',")
    lines.append("    catchup=False,")
    lines.append(f"    tags=['flowviz', {spec.owner!r}],")
    lines.append(") as dag:")

    by_id = {t.id: t for t in spec.tasks}
    for tid in workflow.topo_order:
        task = by_id[tid]
        contract = contracts.get_contract(task.tool)
        inv = resolve_bindings(task, contract, outputs, ".")
        var = names[tid]
        if inv.kind == "process":
            command = shlex.join(inv.process["argv"])
            lines.append(f"    {var} = BashOperator(")
            lines.append(f"        task_id={tid!r},")
            lines.append(f"        bash_command={command!r},")
            lines.append("    )")
        else:
            http = inv.http
            lines.append(f"    {var} = SimpleHttpOperator(")
            lines.append(f"        task_id={tid!r},")
            lines.append(f"        method={http['method']!r},")
            lines.append(f"        endpoint={http['url']!r},")
            lines.append(f"        headers={json.dumps(http['headers'], sort_keys=True)},")
            if http.get("body"):
                lines.append(f"        data={json.dumps(http['body'], sort_keys=True)},")
            lines.append("    )")

    if workflow.adjacency:
        lines.append("")
        for u, v in workflow.adjacency:
            lines.append(f"    {names[u]} >> {names[v]}")
    lines.append("")
    return ExportDocument(
        format="airflow",
        content="\n".join(lines),
        workflow_name=spec.name,
        generated_at=generated_at,
    )


def _cwl_library_step(task, contract: ToolContract, cmd: CommandSpec) -> dict:
    inputs: Dict[str, dict] = {}
    step_in: Dict[str, dict] = {}
    position = 0
    for rule in cmd.params:
        value = task.args.get(rule.name, rule.default)
        if value is None:
            continue
        position += 1
        binding: dict = {"position": position}
        if rule.flag:
            binding["prefix"] = rule.flag
        refs = OUTPUT_REF_RE.findall(value) if isinstance(value, str) else []
        if refs:
            inputs[rule.name] = {"type": "File", "inputBinding": binding}
            step_in[rule.name] = {"source": f"{refs[0]}/out"}
        else:
            inputs[rule.name] = {"type": _CWL_TYPES[rule.valueType], "inputBinding": binding}
            step_in[rule.name] = {"default": value}
    base = [contract.access.library.program]
    if cmd.subcommand:
        base.append(cmd.subcommand)
    return {
        "run": {
            "class": "CommandLineTool",
            "baseCommand": base,
            "inputs": inputs,
            "stdout": "out",
            "outputs": {"out": {"type": "stdout"}},
        },
        "in": step_in,
        "out": ["out"],
    }


def _cwl_api_step(task, contract: ToolContract, ep: EndpointSpec) -> dict:
    api = contract.access.api
    rules = {r.name: r for r in list(ep.bodyFields) + list(ep.queryFields)}
    literal: Dict[str, object] = {}
    referenced: Dict[str, str] = {}  # param name -> upstream task id
    for rule in rules.values():
        value = task.args.get(rule.name, rule.default)
        if value is None:
            continue
        refs = OUTPUT_REF_RE.findall(value) if isinstance(value, str) else []
        if refs:
            referenced[rule.name] = refs[0]
        else:
            literal[rule.name] = value

    consumed = set()

    def fill(match):
        name = match.group(1)
        consumed.add(name)
        return str(literal.get(name, ""))

    path = PLACEHOLDER_RE.sub(fill, ep.path)
    url = api.baseUrl.rstrip("/") + "/" + path.lstrip("/")
    query = {
        r.name: literal[r.name]
        for r in ep.queryFields
        if r.name in literal and r.name not in consumed
    }
    if query:
        from urllib.parse import urlencode

        url = url + "?" + urlencode(sorted((k, str(v)) for k, v in query.items()))
    body = {
        r.name: literal[r.name]
        for r in ep.bodyFields
        if r.name in literal and r.name not in consumed
    }

    arguments: List[str] = ["--method", ep.method.value, "--url", url]
    for header in ep.allowedHeaders:
        if header in task.args:
            arguments += ["--header", f"{header}: {task.args[header]}"]
    if body:
        arguments += ["--body", json.dumps(body, sort_keys=True)]

    inputs: Dict[str, dict] = {}
    step_in: Dict[str, dict] = {}
    for name, upstream in sorted(referenced.items()):
        inputs[name] = {
            "type": "File",
            "inputBinding": {"prefix": f"--field-file-{name}"},
        }
        step_in[name] = {"source": f"{upstream}/out"}
    return {
        "run": {
            "class": "CommandLineTool",
            "baseCommand": [HTTP_HELPER],
            "arguments": arguments,
            "inputs": inputs,
            "stdout": "out",
            "outputs": {"out": {"type": "stdout"}},
        },
        "in": step_in,
        "out": ["out"],
    }


def emit_cwl(
    workflow: ValidatedWorkflow,
    contracts,
    now: Optional[str] = None,
) -> ExportDocument:
    """Render the workflow as a CWL v1.2 Workflow with one embedded
    CommandLineTool step per task; dependency edges become step input
    sources (`<upstream>/out`), including ordering-only edges."""
    generated_at = now or utc_now_rfc3339()
    spec = workflow.spec
    by_id = {t.id: t for t in spec.tasks}
    steps: Dict[str, dict] = {}
    for tid in workflow.topo_order:
        task = by_id[tid]
        contract = contracts.get_contract(task.tool)
        if contract.access.kind is AccessKind.library:
            cmd = next(c for c in contract.access.library.commands if c.name == task.action)
            step = _cwl_library_step(task, contract, cmd)
        else:
            ep = next(e for e in contract.access.api.endpoints if e.name == task.action)
            step = _cwl_api_step(task, contract, ep)
        # dependency edges not already expressed by a dataflow reference
        # get an unbound passthrough input so the DAG shape is preserved
        sourced = {v["source"].split("/")[0] for v in step["in"].values() if "source" in v}
        for dep in task.dependsOn:
            if dep not in sourced:
                wait_name = f"wait_{dep}"
                step["run"]["inputs"][wait_name] = {"type": "File"}
                step["in"][wait_name] = {"source": f"{dep}/out"}
        steps[tid] = step

    doc = {
        "cwlVersion": CWL_VERSION,
        "class": "Workflow",
        "id": spec.name,
        "doc": f"owner: {spec.owner}; generated: {generated_at}",
        "inputs": {},
        "outputs": {
            f"{tid}_out": {"type": "File", "outputSource": f"{tid}/out"}
            for tid in workflow.topo_order
        },
        "steps": steps,
    }
    content = yaml.safe_dump(doc, sort_keys=False, default_flow_style=False, width=100)
    return ExportDocument(
        format="cwl",
        content=content,
        workflow_name=spec.name,
        generated_at=generated_at,
    )


def cwl_edges(content: str) -> List[Tuple[str, str]]:
    """Reconstruct the dependency edge set from an emitted CWL document by
    reading every step input source."""
    doc = yaml.safe_load(content)
    edges = set()
    for step_id, step in (doc.get("steps") or {}).items():
        for binding in (step.get("in") or {}).values():
            source = binding.get("source") if isinstance(binding, dict) else None
            if source:
                edges.add((source.split("/")[0], step_id))
    return sorted(edges)


def emit(workflow: ValidatedWorkflow, contracts, fmt: str, now: Optional[str] = None) -> ExportDocument:
    if fmt == "airflow":
        return emit_airflow_script(workflow, contracts, now=now)
    if fmt == "cwl":
        return emit_cwl(workflow, contracts, now=now)
    raise ValueError(f"unknown export format: {fmt!r}")
