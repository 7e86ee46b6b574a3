"""Workflow DAG model: validation against the contract registry,
deterministic topological ordering, and binding resolution from task specs
to concrete process / HTTP invocations.

All operations here are pure functions of their inputs.
"""

from __future__ import annotations

import heapq
import json
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, ValidationError

from .contracts import (
    AccessKind,
    CommandSpec,
    EndpointSpec,
    OutputMode,
    ParamRule,
    ToolContract,
    ValidationReport,
    ValueType,
    NAME_RE,
    PLACEHOLDER_RE,
    _coerce_document,
    _loc_to_path,
    _value_matches_type,
)
from .errors import CycleDetected, MissingUpstreamOutput, NotFound, ValidationFailed

OUTPUT_REF_RE = re.compile(r"\$\{task\.([A-Za-z0-9_-]+)\.output\}")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Schedule(_Strict):
    runAt: Optional[str] = None


class TaskSpec(_Strict):
    id: str
    tool: str
    action: str
    args: Dict[str, object] = {}
    dependsOn: List[str] = []


class WorkflowSpec(_Strict):
    name: str
    owner: str
    schedule: Schedule = Schedule()
    tasks: List[TaskSpec]


@dataclass
class ValidatedWorkflow:
    spec: WorkflowSpec
    adjacency: List[Tuple[str, str]]  # (dependency, dependent)
    topo_order: List[str]

    def as_dict(self) -> dict:
        return {
            "spec": self.spec.model_dump(mode="json", exclude_none=True),
            "adjacency": [list(e) for e in self.adjacency],
            "topoOrder": list(self.topo_order),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))

    def task(self, task_id: str) -> TaskSpec:
        for t in self.spec.tasks:
            if t.id == task_id:
                return t
        raise NotFound(f"task {task_id!r}")


@dataclass
class Invocation:
    task_id: str
    kind: str  # "process" | "http"
    output_sink: str
    process: Optional[dict] = None  # {program, argv, workdir}
    http: Optional[dict] = None  # {method, url, headers, body}
    output_mode: str = "stdout"
    declared_output: Optional[str] = None  # file the program writes when output_mode=file


def parse_rfc3339(value: str) -> datetime:
    return datetime.fromisoformat(value.replace("Z", "+00:00"))


def find_cycle(task_ids: List[str], edges: List[Tuple[str, str]]) -> List[str]:
    """Return one cycle's task ids via iterative DFS; [] when acyclic."""
    succ: Dict[str, List[str]] = {t: [] for t in task_ids}
    for u, v in edges:
        succ[u].append(v)
    color = {t: 0 for t in task_ids}  # 0 white, 1 on stack, 2 done
    parent: Dict[str, Optional[str]] = {}
    for start in task_ids:
        if color[start]:
            continue
        stack = [(start, iter(succ[start]))]
        color[start] = 1
        parent[start] = None
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == 0:
                    color[nxt] = 1
                    parent[nxt] = node
                    stack.append((nxt, iter(succ[nxt])))
                    advanced = True
                    break
                if color[nxt] == 1:
                    cycle = [nxt]
                    cur = node
                    while cur != nxt:
                        cycle.append(cur)
                        cur = parent[cur]
                    cycle.reverse()
                    return cycle
            if not advanced:
                color[node] = 2
                stack.pop()
    return []


def topological_order(adjacency: List[Tuple[str, str]], task_ids: List[str]) -> List[str]:
    """Kahn's algorithm with a lexicographically ordered frontier: among
    ready tasks, the smallest id always comes first."""
    indegree = {t: 0 for t in task_ids}
    succ: Dict[str, List[str]] = {t: [] for t in task_ids}
    for u, v in adjacency:
        succ[u].append(v)
        indegree[v] += 1
    ready = [t for t in task_ids if indegree[t] == 0]
    heapq.heapify(ready)
    order: List[str] = []
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        for nxt in succ[node]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                heapq.heappush(ready, nxt)
    if len(order) != len(task_ids):
        raise CycleDetected(find_cycle(task_ids, adjacency))
    return order


def _references(value: object) -> List[str]:
    if isinstance(value, str):
        return OUTPUT_REF_RE.findall(value)
    return []


def _action_rules(contract: ToolContract, action: str):
    """Return (kind, action spec, param rules) or None if unknown action."""
    access = contract.access
    if access.kind is AccessKind.library and access.library is not None:
        for cmd in access.library.commands:
            if cmd.name == action:
                return AccessKind.library, cmd, list(cmd.params)
    if access.kind is AccessKind.api and access.api is not None:
        for ep in access.api.endpoints:
            if ep.name == action:
                return AccessKind.api, ep, list(ep.bodyFields) + list(ep.queryFields)
    return None


def _check_args(
    task: TaskSpec,
    rules: List[ParamRule],
    allowed_headers: List[str],
    path: str,
    report: ValidationReport,
) -> None:
    by_name = {r.name: r for r in rules}
    for key, value in task.args.items():
        rule = by_name.get(key)
        if rule is None:
            if key in allowed_headers:
                if not isinstance(value, str):
                    report.add(f"{path}.args.{key}", "header values must be strings")
                continue
            report.add(f"{path}.args.{key}", "unknown parameter")
            continue
        refs = _references(value)
        if refs:
            if rule.valueType not in (ValueType.file, ValueType.string):
                report.add(
                    f"{path}.args.{key}",
                    f"output references not allowed for valueType {rule.valueType.value}",
                )
            deps = set(task.dependsOn)
            for ref in refs:
                if ref not in deps:
                    report.add(
                        f"{path}.args.{key}",
                        f"dangling reference: task {ref!r} is not in dependsOn",
                    )
            continue
        if not _value_matches_type(value, rule.valueType):
            report.add(
                f"{path}.args.{key}",
                f"expected {rule.valueType.value}, got {type(value).__name__}",
            )
            continue
        if rule.allowedValues is not None and value not in rule.allowedValues:
            report.add(
                f"{path}.args.{key}",
                f"value {value!r} not in allowedValues",
            )
    for rule in rules:
        if rule.required and rule.name not in task.args and rule.default is None:
            report.add(f"{path}.args.{rule.name}", "required parameter missing")


def validate_workflow(doc: Union[str, bytes, dict], registry) -> ValidatedWorkflow:
    """Validate a raw workflow document against the registry snapshot.

    Raises ValidationFailed carrying the full field-path report; on success
    returns the normalized spec plus adjacency and deterministic topo order.
    """
    data = _coerce_document(doc)
    report = ValidationReport()
    try:
        spec = WorkflowSpec.model_validate(data)
    except ValidationError as exc:
        for err in exc.errors():
            report.add(_loc_to_path(tuple(err["loc"])), err["msg"])
        raise ValidationFailed(report)

    if not NAME_RE.match(spec.name):
        report.add("name", "name must match [A-Za-z0-9_-]{1,64}")
    if not spec.tasks:
        report.add("tasks", "at least one task is required")
    if spec.schedule.runAt is not None:
        try:
            parse_rfc3339(spec.schedule.runAt)
        except ValueError:
            report.add("schedule.runAt", "not a valid RFC 3339 timestamp")

    ids = [t.id for t in spec.tasks]
    seen = set()
    for i, t in enumerate(spec.tasks):
        if not NAME_RE.match(t.id):
            report.add(f"tasks[{i}].id", "task id must match [A-Za-z0-9_-]{1,64}")
        if t.id in seen:
            report.add(f"tasks[{i}].id", f"duplicate task id {t.id!r}")
        seen.add(t.id)

    id_set = set(ids)
    edges: List[Tuple[str, str]] = []
    for i, t in enumerate(spec.tasks):
        for dep in t.dependsOn:
            if dep not in id_set:
                report.add(f"tasks[{i}].dependsOn", f"unknown dependency {dep!r}")
            elif dep == t.id:
                report.add(f"tasks[{i}].dependsOn", "task cannot depend on itself")
            else:
                edges.append((dep, t.id))

    for i, t in enumerate(spec.tasks):
        path = f"tasks[{i}]"
        try:
            contract = registry.get_contract(t.tool)
        except NotFound:
            report.add(f"{path}.tool", f"unknown tool {t.tool!r}")
            continue
        resolved = _action_rules(contract, t.action)
        if resolved is None:
            report.add(f"{path}.action", f"tool {t.tool!r} has no action {t.action!r}")
            continue
        kind, action_spec, rules = resolved
        headers = list(action_spec.allowedHeaders) if kind is AccessKind.api else []
        _check_args(t, rules, headers, path, report)

    if report.ok:
        cycle = find_cycle(ids, edges)
        if cycle:
            report.add("tasks", "cycle detected: " + " -> ".join(cycle))
    if not report.ok:
        raise ValidationFailed(report)

    # normalize: sorted dependsOn, sorted edge list
    for t in spec.tasks:
        t.dependsOn = sorted(set(t.dependsOn))
    edges = sorted(set(edges))
    order = topological_order(edges, ids)
    return ValidatedWorkflow(spec=spec, adjacency=edges, topo_order=order)


def _substitute(value: object, upstream_outputs: Dict[str, str]) -> object:
    if not isinstance(value, str):
        return value

    def repl(match: re.Match) -> str:
        ref = match.group(1)
        if ref not in upstream_outputs:
            raise MissingUpstreamOutput(f"no output recorded for task {ref!r}")
        return str(upstream_outputs[ref])

    return OUTPUT_REF_RE.sub(repl, value)


def _format_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def resolve_bindings(
    task: TaskSpec,
    contract: ToolContract,
    upstream_outputs: Dict[str, str],
    run_dir: str,
) -> Invocation:
    """Turn a validated task into a concrete invocation: argv for library
    tools, a full HTTP request for api tools. Defaults fill absent optional
    params; output references are replaced with upstream output paths."""
    resolved = _action_rules(contract, task.action)
    if resolved is None:
        raise NotFound(f"tool {task.tool!r} has no action {task.action!r}")
    kind, action_spec, rules = resolved
    output_sink = f"{run_dir}/{task.id}.out"

    values: Dict[str, object] = {}
    for rule in rules:
        if rule.default is not None:
            values[rule.name] = rule.default
    for key, raw in task.args.items():
        values[key] = _substitute(raw, upstream_outputs)

    if kind is AccessKind.library:
        assert isinstance(action_spec, CommandSpec)
        declared_output = None
        if action_spec.outputMode is OutputMode.file:
            param = action_spec.outputFileParam
            if param not in values:
                values[param] = output_sink
            declared_output = str(values[param])
        argv: List[str] = [contract.access.library.program]
        if action_spec.subcommand:
            argv.append(action_spec.subcommand)
        for rule in action_spec.params:
            if rule.name not in values:
                continue
            value = values[rule.name]
            if rule.valueType is ValueType.bool:
                if rule.flag:
                    if value is True:
                        argv.append(rule.flag)
                else:
                    argv.append(_format_value(value))
                continue
            if rule.flag:
                argv.append(rule.flag)
            argv.append(_format_value(value))
        for token in argv:
            if "${" in token:
                raise MissingUpstreamOutput(f"unsubstituted reference in argv token {token!r}")
        return Invocation(
            task_id=task.id,
            kind="process",
            output_sink=output_sink,
            process={
                "program": contract.access.library.program,
                "argv": argv,
                "workdir": f"{run_dir}/work/{task.id}",
            },
            output_mode=action_spec.outputMode.value,
            declared_output=declared_output,
        )

    assert isinstance(action_spec, EndpointSpec)
    api = contract.access.api
    consumed = set()

    def fill(match: re.Match) -> str:
        name = match.group(1)
        consumed.add(name)
        return _format_value(values.get(name, ""))

    path = PLACEHOLDER_RE.sub(fill, action_spec.path)
    url = api.baseUrl.rstrip("/") + "/" + path.lstrip("/")
    query = {
        r.name: _format_value(values[r.name])
        for r in action_spec.queryFields
        if r.name in values and r.name not in consumed
    }
    if query:
        from urllib.parse import urlencode

        url = url + "?" + urlencode(sorted(query.items()))
    body = {
        r.name: values[r.name]
        for r in action_spec.bodyFields
        if r.name in values and r.name not in consumed
    }
    headers = {
        h: str(_substitute(task.args[h], upstream_outputs))
        for h in action_spec.allowedHeaders
        if h in task.args
    }
    return Invocation(
        task_id=task.id,
        kind="http",
        output_sink=output_sink,
        http={
            "method": action_spec.method.value,
            "url": url,
            "headers": headers,
            "body": body or None,
        },
        output_mode="stdout",
    )
