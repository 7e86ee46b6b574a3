import json
import re
import subprocess
import sys

import pytest
import yaml

from flowviz.exporters import (
    cwl_edges,
    emit,
    emit_airflow_script,
    emit_cwl,
)
from flowviz.workflows import validate_workflow

from conftest import load_fixture

FIXED_CLOCK = "2026-01-02T03:04:05Z"


@pytest.fixture
def service(registry_with_fixtures):
    return registry_with_fixtures


@pytest.fixture
def diamond(service):
    return validate_workflow(load_fixture("workflows/diamond.json"), service.registry)


# ---- airflow ------------------------------------------------------------


def test_airflow_diamond_operators_and_edges(service, diamond):
    content = emit_airflow_script(diamond, service.registry, now=FIXED_CLOCK).content
    assert content.count("BashOperator(") == 4
    for line in ("A >> B", "A >> C", "B >> D", "C >> D"):
        assert f"    {line}\n" in content + "\n"
    assert len(re.findall(r"^\s+\w+ >> \w+$", content, re.M)) == 4
    # edges sorted lexicographically by (u, v)
    dep_lines = [l.strip() for l in content.splitlines() if ">>" in l]
    assert dep_lines == sorted(dep_lines)


def test_airflow_header_and_dag_block(service, diamond):
    content = emit_airflow_script(diamond, service.registry, now=FIXED_CLOCK).content
    assert content.startswith("# Workflow: diamond\n# Owner: demo\n")
    assert "dag_id='diamond'" in content
    assert "task_id='A'" in content


def test_airflow_single_task_no_dependency_lines(service):
    doc = {
        "name": "solo",
        "owner": "t",
        "schedule": {},
        "tasks": [{"id": "only", "tool": "echoer", "action": "say", "args": {"text": "x"}, "dependsOn": []}],
    }
    validated = validate_workflow(doc, service.registry)
    content = emit_airflow_script(validated, service.registry, now=FIXED_CLOCK).content
    assert ">>" not in content
    assert content.count("BashOperator(") == 1


def test_airflow_http_operator_for_api_tool(service):
    doc = {
        "name": "apiwf",
        "owner": "t",
        "schedule": {},
        "tasks": [
            {"id": "S", "tool": "pinger", "action": "status", "args": {"jobId": "42"}, "dependsOn": []}
        ],
    }
    validated = validate_workflow(doc, service.registry)
    content = emit_airflow_script(validated, service.registry, now=FIXED_CLOCK).content
    assert "SimpleHttpOperator(" in content
    assert "method='GET'" in content
    assert "http://localhost:9021/status/42" in content


def test_airflow_deterministic_under_fixed_clock(service, diamond):
    first = emit_airflow_script(diamond, service.registry, now=FIXED_CLOCK).content
    second = emit_airflow_script(diamond, service.registry, now=FIXED_CLOCK).content
    assert first == second


def test_airflow_schedule_uses_run_at(service):
    doc = {
        "name": "timedwf",
        "owner": "t",
        "schedule": {"runAt": "2030-06-01T12:00:00Z"},
        "tasks": [{"id": "A", "tool": "echoer", "action": "say", "args": {"text": "x"}, "dependsOn": []}],
    }
    validated = validate_workflow(doc, service.registry)
    content = emit_airflow_script(validated, service.registry, now=FIXED_CLOCK).content
    assert "2030-06-01T12:00:00+00:00" in content
    assert "schedule_interval='@once'" in content


# ---- cwl ----------------------------------------------------------------


def test_cwl_structural_constants(service, diamond):
    content = emit_cwl(diamond, service.registry, now=FIXED_CLOCK).content
    assert content.count("cwlVersion: v1.2") == 1
    assert content.count("class: Workflow") == 1
    doc = yaml.safe_load(content)
    assert set(doc["steps"]) == {"A", "B", "C", "D"}


def test_cwl_chain_reference_becomes_step_source(service):
    doc = {
        "name": "chain",
        "owner": "t",
        "schedule": {},
        "tasks": [
            {"id": "A", "tool": "appender", "action": "append", "args": {"marker": "a"}, "dependsOn": []},
            {
                "id": "B",
                "tool": "appender",
                "action": "append",
                "args": {"marker": "b", "in1": "${task.A.output}"},
                "dependsOn": ["A"],
            },
        ],
    }
    validated = validate_workflow(doc, service.registry)
    parsed = yaml.safe_load(emit_cwl(validated, service.registry, now=FIXED_CLOCK).content)
    step_b = parsed["steps"]["B"]
    assert step_b["in"]["in1"]["source"] == "A/out"
    assert step_b["run"]["inputs"]["in1"]["type"] == "File"


def test_cwl_round_trip_edges_equal_adjacency(service, diamond):
    content = emit_cwl(diamond, service.registry, now=FIXED_CLOCK).content
    assert cwl_edges(content) == diamond.adjacency


def test_cwl_ordering_only_edge_gets_passthrough_input(service):
    doc = {
        "name": "orderonly",
        "owner": "t",
        "schedule": {},
        "tasks": [
            {"id": "A", "tool": "echoer", "action": "say", "args": {"text": "a"}, "dependsOn": []},
            {"id": "B", "tool": "echoer", "action": "say", "args": {"text": "b"}, "dependsOn": ["A"]},
        ],
    }
    validated = validate_workflow(doc, service.registry)
    content = emit_cwl(validated, service.registry, now=FIXED_CLOCK).content
    parsed = yaml.safe_load(content)
    assert parsed["steps"]["B"]["in"]["wait_A"]["source"] == "A/out"
    assert cwl_edges(content) == [("A", "B")]


def test_cwl_library_tool_shape(service, diamond):
    parsed = yaml.safe_load(emit_cwl(diamond, service.registry, now=FIXED_CLOCK).content)
    run = parsed["steps"]["A"]["run"]
    assert run["class"] == "CommandLineTool"
    assert run["baseCommand"] == ["python3"]
    assert run["stdout"] == "out"
    assert run["outputs"]["out"]["type"] == "stdout"
    assert run["inputs"]["code"]["inputBinding"]["prefix"] == "-c"
    assert parsed["steps"]["A"]["out"] == ["out"]


def test_cwl_api_tool_uses_http_helper(service):
    doc = {
        "name": "apicwl",
        "owner": "t",
        "schedule": {},
        "tasks": [
            {
                "id": "J",
                "tool": "submitter",
                "action": "submit",
                "args": {"dataset": "d9", "X-Priority": "high"},
                "dependsOn": [],
            }
        ],
    }
    validated = validate_workflow(doc, service.registry)
    parsed = yaml.safe_load(emit_cwl(validated, service.registry, now=FIXED_CLOCK).content)
    run = parsed["steps"]["J"]["run"]
    assert run["baseCommand"] == ["flowviz-http-call"]
    args = run["arguments"]
    assert args[:4] == ["--method", "POST", "--url", "https://jobs.example.org/v1/jobs"]
    assert "--header" in args and "X-Priority: high" in args
    body = json.loads(args[args.index("--body") + 1])
    assert body["dataset"] == "d9"


def test_cwl_deterministic_under_fixed_clock(service, diamond):
    first = emit_cwl(diamond, service.registry, now=FIXED_CLOCK).content
    second = emit_cwl(diamond, service.registry, now=FIXED_CLOCK).content
    assert first == second


def test_emit_dispatch_and_unknown_format(service, diamond):
    assert emit(diamond, service.registry, "airflow", now=FIXED_CLOCK).format == "airflow"
    assert emit(diamond, service.registry, "cwl", now=FIXED_CLOCK).format == "cwl"
    with pytest.raises(ValueError):
        emit(diamond, service.registry, "nextflow")


def test_task_ids_emitted_verbatim(service):
    doc = {
        "name": "hyphens",
        "owner": "t",
        "schedule": {},
        "tasks": [
            {"id": "pre-process", "tool": "echoer", "action": "say", "args": {"text": "x"}, "dependsOn": []},
            {"id": "post-process", "tool": "echoer", "action": "say", "args": {"text": "y"}, "dependsOn": ["pre-process"]},
        ],
    }
    validated = validate_workflow(doc, service.registry)
    airflow = emit_airflow_script(validated, service.registry, now=FIXED_CLOCK).content
    assert "task_id='pre-process'" in airflow
    assert "t_pre_process >> t_post_process" in airflow
    parsed = yaml.safe_load(emit_cwl(validated, service.registry, now=FIXED_CLOCK).content)
    assert set(parsed["steps"]) == {"pre-process", "post-process"}


# ---- http helper --------------------------------------------------------


def test_http_call_helper(tmp_path):
    import http.server
    import threading

    received = {}

    class Handler(http.server.BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers.get("Content-Length", 0))
            received["body"] = json.loads(self.rfile.read(length))
            received["trace"] = self.headers.get("X-Trace-Id")
            payload = b'{"ok": true}'
            self.send_response(200)
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, *args):
            pass

    server = http.server.HTTPServer(("127.0.0.1", 0), Handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        extra = tmp_path / "field.txt"
        extra.write_text("from-file")
        result = subprocess.run(
            [
                sys.executable, "-m", "flowviz.http_call",
                "--method", "POST",
                "--url", f"http://127.0.0.1:{server.server_port}/jobs",
                "--header", "X-Trace-Id: t1",
                "--body", '{"dataset": "d1"}',
                f"--field-file-notes", str(extra),
            ],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        assert result.stdout == '{"ok": true}'
        assert received["body"] == {"dataset": "d1", "notes": "from-file"}
        assert received["trace"] == "t1"
    finally:
        server.shutdown()


def test_http_call_helper_nonzero_on_error_status(tmp_path):
    import http.server
    import threading

    class Handler(http.server.BaseHTTPRequestHandler):
        def do_GET(self):
            self.send_response(500)
            self.send_header("Content-Length", "0")
            self.end_headers()

        def log_message(self, *args):
            pass

    server = http.server.HTTPServer(("127.0.0.1", 0), Handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        result = subprocess.run(
            [sys.executable, "-m", "flowviz.http_call", "--method", "GET",
             "--url", f"http://127.0.0.1:{server.server_port}/x"],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 1
    finally:
        server.shutdown()
