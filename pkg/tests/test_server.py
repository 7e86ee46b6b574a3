import json
import time

import pytest
from fastapi.testclient import TestClient

from flowviz.engine import EngineConfig
from flowviz.server import ServerConfig, create_app
from flowviz.service import FlowvizService
from flowviz.store import FileStore

from conftest import FIXTURES, load_fixture, valid_contract_paths


@pytest.fixture
def client(tmp_path):
    config = EngineConfig(data_dir=str(tmp_path / "data"), sched_tick_ms=50)
    service = FlowvizService(FileStore(config.data_dir), config)
    app = create_app(service, ServerConfig(engine=config))
    with TestClient(app) as test_client:
        yield test_client


@pytest.fixture
def auth_client(tmp_path):
    config = EngineConfig(data_dir=str(tmp_path / "data"), sched_tick_ms=50)
    service = FlowvizService(FileStore(config.data_dir), config)
    app = create_app(service, ServerConfig(engine=config, api_token="sekret"))
    with TestClient(app) as test_client:
        yield test_client


def _register_fixture_tools(client):
    for path in valid_contract_paths():
        response = client.post("/api/tools", content=path.read_text(encoding="utf-8"))
        assert response.status_code == 201, response.text


def _poll_run(client, run_id, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        record = client.get(f"/api/runs/{run_id}").json()
        if record["state"] in ("Succeeded", "Failed", "Canceled"):
            return record
        time.sleep(0.05)
    raise AssertionError(f"run {run_id} did not finish: {record}")


def test_health(client):
    response = client.get("/api/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_invalid_contract_400_with_field_errors(client):
    response = client.post(
        "/api/tools", json=load_fixture("contracts/invalid/both_access_kinds.json")
    )
    assert response.status_code == 400
    body = response.json()
    assert body["code"] == "validation_failed"
    assert any(err["path"] == "access" for err in body["fieldErrors"])


def test_tools_crud(client):
    _register_fixture_tools(client)
    listed = client.get("/api/tools").json()
    names = [t["name"] for t in listed]
    assert names == sorted(names)
    assert client.get("/api/tools/echoer").json()["name"] == "echoer"
    assert client.get("/api/tools/missing").status_code == 404
    assert client.delete("/api/tools/sleeper").status_code == 200
    assert client.get("/api/tools/sleeper").status_code == 404


def test_duplicate_tool_409(client):
    _register_fixture_tools(client)
    response = client.post(
        "/api/tools", content=(FIXTURES / "contracts/valid/echoer.json").read_text()
    )
    assert response.status_code == 409
    assert response.json()["code"] == "duplicate_name"


def test_delete_tool_in_use_409(client):
    _register_fixture_tools(client)
    assert client.post("/api/workflows", json=load_fixture("workflows/diamond.json")).status_code == 201
    response = client.delete("/api/tools/appender")
    assert response.status_code == 409
    assert response.json()["code"] == "tool_in_use"


def test_workflow_duplicate_name_409(client):
    _register_fixture_tools(client)
    doc = load_fixture("workflows/diamond.json")
    assert client.post("/api/workflows", json=doc).status_code == 201
    response = client.post("/api/workflows", json=doc)
    assert response.status_code == 409
    assert response.json()["code"] == "duplicate_name"


def test_workflow_validation_400(client):
    _register_fixture_tools(client)
    doc = load_fixture("workflows/diamond.json")
    doc["tasks"][0]["tool"] = "ghost"
    response = client.post("/api/workflows", json=doc)
    assert response.status_code == 400
    assert response.json()["fieldErrors"]


def test_workflows_listed_sorted(client):
    _register_fixture_tools(client)
    for name in ("zeta", "alpha", "mid"):
        doc = load_fixture("workflows/diamond.json")
        doc["name"] = name
        assert client.post("/api/workflows", json=doc).status_code == 201
    assert client.get("/api/workflows").json() == ["alpha", "mid", "zeta"]


def test_full_lifecycle_over_http(client):
    _register_fixture_tools(client)
    assert client.post("/api/workflows", json=load_fixture("workflows/diamond.json")).status_code == 201

    response = client.post("/api/workflows/diamond/runs", json={})
    assert response.status_code == 202
    run_id = response.json()["runId"]

    record = _poll_run(client, run_id)
    assert record["state"] == "Succeeded"
    assert set(record["taskRuns"]) == {"A", "B", "C", "D"}
    assert "workflow" not in record  # internal snapshot not exposed

    for task_id in "ABCD":
        log = client.get(f"/api/runs/{run_id}/tasks/{task_id}/log")
        assert log.status_code == 200
        assert log.text

    dsl = client.get(f"/api/runs/{run_id}/dsl")
    assert dsl.status_code == 200
    assert "BashOperator" in dsl.text


def test_run_trigger_404_for_unknown_workflow(client):
    assert client.post("/api/workflows/ghost/runs", json={}).status_code == 404


def test_duplicate_active_run_409(client):
    _register_fixture_tools(client)
    client.post("/api/workflows", json=load_fixture("workflows/diamond.json"))
    body = {"runAt": "2099-01-01T00:00:00Z"}
    first = client.post("/api/workflows/diamond/runs", json=body)
    assert first.status_code == 202
    second = client.post("/api/workflows/diamond/runs", json=body)
    assert second.status_code == 409
    assert second.json()["code"] == "duplicate_active_run"
    # cleanup: cancel so the scheduler is not left with a far-future run
    client.post(f"/api/runs/{first.json()['runId']}/cancel")


def test_cancel_flow(client):
    _register_fixture_tools(client)
    client.post("/api/workflows", json=load_fixture("workflows/diamond.json"))
    run_id = client.post(
        "/api/workflows/diamond/runs", json={"runAt": "2099-01-01T00:00:00Z"}
    ).json()["runId"]
    assert client.post(f"/api/runs/{run_id}/cancel").status_code == 200
    assert client.get(f"/api/runs/{run_id}").json()["state"] == "Canceled"
    assert client.post(f"/api/runs/{run_id}/cancel").status_code == 409
    assert client.post("/api/runs/r-missing/cancel").status_code == 404


def test_workflow_export_routes(client):
    _register_fixture_tools(client)
    client.post("/api/workflows", json=load_fixture("workflows/diamond.json"))
    cwl = client.get("/api/workflows/diamond/export", params={"format": "cwl"})
    assert cwl.status_code == 200
    assert cwl.headers["content-type"].startswith("application/x-yaml")
    assert cwl.text.startswith("cwlVersion: v1.2")
    airflow = client.get("/api/workflows/diamond/export", params={"format": "airflow"})
    assert airflow.status_code == 200
    assert airflow.headers["content-type"].startswith("text/plain")
    assert "BashOperator" in airflow.text
    bad = client.get("/api/workflows/diamond/export", params={"format": "nextflow"})
    assert bad.status_code == 400


def test_run_export_unknown_id_404(client):
    assert client.get("/api/runs/r-unknown/export", params={"format": "cwl"}).status_code == 404


def test_run_export_known_id(client):
    _register_fixture_tools(client)
    client.post("/api/workflows", json=load_fixture("workflows/diamond.json"))
    run_id = client.post(
        "/api/workflows/diamond/runs", json={"runAt": "2099-01-01T00:00:00Z"}
    ).json()["runId"]
    response = client.get(f"/api/runs/{run_id}/export", params={"format": "cwl"})
    assert response.status_code == 200
    assert "cwlVersion: v1.2" in response.text
    client.post(f"/api/runs/{run_id}/cancel")


def test_every_4xx_has_machine_readable_code(client):
    _register_fixture_tools(client)
    cases = [
        client.get("/api/tools/missing"),
        client.post("/api/tools", content="{broken"),
        client.post("/api/tools", json=load_fixture("contracts/invalid/no_endpoints.json")),
        client.post("/api/workflows/ghost/runs", json={}),
        client.post("/api/runs/ghost/cancel"),
    ]
    for response in cases:
        assert 400 <= response.status_code < 500
        assert response.json()["code"]


def test_cors_headers_present(client):
    response = client.get("/api/health", headers={"Origin": "http://localhost:5173"})
    assert response.headers.get("access-control-allow-origin") == "*"


def test_auth_required_for_mutations(auth_client):
    doc = load_fixture("contracts/valid/echoer.json")
    response = auth_client.post("/api/tools", json=doc)
    assert response.status_code == 401
    assert response.json()["code"] == "unauthorized"
    ok = auth_client.post("/api/tools", json=doc, headers={"Authorization": "Bearer sekret"})
    assert ok.status_code == 201
    # reads stay open by default
    assert auth_client.get("/api/tools").status_code == 200
