"""Operator command line: run the server, manage tools and workflows
against a remote server, or validate/run workflows locally against a data
directory with no server at all.

Exit codes: 0 success, 1 validation/application failure, 2 transport or IO
failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .engine import EngineConfig
from .errors import FlowvizError, ValidationFailed
from .exporters import emit
from .registry import utc_now_rfc3339
from .server import ServerConfig, serve
from .service import FlowvizService
from .store import FileStore
from .workflows import validate_workflow

EXIT_OK = 0
EXIT_APP = 1
EXIT_TRANSPORT = 2


class Ctx:
    def __init__(self, server_url: str, token: str | None, data_dir: str, output: str):
        self.server_url = server_url.rstrip("/")
        self.token = token
        self.data_dir = data_dir
        self.output = output

    def client(self) -> httpx.Client:
        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return httpx.Client(base_url=self.server_url, headers=headers, timeout=30.0)

    def service(self) -> FlowvizService:
        config = EngineConfig.from_env()
        config.data_dir = self.data_dir
        return FlowvizService(FileStore(self.data_dir), config)

    def emit(self, document, human: str) -> None:
        if self.output == "json":
            click.echo(json.dumps(document, indent=2, sort_keys=True))
        else:
            click.echo(human)


def _request(ctx: Ctx, method: str, path: str, **kwargs):
    """Perform a server request; exits on transport or application errors."""
    try:
        with ctx.client() as client:
            response = client.request(method, path, **kwargs)
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach server: {exc}", err=True)
        sys.exit(EXIT_TRANSPORT)
    if response.status_code >= 400:
        try:
            body = response.json()
            detail = body.get("detail", response.text)
            for err in body.get("fieldErrors") or []:
                click.echo(f"  {err['path']}: {err['reason']}", err=True)
        except ValueError:
            detail = response.text
        click.echo(f"error ({response.status_code}): {detail}", err=True)
        sys.exit(EXIT_APP)
    return response


def _read_file(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        sys.exit(EXIT_TRANSPORT)


@click.group()
@click.option("--server", "server_url", default="http://127.0.0.1:7070", envvar="FLOWVIZ_SERVER_URL", show_default=True)
@click.option("--token", default=None, envvar="FLOWVIZ_API_TOKEN")
@click.option("--data-dir", default="./data", envvar="FLOWVIZ_DATA_DIR", show_default=True)
@click.option("--output", type=click.Choice(["human", "json"]), default="human")
@click.pass_context
def main(ctx, server_url, token, data_dir, output):
    """FLOWViZ workflow integration service."""
    ctx.obj = Ctx(server_url, token, data_dir, output)


@main.command("serve")
@click.option("--port", type=int, default=None)
@click.option("--host", default=None)
@click.pass_obj
def serve_cmd(ctx: Ctx, port, host):
    """Run the HTTP server (blocking)."""
    config = ServerConfig.from_env()
    if port is not None:
        config.port = port
    if host is not None:
        config.host = host
    if ctx.token:
        config.api_token = ctx.token
    config.engine.data_dir = ctx.data_dir
    serve(config)


# ---- tool ---------------------------------------------------------------


@main.group()
def tool():
    """Manage tool contracts."""


@tool.command("register")
@click.argument("file", type=click.Path())
@click.pass_obj
def tool_register(ctx: Ctx, file):
    body = _read_file(file)
    response = _request(ctx, "POST", "/api/tools", content=body, headers={"Content-Type": "application/json"})
    doc = response.json()
    ctx.emit(doc, f"registered tool {doc['name']}")


@tool.command("list")
@click.pass_obj
def tool_list(ctx: Ctx):
    doc = _request(ctx, "GET", "/api/tools").json()
    ctx.emit(doc, "\n".join(t["name"] for t in doc) if doc else "(no tools)")


# ---- wf -----------------------------------------------------------------


@main.group()
def wf():
    """Manage and run workflows."""


@wf.command("validate")
@click.argument("file", type=click.Path())
@click.pass_obj
def wf_validate(ctx: Ctx, file):
    """Validate a workflow file locally against the data directory. Pure
    check: nothing is written."""
    body = _read_file(file)
    service = ctx.service()
    try:
        validated = validate_workflow(body, service.registry)
    except ValidationFailed as exc:
        for err in exc.report.errors:
            click.echo(f"  {err.path}: {err.reason}", err=True)
        click.echo("error: workflow is invalid", err=True)
        sys.exit(EXIT_APP)
    except FlowvizError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_APP)
    ctx.emit(validated.as_dict(), f"workflow {validated.spec.name} is valid; order: " + " -> ".join(validated.topo_order))


@wf.command("submit")
@click.argument("file", type=click.Path())
@click.pass_obj
def wf_submit(ctx: Ctx, file):
    body = _read_file(file)
    doc = _request(ctx, "POST", "/api/workflows", content=body, headers={"Content-Type": "application/json"}).json()
    ctx.emit(doc, f"submitted workflow {doc['name']}")


@wf.command("run")
@click.argument("file", type=click.Path())
@click.option("--local", is_flag=True, help="execute in-process against the data directory")
@click.pass_obj
def wf_run(ctx: Ctx, file, local):
    body = _read_file(file)
    if not local:
        doc = json.loads(body)
        _request(ctx, "POST", "/api/workflows", content=body, headers={"Content-Type": "application/json"})
        run = _request(ctx, "POST", f"/api/workflows/{doc['name']}/runs", json={}).json()
        ctx.emit(run, f"run {run['runId']} scheduled")
        return
    service = ctx.service()
    try:
        validated = validate_workflow(body, service.registry)
        # local mode runs now regardless of the workflow's configured runAt
        run_id = service.engine.schedule_run(validated, run_at=utc_now_rfc3339())
        record = service.engine.execute_run(run_id)
    except ValidationFailed as exc:
        for err in exc.report.errors:
            click.echo(f"  {err.path}: {err.reason}", err=True)
        click.echo("error: workflow is invalid", err=True)
        sys.exit(EXIT_APP)
    except FlowvizError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_APP)
    ctx.emit(
        {"runId": run_id, "state": record["state"]},
        f"run {run_id} finished: {record['state']}",
    )
    if record["state"] != "Succeeded":
        sys.exit(EXIT_APP)


@wf.command("export")
@click.argument("name")
@click.option("--format", "fmt", type=click.Choice(["cwl", "airflow"]), required=True)
@click.option("-o", "--out", type=click.Path(), default=None, help="output path (default <name>.cwl / <name>.py)")
@click.pass_obj
def wf_export(ctx: Ctx, name, fmt, out):
    """Export a stored workflow from the data directory."""
    service = ctx.service()
    try:
        validated = service.validated_workflow(name)
        document = emit(validated, service.registry, fmt)
    except FlowvizError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_APP)
    path = Path(out) if out else Path(f"{name}.{'cwl' if fmt == 'cwl' else 'py'}")
    path.write_text(document.content, encoding="utf-8")
    ctx.emit(document.as_dict(), f"wrote {path}")


# ---- run ----------------------------------------------------------------


@main.group()
def run():
    """Inspect and control runs on the server."""


@run.command("status")
@click.argument("run_id")
@click.pass_obj
def run_status(ctx: Ctx, run_id):
    doc = _request(ctx, "GET", f"/api/runs/{run_id}").json()
    tasks = ", ".join(f"{tid}={tr['state']}" for tid, tr in sorted(doc["taskRuns"].items()))
    ctx.emit(doc, f"run {run_id}: {doc['state']} ({tasks})")


@run.command("logs")
@click.argument("run_id")
@click.option("--task", "task_id", default=None)
@click.pass_obj
def run_logs(ctx: Ctx, run_id, task_id):
    doc = _request(ctx, "GET", f"/api/runs/{run_id}").json()
    tasks = [task_id] if task_id else sorted(doc["taskRuns"])
    for tid in tasks:
        text = _request(ctx, "GET", f"/api/runs/{run_id}/tasks/{tid}/log").text
        if ctx.output == "human":
            click.echo(f"--- {tid} ---")
        click.echo(text)


@run.command("cancel")
@click.argument("run_id")
@click.pass_obj
def run_cancel(ctx: Ctx, run_id):
    doc = _request(ctx, "POST", f"/api/runs/{run_id}/cancel").json()
    ctx.emit(doc, f"run {run_id} canceled")


if __name__ == "__main__":
    main()
