"""REST surface: thin FastAPI handlers over the service facade. Handlers
hold no business logic; every error is mapped to a machine-readable
ApiError body."""

from __future__ import annotations

import os
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse

from .engine import EngineConfig
from .errors import (
    Conflict,
    FlowvizError,
    MalformedDocument,
    NotFound,
    ValidationFailed,
)
from .exporters import emit
from .service import FlowvizService
from .workflows import ValidatedWorkflow, WorkflowSpec


@dataclass
class ServerConfig:
    port: int = 7070
    host: str = "127.0.0.1"
    api_token: Optional[str] = None
    lock_reads: bool = False
    engine: EngineConfig = field(default_factory=EngineConfig)

    @classmethod
    def from_env(cls) -> "ServerConfig":
        return cls(
            port=int(os.environ.get("FLOWVIZ_PORT", "7070")),
            host=os.environ.get("FLOWVIZ_HOST", "127.0.0.1"),
            api_token=os.environ.get("FLOWVIZ_API_TOKEN") or None,
            lock_reads=os.environ.get("FLOWVIZ_LOCK_READS", "") in ("1", "true"),
            engine=EngineConfig.from_env(),
        )


def _error_response(status: int, code: str, detail: str, field_errors=None) -> JSONResponse:
    body = {"status": status, "code": code, "detail": detail}
    if field_errors is not None:
        body["fieldErrors"] = field_errors
    return JSONResponse(status_code=status, content=body)


def _status_for(exc: FlowvizError) -> int:
    if isinstance(exc, (ValidationFailed, MalformedDocument)):
        return 400
    if isinstance(exc, NotFound):
        return 404
    if isinstance(exc, Conflict):
        return 409
    return 500


def _public_run(record: dict) -> dict:
    record = dict(record)
    record.pop("workflow", None)
    return record


def create_app(service: FlowvizService, config: Optional[ServerConfig] = None) -> FastAPI:
    config = config or ServerConfig()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        service.engine.start()
        try:
            yield
        finally:
            service.engine.stop()

    app = FastAPI(title="flowviz", lifespan=lifespan)
    app.state.service = service
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(FlowvizError)
    async def flowviz_error_handler(_request: Request, exc: FlowvizError):
        field_errors = None
        if isinstance(exc, ValidationFailed):
            field_errors = [e.as_dict() for e in exc.report.errors]
        return _error_response(_status_for(exc), exc.code, str(exc), field_errors)

    @app.middleware("http")
    async def auth_middleware(request: Request, call_next):
        if config.api_token and request.url.path.startswith("/api"):
            needs_auth = request.method not in ("GET", "HEAD", "OPTIONS") or config.lock_reads
            if needs_auth:
                header = request.headers.get("authorization", "")
                if header != f"Bearer {config.api_token}":
                    return _error_response(401, "unauthorized", "missing or invalid bearer token")
        return await call_next(request)

    # ---- health ---------------------------------------------------------

    @app.get("/api/health")
    async def health():
        return {"status": "ok"}

    # ---- tools ----------------------------------------------------------

    @app.post("/api/tools", status_code=201)
    async def register_tool(request: Request):
        doc = await request.body()
        name = service.registry.register_contract(doc)
        return {"name": name}

    @app.get("/api/tools")
    async def list_tools():
        return service.registry.list_tools()

    @app.get("/api/tools/{name}")
    async def get_tool(name: str):
        return service.registry.get_tool(name)

    @app.delete("/api/tools/{name}")
    async def delete_tool(name: str):
        service.registry.delete_tool(name)
        return {"deleted": name}

    # ---- workflows ------------------------------------------------------

    @app.post("/api/workflows", status_code=201)
    async def create_workflow(request: Request):
        doc = await request.body()
        name = service.create_workflow(doc)
        return {"name": name}

    @app.get("/api/workflows")
    async def list_workflows():
        return service.list_workflows()

    @app.get("/api/workflows/{name}")
    async def get_workflow(name: str):
        return service.get_workflow(name)

    @app.delete("/api/workflows/{name}")
    async def delete_workflow(name: str):
        service.delete_workflow(name)
        return {"deleted": name}

    @app.get("/api/workflows/{name}/export")
    async def export_workflow(name: str, format: str = "airflow"):
        validated = service.validated_workflow(name)
        return _export_response(service, validated, format)

    @app.post("/api/workflows/{name}/runs", status_code=202)
    async def trigger_run(name: str, request: Request):
        body = {}
        raw = await request.body()
        if raw:
            import json

            try:
                body = json.loads(raw)
            except json.JSONDecodeError:
                raise MalformedDocument("run request body must be JSON")
        run_id = service.trigger_run(name, run_at=body.get("runAt"))
        return {"runId": run_id}

    # ---- runs -----------------------------------------------------------

    @app.get("/api/runs")
    async def list_runs():
        return service.store.list("runs")

    @app.get("/api/runs/{run_id}")
    async def get_run(run_id: str):
        return _public_run(service.engine.get_run(run_id))

    @app.post("/api/runs/{run_id}/cancel")
    async def cancel_run(run_id: str):
        service.engine.cancel_run(run_id)
        return {"canceled": run_id}

    @app.get("/api/runs/{run_id}/tasks/{task_id}/log")
    async def task_log(run_id: str, task_id: str):
        service.engine.get_run(run_id)  # 404 on unknown run
        data = service.store.read_log(run_id, task_id)
        return PlainTextResponse(data.decode("utf-8", errors="replace"))

    @app.get("/api/runs/{run_id}/dsl")
    async def run_dsl(run_id: str):
        record = service.engine.get_run(run_id)
        return PlainTextResponse(record["dslSource"])

    @app.get("/api/runs/{run_id}/export")
    async def export_run(run_id: str, format: str = "airflow"):
        record = service.engine.get_run(run_id)
        snapshot = record["workflow"]
        validated = ValidatedWorkflow(
            spec=WorkflowSpec.model_validate(snapshot["spec"]),
            adjacency=[tuple(e) for e in snapshot["adjacency"]],
            topo_order=list(snapshot["topoOrder"]),
        )
        return _export_response(service, validated, format)

    return app


def _export_response(service: FlowvizService, validated, fmt: str) -> Response:
    if fmt not in ("airflow", "cwl"):
        return _error_response(400, "bad_format", "format must be 'airflow' or 'cwl'")
    document = emit(validated, service.registry, fmt)
    if fmt == "cwl":
        media, ext = "application/x-yaml", "cwl"
    else:
        media, ext = "text/plain", "py"
    return Response(
        content=document.content,
        media_type=media,
        headers={
            "Content-Disposition": f'attachment; filename="{document.workflow_name}.{ext}"'
        },
    )


def serve(config: Optional[ServerConfig] = None) -> None:
    """Blocking entry point: build the service from config and run uvicorn."""
    import uvicorn

    config = config or ServerConfig.from_env()
    service = FlowvizService.from_config(config.engine)
    app = create_app(service, config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
