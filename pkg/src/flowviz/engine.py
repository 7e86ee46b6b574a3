"""Embedded workflow execution engine: a tick-loop scheduler that fires due
runs, plus a per-run dispatcher that executes tasks in dependency order with
bounded parallelism, capturing logs and outputs for every task.
"""

from __future__ import annotations

import os
import shutil
import subprocess
import threading
import time
import uuid
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Set

import httpx

from .errors import (
    DuplicateActiveRun,
    EngineFault,
    NotCancelable,
    NotFound,
)
from .exporters import emit_airflow_script
from .registry import ContractRegistry, utc_now_rfc3339
from .store import FileStore, Store
from .workflows import (
    Invocation,
    ValidatedWorkflow,
    WorkflowSpec,
    parse_rfc3339,
    resolve_bindings,
)

RUN_ACTIVE_STATES = ("Scheduled", "Running")
RUN_TERMINAL_STATES = ("Succeeded", "Failed", "Canceled")
RUN_LOG_TASK = "_run"


@dataclass
class EngineConfig:
    data_dir: str = "./data"
    max_parallel: int = 4
    task_timeout_secs: float = 300.0
    sched_tick_ms: int = 500

    @classmethod
    def from_env(cls) -> "EngineConfig":
        return cls(
            data_dir=os.environ.get("FLOWVIZ_DATA_DIR", "./data"),
            max_parallel=int(os.environ.get("FLOWVIZ_MAX_PARALLEL", "4")),
            task_timeout_secs=float(os.environ.get("FLOWVIZ_TASK_TIMEOUT_SECS", "300")),
            sched_tick_ms=int(os.environ.get("FLOWVIZ_SCHED_TICK_MS", "500")),
        )


def _now() -> datetime:
    return datetime.now(timezone.utc)


def _new_task_run(task_id: str) -> dict:
    return {
        "taskId": task_id,
        "state": "Pending",
        "exitInfo": None,
        "logRef": None,
        "outputPath": None,
        "startedAt": None,
        "finishedAt": None,
    }


class Engine:
    """Owns run records and their execution. One scheduler loop fires due
    runs; each firing run gets its own dispatcher thread. RunRecord
    mutations go through a per-run lock so observers see consistent
    snapshots."""

    def __init__(self, store: Store, registry: ContractRegistry, config: Optional[EngineConfig] = None):
        self.store = store
        self.registry = registry
        self.config = config or EngineConfig()
        self._lock = threading.RLock()
        self._run_locks: Dict[str, threading.RLock] = {}
        self._stop = threading.Event()
        self._scheduler: Optional[threading.Thread] = None
        self._dispatchers: List[threading.Thread] = []
        self._firing: Set[str] = set()
        self.events: List[tuple] = []  # (monotonic, runId, taskId, event) for tests

    # ---- record helpers -------------------------------------------------

    def _run_lock(self, run_id: str) -> threading.RLock:
        with self._lock:
            return self._run_locks.setdefault(run_id, threading.RLock())

    def _load(self, run_id: str) -> dict:
        try:
            return self.store.get("runs", run_id)
        except NotFound:
            raise NotFound(f"run {run_id!r} not found") from None

    def _save(self, record: dict) -> None:
        self.store.put("runs", record["runId"], record, overwrite=True)

    def _event(self, run_id: str, task_id: Optional[str], event: str) -> None:
        with self._lock:
            self.events.append((time.monotonic(), run_id, task_id, event))

    def _run_dir(self, run_id: str) -> Path:
        if isinstance(self.store, FileStore):
            return self.store.run_dir(run_id)
        base = Path(self.config.data_dir) / "runs" / run_id
        base.mkdir(parents=True, exist_ok=True)
        return base

    # ---- public API -----------------------------------------------------

    def schedule_run(self, workflow: ValidatedWorkflow, run_at: Optional[str] = None) -> str:
        """Persist a Scheduled run with its DSL source already emitted.
        Past (or absent) runAt fires on the next scheduler tick."""
        spec = workflow.spec
        effective_run_at = run_at if run_at is not None else spec.schedule.runAt
        scheduled_for = effective_run_at or utc_now_rfc3339()
        parse_rfc3339(scheduled_for)  # reject malformed timestamps up front

        dsl = emit_airflow_script(workflow, self.registry).content
        run_id = "r-" + uuid.uuid4().hex[:12]
        with self._lock:
            for other_id in self.store.list("runs"):
                other = self.store.get("runs", other_id)
                if other["workflowName"] == spec.name and other["state"] in RUN_ACTIVE_STATES:
                    raise DuplicateActiveRun(
                        f"workflow {spec.name!r} already has active run {other_id}"
                    )
            record = {
                "runId": run_id,
                "workflowName": spec.name,
                "owner": spec.owner,
                "state": "Scheduled",
                "scheduledFor": scheduled_for,
                "startedAt": None,
                "finishedAt": None,
                "taskRuns": {t.id: _new_task_run(t.id) for t in spec.tasks},
                "dslSource": dsl,
                "workflow": workflow.as_dict(),
            }
            self._save(record)
        run_dir = self._run_dir(run_id)
        run_dir.mkdir(parents=True, exist_ok=True)
        (run_dir / "dag_source.txt").write_text(dsl, encoding="utf-8")
        self._event(run_id, None, "scheduled")
        return run_id

    def cancel_run(self, run_id: str) -> None:
        with self._run_lock(run_id):
            record = self._load(run_id)
            if record["state"] != "Scheduled":
                raise NotCancelable(f"run {run_id} is {record['state']}")
            record["state"] = "Canceled"
            record["finishedAt"] = utc_now_rfc3339()
            self._save(record)
        self._event(run_id, None, "canceled")

    def get_run(self, run_id: str) -> dict:
        return self._load(run_id)

    # ---- scheduler loop -------------------------------------------------

    def start(self) -> None:
        """Start the tick loop; re-scan persisted runs first so Scheduled
        runs survive restarts and stale Running runs are failed."""
        self._boot_rescan()
        self._stop.clear()
        self._scheduler = threading.Thread(target=self._tick_loop, name="flowviz-scheduler", daemon=True)
        self._scheduler.start()

    def stop(self) -> None:
        self._stop.set()
        if self._scheduler:
            self._scheduler.join(timeout=5)
            self._scheduler = None
        for t in list(self._dispatchers):
            t.join(timeout=30)

    def _boot_rescan(self) -> None:
        for run_id in self.store.list("runs"):
            record = self.store.get("runs", run_id)
            if record["state"] == "Running":
                # engine died mid-run; tasks may be half-done, fail the run
                with self._run_lock(run_id):
                    record = self._load(run_id)
                    record["state"] = "Failed"
                    record["finishedAt"] = utc_now_rfc3339()
                    for tr in record["taskRuns"].values():
                        if tr["state"] in ("Pending", "Running"):
                            tr["state"] = "Failed"
                            tr["finishedAt"] = utc_now_rfc3339()
                    self._save(record)
                try:
                    self.store.append_log(run_id, RUN_LOG_TASK, b"engine restarted mid-run; run marked Failed\n")
                except NotFound:
                    pass

    def _tick_loop(self) -> None:
        while not self._stop.is_set():
            try:
                self._fire_due_runs()
            except Exception:  # scheduler must survive any single bad run
                pass
            self._stop.wait(self.config.sched_tick_ms / 1000.0)

    def _fire_due_runs(self) -> None:
        now = _now()
        for run_id in self.store.list("runs"):
            with self._lock:
                if run_id in self._firing:
                    continue
            try:
                record = self.store.get("runs", run_id)
            except NotFound:
                continue
            if record["state"] != "Scheduled":
                continue
            if parse_rfc3339(record["scheduledFor"]) > now:
                continue
            with self._lock:
                if run_id in self._firing:
                    continue
                self._firing.add(run_id)
            thread = threading.Thread(
                target=self._dispatch_and_forget, args=(run_id,), name=f"flowviz-run-{run_id}", daemon=True
            )
            self._dispatchers.append(thread)
            thread.start()

    def _dispatch_and_forget(self, run_id: str) -> None:
        try:
            self.execute_run(run_id)
        except Exception as exc:
            try:
                with self._run_lock(run_id):
                    record = self._load(run_id)
                    if record["state"] not in RUN_TERMINAL_STATES:
                        record["state"] = "Failed"
                        record["finishedAt"] = utc_now_rfc3339()
                        self._save(record)
                self.store.append_log(run_id, RUN_LOG_TASK, f"engine fault: {exc}\n".encode())
            except Exception:
                pass
        finally:
            with self._lock:
                self._firing.discard(run_id)

    # ---- run execution --------------------------------------------------

    def execute_run(self, run_id: str) -> dict:
        """Run every task of a Scheduled run to a terminal state, honoring
        dependency edges, skipping downstream of failures, and running up
        to max_parallel ready tasks concurrently."""
        lock = self._run_lock(run_id)
        with lock:
            record = self._load(run_id)
            if record["state"] == "Canceled":
                return record
            if record["state"] != "Scheduled":
                raise EngineFault(f"run {run_id} is {record['state']}, expected Scheduled")
            record["state"] = "Running"
            record["startedAt"] = utc_now_rfc3339()
            self._save(record)
        self._event(run_id, None, "run_started")

        workflow = ValidatedWorkflow(
            spec=WorkflowSpec.model_validate(record["workflow"]["spec"]),
            adjacency=[tuple(e) for e in record["workflow"]["adjacency"]],
            topo_order=list(record["workflow"]["topoOrder"]),
        )
        deps: Dict[str, List[str]] = {t.id: list(t.dependsOn) for t in workflow.spec.tasks}
        run_dir = self._run_dir(run_id)
        upstream_outputs: Dict[str, str] = {}
        states: Dict[str, str] = {tid: "Pending" for tid in deps}
        futures: Dict[Future, str] = {}

        def set_task(task_id: str, **updates) -> None:
            with lock:
                rec = self._load(run_id)
                rec["taskRuns"][task_id].update(updates)
                self._save(rec)

        with ThreadPoolExecutor(max_workers=self.config.max_parallel) as pool:
            while True:
                # cascade skips from failures
                changed = True
                while changed:
                    changed = False
                    for tid, st in states.items():
                        if st == "Pending" and any(
                            states[d] in ("Failed", "Skipped") for d in deps[tid]
                        ):
                            states[tid] = "Skipped"
                            set_task(tid, state="Skipped")
                            self._event(run_id, tid, "skipped")
                            changed = True

                ready = sorted(
                    tid
                    for tid, st in states.items()
                    if st == "Pending" and all(states[d] == "Succeeded" for d in deps[tid])
                )
                # submit one at a time so sequential mode follows topo order
                while ready and len(futures) < self.config.max_parallel:
                    tid = ready.pop(0)
                    states[tid] = "Running"
                    task = workflow.task(tid)
                    contract = self.registry.get_contract(task.tool)
                    future = pool.submit(
                        self._run_task, run_id, task, contract, dict(upstream_outputs), str(run_dir), set_task
                    )
                    futures[future] = tid

                if not futures:
                    break
                done, _ = wait(futures, return_when=FIRST_COMPLETED)
                for fut in done:
                    tid = futures.pop(fut)
                    state, output_path = fut.result()
                    states[tid] = state
                    if state == "Succeeded" and output_path:
                        upstream_outputs[tid] = output_path

        final = "Succeeded" if all(s == "Succeeded" for s in states.values()) else "Failed"
        with lock:
            record = self._load(run_id)
            record["state"] = final
            record["finishedAt"] = utc_now_rfc3339()
            self._save(record)
        self._event(run_id, None, f"run_{final.lower()}")
        return self._load(run_id)

    def _run_task(self, run_id, task, contract, upstream_outputs, run_dir, set_task):
        tid = task.id
        started = utc_now_rfc3339()
        set_task(tid, state="Running", startedAt=started, logRef=f"{run_id}/{tid}")
        self._event(run_id, tid, "task_started")
        try:
            invocation = resolve_bindings(task, contract, upstream_outputs, run_dir)
            task_run = self.execute_task(invocation, run_id)
        except Exception as exc:
            self._append_log(run_id, tid, f"task resolution/execution fault: {exc}\n")
            task_run = {"state": "Failed", "exitInfo": None, "outputPath": None}
        finished = utc_now_rfc3339()
        set_task(
            tid,
            state=task_run["state"],
            exitInfo=task_run.get("exitInfo"),
            outputPath=task_run.get("outputPath"),
            finishedAt=finished,
        )
        self._event(run_id, tid, f"task_{task_run['state'].lower()}")
        return task_run["state"], task_run.get("outputPath")

    def _append_log(self, run_id: str, task_id: str, text: str) -> None:
        try:
            self.store.append_log(run_id, task_id, text.encode("utf-8", errors="replace"))
        except NotFound:
            pass

    def execute_task(self, invocation: Invocation, run_id: str) -> dict:
        """Execute one fully-resolved invocation, capturing its log and
        materializing its output file. Returns a partial TaskRun dict."""
        if invocation.kind == "process":
            return self._execute_process(invocation, run_id)
        return self._execute_http(invocation, run_id)

    def _execute_process(self, invocation: Invocation, run_id: str) -> dict:
        tid = invocation.task_id
        proc = invocation.process
        workdir = Path(proc["workdir"])
        workdir.mkdir(parents=True, exist_ok=True)
        self._append_log(run_id, tid, "$ " + " ".join(proc["argv"]) + "\n")
        try:
            completed = subprocess.run(
                proc["argv"],
                cwd=str(workdir),
                capture_output=True,
                timeout=self.config.task_timeout_secs,
            )
        except FileNotFoundError as exc:
            self._append_log(run_id, tid, f"spawn failure: {exc}\n")
            return {"state": "Failed", "exitInfo": None, "outputPath": None}
        except subprocess.TimeoutExpired:
            self._append_log(run_id, tid, f"timeout after {self.config.task_timeout_secs}s\n")
            return {"state": "Failed", "exitInfo": None, "outputPath": None}
        if completed.stdout:
            self._append_log(run_id, tid, completed.stdout.decode("utf-8", errors="replace"))
        if completed.stderr:
            self._append_log(run_id, tid, completed.stderr.decode("utf-8", errors="replace"))
        self._append_log(run_id, tid, f"exit code: {completed.returncode}\n")
        if completed.returncode != 0:
            return {"state": "Failed", "exitInfo": completed.returncode, "outputPath": None}

        if invocation.output_mode == "file":
            declared = Path(invocation.declared_output)
            if not declared.is_absolute():
                declared = workdir / declared
            if not declared.exists():
                self._append_log(run_id, tid, f"declared output file missing: {declared}\n")
                return {"state": "Failed", "exitInfo": completed.returncode, "outputPath": None}
            output_path = str(declared)
        else:
            Path(invocation.output_sink).write_bytes(completed.stdout)
            output_path = invocation.output_sink
        return {"state": "Succeeded", "exitInfo": completed.returncode, "outputPath": output_path}

    def _execute_http(self, invocation: Invocation, run_id: str) -> dict:
        tid = invocation.task_id
        http = invocation.http
        self._append_log(run_id, tid, f"{http['method']} {http['url']}\n")
        try:
            response = httpx.request(
                http["method"],
                http["url"],
                headers=http["headers"],
                json=http["body"],
                timeout=self.config.task_timeout_secs,
            )
        except httpx.HTTPError as exc:
            self._append_log(run_id, tid, f"network error: {exc}\n")
            return {"state": "Failed", "exitInfo": None, "outputPath": None}
        self._append_log(run_id, tid, f"status: {response.status_code}\n")
        self._append_log(run_id, tid, response.text + "\n")
        Path(invocation.output_sink).write_text(response.text, encoding="utf-8")
        state = "Succeeded" if 200 <= response.status_code < 300 else "Failed"
        return {
            "state": state,
            "exitInfo": response.status_code,
            "outputPath": invocation.output_sink if state == "Succeeded" else None,
        }
