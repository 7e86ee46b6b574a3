"""Durable persistence for contracts, workflows, runs, and logs.

Two interchangeable backends: a directory-per-namespace file store for real
deployments and an in-memory store for unit tests. Writes are atomic per
document (temp file + rename) and serialized per store instance; readers
never observe a torn document.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .errors import Conflict, NotFound

NAMESPACES = ("contracts", "workflows", "runs")


class Store:
    """Abstract document store over named namespaces plus per-task logs."""

    def put(self, namespace: str, key: str, document: dict, overwrite: bool = False) -> None:
        raise NotImplementedError

    def get(self, namespace: str, key: str) -> dict:
        raise NotImplementedError

    def list(self, namespace: str) -> List[str]:
        raise NotImplementedError

    def delete(self, namespace: str, key: str) -> None:
        raise NotImplementedError

    def exists(self, namespace: str, key: str) -> bool:
        try:
            self.get(namespace, key)
            return True
        except NotFound:
            return False

    def append_log(self, run_id: str, task_id: str, chunk: bytes) -> None:
        raise NotImplementedError

    def read_log(self, run_id: str, task_id: str) -> bytes:
        raise NotImplementedError


def _check_namespace(namespace: str) -> None:
    if namespace not in NAMESPACES:
        raise ValueError(f"unknown namespace: {namespace}")


class FileStore(Store):
    """File-backed store.

    Layout under the data directory:
      contracts/<name>.json
      workflows/<name>.json
      runs/<runId>/run.json
      runs/<runId>/<taskId>.log
    """

    def __init__(self, data_dir: str | os.PathLike):
        self.root = Path(data_dir)
        self._lock = threading.RLock()
        for ns in NAMESPACES:
            (self.root / ns).mkdir(parents=True, exist_ok=True)

    def _doc_path(self, namespace: str, key: str) -> Path:
        _check_namespace(namespace)
        if "/" in key or key in ("", ".", ".."):
            raise ValueError(f"invalid key: {key!r}")
        if namespace == "runs":
            return self.root / "runs" / key / "run.json"
        return self.root / namespace / f"{key}.json"

    def put(self, namespace: str, key: str, document: dict, overwrite: bool = False) -> None:
        path = self._doc_path(namespace, key)
        with self._lock:
            if path.exists() and not overwrite:
                raise Conflict(f"{namespace}/{key} already exists")
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_name(path.name + ".tmp")
            tmp.write_text(json.dumps(document, indent=2, sort_keys=True), encoding="utf-8")
            os.replace(tmp, path)

    def get(self, namespace: str, key: str) -> dict:
        path = self._doc_path(namespace, key)
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise NotFound(f"{namespace}/{key}") from None

    def list(self, namespace: str) -> List[str]:
        _check_namespace(namespace)
        base = self.root / namespace
        if namespace == "runs":
            keys = [p.name for p in base.iterdir() if (p / "run.json").exists()]
        else:
            keys = [p.stem for p in base.glob("*.json")]
        return sorted(keys)

    def delete(self, namespace: str, key: str) -> None:
        path = self._doc_path(namespace, key)
        with self._lock:
            if not path.exists():
                raise NotFound(f"{namespace}/{key}")
            path.unlink()

    def _log_path(self, run_id: str, task_id: str) -> Path:
        return self.root / "runs" / run_id / f"{task_id}.log"

    def append_log(self, run_id: str, task_id: str, chunk: bytes) -> None:
        if not (self.root / "runs" / run_id / "run.json").exists():
            raise NotFound(f"runs/{run_id}")
        path = self._log_path(run_id, task_id)
        with open(path, "ab") as fh:
            fh.write(chunk)
            fh.flush()
            os.fsync(fh.fileno())

    def read_log(self, run_id: str, task_id: str) -> bytes:
        if not (self.root / "runs" / run_id / "run.json").exists():
            raise NotFound(f"runs/{run_id}")
        try:
            return self._log_path(run_id, task_id).read_bytes()
        except FileNotFoundError:
            return b""

    def run_dir(self, run_id: str) -> Path:
        return self.root / "runs" / run_id


class MemoryStore(Store):
    """Dict-backed store with the same semantics, for unit tests."""

    def __init__(self):
        self._lock = threading.RLock()
        self._docs: Dict[str, Dict[str, dict]] = {ns: {} for ns in NAMESPACES}
        self._logs: Dict[Tuple[str, str], bytearray] = {}

    def put(self, namespace: str, key: str, document: dict, overwrite: bool = False) -> None:
        _check_namespace(namespace)
        with self._lock:
            if key in self._docs[namespace] and not overwrite:
                raise Conflict(f"{namespace}/{key} already exists")
            # round-trip through JSON so callers cannot mutate stored state
            self._docs[namespace][key] = json.loads(json.dumps(document))

    def get(self, namespace: str, key: str) -> dict:
        _check_namespace(namespace)
        with self._lock:
            try:
                return json.loads(json.dumps(self._docs[namespace][key]))
            except KeyError:
                raise NotFound(f"{namespace}/{key}") from None

    def list(self, namespace: str) -> List[str]:
        _check_namespace(namespace)
        with self._lock:
            return sorted(self._docs[namespace])

    def delete(self, namespace: str, key: str) -> None:
        _check_namespace(namespace)
        with self._lock:
            if key not in self._docs[namespace]:
                raise NotFound(f"{namespace}/{key}")
            del self._docs[namespace][key]

    def append_log(self, run_id: str, task_id: str, chunk: bytes) -> None:
        with self._lock:
            if run_id not in self._docs["runs"]:
                raise NotFound(f"runs/{run_id}")
            self._logs.setdefault((run_id, task_id), bytearray()).extend(chunk)

    def read_log(self, run_id: str, task_id: str) -> bytes:
        with self._lock:
            if run_id not in self._docs["runs"]:
                raise NotFound(f"runs/{run_id}")
            return bytes(self._logs.get((run_id, task_id), b""))
