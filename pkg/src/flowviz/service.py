"""Service facade wiring store, registry, and engine together. REST
handlers and the CLI's local mode both go through this layer so behavior
stays identical over both surfaces."""

from __future__ import annotations

import threading
from typing import List, Optional, Union

from .engine import Engine, EngineConfig
from .errors import Conflict, DuplicateName, NotFound
from .registry import ContractRegistry
from .store import FileStore, Store
from .workflows import ValidatedWorkflow, validate_workflow


class FlowvizService:
    def __init__(self, store: Store, config: Optional[EngineConfig] = None):
        self.store = store
        self.registry = ContractRegistry(store)
        self.engine = Engine(store, self.registry, config)
        self._wf_lock = threading.Lock()

    @classmethod
    def from_config(cls, config: EngineConfig) -> "FlowvizService":
        return cls(FileStore(config.data_dir), config)

    # ---- workflows ------------------------------------------------------

    def create_workflow(self, doc: Union[str, bytes, dict]) -> str:
        validated = validate_workflow(doc, self.registry)
        name = validated.spec.name
        with self._wf_lock:
            try:
                self.store.put(
                    "workflows", name, validated.spec.model_dump(mode="json", exclude_none=True)
                )
            except Conflict:
                raise DuplicateName(f"workflow {name!r} already exists") from None
        return name

    def list_workflows(self) -> List[str]:
        return self.store.list("workflows")

    def get_workflow(self, name: str) -> dict:
        try:
            return self.store.get("workflows", name)
        except NotFound:
            raise NotFound(f"workflow {name!r} not found") from None

    def delete_workflow(self, name: str) -> None:
        try:
            self.store.delete("workflows", name)
        except NotFound:
            raise NotFound(f"workflow {name!r} not found") from None

    def validated_workflow(self, name: str) -> ValidatedWorkflow:
        return validate_workflow(self.get_workflow(name), self.registry)

    # ---- runs -----------------------------------------------------------

    def trigger_run(self, workflow_name: str, run_at: Optional[str] = None) -> str:
        return self.engine.schedule_run(self.validated_workflow(workflow_name), run_at=run_at)
