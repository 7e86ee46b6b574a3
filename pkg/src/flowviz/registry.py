"""Contract registry: validates, stores, and serves tool contracts."""

from __future__ import annotations

import threading
from datetime import datetime, timezone
from typing import List, Union

from .contracts import ToolContract, validate_contract, _coerce_document
from .errors import DuplicateName, NotFound, Conflict, ToolInUse, ValidationFailed
from .store import Store


def utc_now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


class ContractRegistry:
    """Registry keyed by tool name; writes are serialized, reads concurrent.

    Deletion is restricted: a tool referenced by any stored workflow cannot
    be removed.
    """

    def __init__(self, store: Store):
        self.store = store
        self._write_lock = threading.Lock()

    def register_contract(self, doc: Union[str, bytes, dict]) -> str:
        data = _coerce_document(doc)
        report = validate_contract(data)
        if not report.ok:
            raise ValidationFailed(report)
        contract = ToolContract.model_validate(data)
        stored = contract.model_dump(mode="json", exclude_none=True)
        stored["createdAt"] = utc_now_rfc3339()
        with self._write_lock:
            try:
                self.store.put("contracts", contract.name, stored)
            except Conflict:
                raise DuplicateName(f"tool {contract.name!r} already registered") from None
        return contract.name

    def get_tool(self, name: str) -> dict:
        try:
            return self.store.get("contracts", name)
        except NotFound:
            raise NotFound(f"tool {name!r} not found") from None

    def get_contract(self, name: str) -> ToolContract:
        return ToolContract.model_validate(self.get_tool(name))

    def list_tools(self) -> List[dict]:
        """Summaries sorted by name ascending."""
        out = []
        for name in self.store.list("contracts"):
            doc = self.store.get("contracts", name)
            out.append(
                {
                    "name": doc["name"],
                    "description": doc.get("description", ""),
                    "author": doc.get("author", ""),
                    "kind": doc["access"]["kind"],
                    "createdAt": doc.get("createdAt"),
                }
            )
        return out

    def delete_tool(self, name: str) -> None:
        with self._write_lock:
            if not self.store.exists("contracts", name):
                raise NotFound(f"tool {name!r} not found")
            users = self._referencing_workflows(name)
            if users:
                raise ToolInUse(
                    f"tool {name!r} is referenced by workflows: {', '.join(sorted(users))}"
                )
            self.store.delete("contracts", name)

    def _referencing_workflows(self, tool_name: str) -> List[str]:
        found = []
        for wf_name in self.store.list("workflows"):
            wf = self.store.get("workflows", wf_name)
            if any(t.get("tool") == tool_name for t in wf.get("tasks", [])):
                found.append(wf_name)
        return found
