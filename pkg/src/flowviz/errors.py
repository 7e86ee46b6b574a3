"""Exception hierarchy shared across the flowviz modules."""

from __future__ import annotations


class FlowvizError(Exception):
    """Base class for all flowviz errors."""

    code = "error"


class MalformedDocument(FlowvizError):
    code = "malformed_document"


class ValidationFailed(FlowvizError):
    """A document failed validation; carries the field-path report."""

    code = "validation_failed"

    def __init__(self, report):
        self.report = report
        super().__init__(str(report))


class NotFound(FlowvizError):
    code = "not_found"


class Conflict(FlowvizError):
    code = "conflict"


class DuplicateName(Conflict):
    code = "duplicate_name"


class ToolInUse(Conflict):
    code = "tool_in_use"


class DuplicateActiveRun(Conflict):
    code = "duplicate_active_run"


class NotCancelable(Conflict):
    code = "not_cancelable"


class CycleDetected(FlowvizError):
    code = "cycle_detected"

    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(self.cycle))


class MissingUpstreamOutput(FlowvizError):
    code = "missing_upstream_output"


class EngineFault(FlowvizError):
    code = "engine_fault"
