"""flowviz: contract-based tool integration, DAG workflow execution, and
Airflow/CWL export."""

from .contracts import ToolContract, ValidationReport, validate_contract
from .engine import Engine, EngineConfig
from .exporters import ExportDocument, emit_airflow_script, emit_cwl
from .registry import ContractRegistry
from .service import FlowvizService
from .store import FileStore, MemoryStore
from .workflows import (
    Invocation,
    ValidatedWorkflow,
    WorkflowSpec,
    resolve_bindings,
    topological_order,
    validate_workflow,
)

__version__ = "0.1.0"

__all__ = [
    "ToolContract",
    "ValidationReport",
    "validate_contract",
    "Engine",
    "EngineConfig",
    "ExportDocument",
    "emit_airflow_script",
    "emit_cwl",
    "ContractRegistry",
    "FlowvizService",
    "FileStore",
    "MemoryStore",
    "Invocation",
    "ValidatedWorkflow",
    "WorkflowSpec",
    "resolve_bindings",
    "topological_order",
    "validate_workflow",
    "__version__",
]
