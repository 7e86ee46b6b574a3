"""Tool contracts: the declarative interface through which the framework
learns how to invoke an external tool, either a local program (library
access) or a remote HTTP service (api access).

Structural checks (shape, types, unknown fields) are handled by pydantic in
strict mode; cross-field invariants are checked separately so a single
validation pass reports every problem with its field path.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, List, Optional, Union
from urllib.parse import urlparse

from pydantic import BaseModel, ConfigDict, ValidationError

from .errors import MalformedDocument

NAME_RE = re.compile(r"^[A-Za-z0-9_-]{1,64}$")
PLACEHOLDER_RE = re.compile(r"\{([^{}/]+)\}")


class ValueType(str, Enum):
    string = "string"
    int = "int"
    float = "float"
    bool = "bool"
    file = "file"


class AccessKind(str, Enum):
    api = "api"
    library = "library"


class OutputMode(str, Enum):
    stdout = "stdout"
    file = "file"


class HttpMethod(str, Enum):
    GET = "GET"
    POST = "POST"
    PUT = "PUT"
    DELETE = "DELETE"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ParamRule(_Strict):
    name: str
    flag: Optional[str] = None
    valueType: ValueType
    required: bool = False
    default: Optional[Any] = None
    allowedValues: Optional[List[Any]] = None


class CommandSpec(_Strict):
    name: str
    subcommand: Optional[str] = None
    params: List[ParamRule] = []
    outputMode: OutputMode = OutputMode.stdout
    outputFileParam: Optional[str] = None


class EndpointSpec(_Strict):
    name: str
    path: str
    method: HttpMethod
    allowedHeaders: List[str] = []
    bodyFields: List[ParamRule] = []
    queryFields: List[ParamRule] = []


class ApiSpec(_Strict):
    baseUrl: str
    endpoints: List[EndpointSpec]


class LibrarySpec(_Strict):
    program: str
    commands: List[CommandSpec]


class AccessSpec(_Strict):
    kind: AccessKind
    api: Optional[ApiSpec] = None
    library: Optional[LibrarySpec] = None


class ToolContract(_Strict):
    name: str
    description: str = ""
    author: str = ""
    access: AccessSpec
    createdAt: Optional[str] = None


@dataclass
class FieldError:
    path: str
    reason: str

    def as_dict(self) -> dict:
        return {"path": self.path, "reason": self.reason}


@dataclass
class ValidationReport:
    errors: List[FieldError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def add(self, path: str, reason: str) -> None:
        self.errors.append(FieldError(path, reason))

    def as_dict(self) -> dict:
        return {"ok": self.ok, "errors": [e.as_dict() for e in self.errors]}

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(f"{e.path}: {e.reason}" for e in self.errors)


def _loc_to_path(loc: tuple) -> str:
    parts: List[str] = []
    for item in loc:
        if isinstance(item, int):
            parts[-1] = f"{parts[-1]}[{item}]" if parts else f"[{item}]"
        else:
            parts.append(str(item))
    return ".".join(parts) or "<root>"


def _coerce_document(doc: Union[str, bytes, dict]) -> dict:
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedDocument("document must be a JSON object")
    return doc


def _value_matches_type(value: Any, value_type: ValueType) -> bool:
    if value_type is ValueType.string or value_type is ValueType.file:
        return isinstance(value, str)
    if value_type is ValueType.int:
        return isinstance(value, int) and not isinstance(value, bool)
    if value_type is ValueType.float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if value_type is ValueType.bool:
        return isinstance(value, bool)
    return False


def _check_param_rules(params: List[ParamRule], base: str, report: ValidationReport) -> None:
    seen = set()
    for i, p in enumerate(params):
        path = f"{base}[{i}]"
        if not NAME_RE.match(p.name):
            report.add(f"{path}.name", "param name must match [A-Za-z0-9_-]{1,64}")
        if p.name in seen:
            report.add(f"{path}.name", f"duplicate param name {p.name!r}")
        seen.add(p.name)
        if p.required and p.default is not None:
            report.add(f"{path}.default", "required params have no default")
        if p.default is not None and not _value_matches_type(p.default, p.valueType):
            report.add(f"{path}.default", f"default does not match valueType {p.valueType.value}")
        if p.allowedValues is not None:
            for j, v in enumerate(p.allowedValues):
                if not _value_matches_type(v, p.valueType):
                    report.add(
                        f"{path}.allowedValues[{j}]",
                        f"value does not match valueType {p.valueType.value}",
                    )
            if p.default is not None and p.default not in p.allowedValues:
                report.add(f"{path}.default", "default must be a member of allowedValues")


def _check_api(api: ApiSpec, report: ValidationReport) -> None:
    parsed = urlparse(api.baseUrl)
    if parsed.scheme not in ("http", "https") or not parsed.netloc:
        report.add("access.api.baseUrl", "must be an absolute http(s) URL")
    if not api.endpoints:
        report.add("access.api.endpoints", "at least one endpoint is required")
    seen = set()
    for i, ep in enumerate(api.endpoints):
        path = f"access.api.endpoints[{i}]"
        if not NAME_RE.match(ep.name):
            report.add(f"{path}.name", "endpoint name must match [A-Za-z0-9_-]{1,64}")
        if ep.name in seen:
            report.add(f"{path}.name", f"duplicate endpoint name {ep.name!r}")
        seen.add(ep.name)
        declared = {p.name for p in ep.bodyFields} | {p.name for p in ep.queryFields}
        for placeholder in PLACEHOLDER_RE.findall(ep.path):
            if placeholder not in declared:
                report.add(
                    f"{path}.path",
                    f"placeholder {{{placeholder}}} has no matching param rule",
                )
        if ep.method is HttpMethod.GET and ep.bodyFields:
            report.add(f"{path}.bodyFields", "GET endpoints have empty bodyFields")
        _check_param_rules(ep.bodyFields, f"{path}.bodyFields", report)
        _check_param_rules(ep.queryFields, f"{path}.queryFields", report)


def _check_library(lib: LibrarySpec, report: ValidationReport) -> None:
    if not lib.program:
        report.add("access.library.program", "program must be nonempty")
    if not lib.commands:
        report.add("access.library.commands", "at least one command is required")
    seen = set()
    for i, cmd in enumerate(lib.commands):
        path = f"access.library.commands[{i}]"
        if not NAME_RE.match(cmd.name):
            report.add(f"{path}.name", "command name must match [A-Za-z0-9_-]{1,64}")
        if cmd.name in seen:
            report.add(f"{path}.name", f"duplicate command name {cmd.name!r}")
        seen.add(cmd.name)
        _check_param_rules(cmd.params, f"{path}.params", report)
        if cmd.outputMode is OutputMode.file:
            if cmd.outputFileParam is None:
                report.add(f"{path}.outputFileParam", "required when outputMode is file")
            else:
                target = next((p for p in cmd.params if p.name == cmd.outputFileParam), None)
                if target is None:
                    report.add(
                        f"{path}.outputFileParam",
                        f"no param named {cmd.outputFileParam!r}",
                    )
                elif target.valueType is not ValueType.file:
                    report.add(
                        f"{path}.outputFileParam",
                        "must name a param of valueType file",
                    )
        elif cmd.outputFileParam is not None:
            report.add(f"{path}.outputFileParam", "only valid when outputMode is file")


def validate_contract(doc: Union[str, bytes, dict]) -> ValidationReport:
    """Pure validation of a raw contract document: no persistence, every
    invariant violation becomes one report entry with its field path."""
    data = _coerce_document(doc)
    report = ValidationReport()
    try:
        contract = ToolContract.model_validate(data)
    except ValidationError as exc:
        for err in exc.errors():
            report.add(_loc_to_path(tuple(err["loc"])), err["msg"])
        return report

    if not NAME_RE.match(contract.name):
        report.add("name", "name must match [A-Za-z0-9_-]{1,64}")

    access = contract.access
    has_api = access.api is not None
    has_library = access.library is not None
    if has_api == has_library:
        report.add("access", "exactly one access kind must be defined (api xor library)")
    elif access.kind is AccessKind.api and not has_api:
        report.add("access", "kind is api but access.api is missing")
    elif access.kind is AccessKind.library and not has_library:
        report.add("access", "kind is library but access.library is missing")
    else:
        if has_api:
            _check_api(access.api, report)
        if has_library:
            _check_library(access.library, report)
    return report


def parse_contract(doc: Union[str, bytes, dict]) -> ToolContract:
    """Parse a document already known (or required) to be valid."""
    from .errors import ValidationFailed

    data = _coerce_document(doc)
    report = validate_contract(data)
    if not report.ok:
        raise ValidationFailed(report)
    return ToolContract.model_validate(data)
