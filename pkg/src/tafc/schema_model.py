"""Tool schemas in the chat-completions ``tools`` shape.

A tool definition is parsed into an immutable :class:`ToolSchema` whose
parameter tree is made of :class:`ParameterNode` values.  Only a small
JSON-Schema subset is interpreted (type, enum, items, properties, required,
oneOf/anyOf and the keywords tracked by :class:`ConstraintSet`); every other
key is carried along untouched so that ``parse_tool_schema(raw).to_json()``
gives back a document equal to ``raw``.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
import re
import uuid as _uuid
from dataclasses import dataclass, field, replace
from typing import Any, Iterator, Mapping

from .errors import MalformedParameters, MissingName, UnsupportedKind

KINDS = ("string", "number", "integer", "boolean", "enum", "array", "object", "union")
SCALAR_KINDS = frozenset({"string", "number", "integer", "boolean"})
_TYPE_KEYWORDS = frozenset({"string", "number", "integer", "boolean", "array", "object"})

CONSTRAINT_KEYWORDS = (
    "pattern",
    "minimum",
    "maximum",
    "minLength",
    "maxLength",
    "minItems",
    "maxItems",
    "format",
    "multipleOf",
    "uniqueItems",
)

# keys consumed by the parser; anything else lands in ``extra``
_STRUCTURAL = frozenset(
    {"type", "description", "enum", "properties", "required", "items", "oneOf", "anyOf"}
) | frozenset(CONSTRAINT_KEYWORDS)


def canonical_json(value: Any) -> str:
    """Key-sorted, whitespace-free JSON used for byte-level comparisons."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class ConstraintSet:
    """Validation keywords present on a node, keyword -> value."""

    values: Mapping[str, Any] = field(default_factory=dict)

    def count(self) -> int:
        return len(self.values)

    def keywords(self) -> list[str]:
        return [k for k in CONSTRAINT_KEYWORDS if k in self.values]

    def get(self, keyword: str, default: Any = None) -> Any:
        return self.values.get(keyword, default)

    def __contains__(self, keyword: str) -> bool:
        return keyword in self.values


@dataclass(frozen=True)
class ParameterNode:
    kind: str
    description: str | None = None
    # object
    properties: dict[str, ParameterNode] | None = None
    required: tuple[str, ...] | None = None
    # array
    items: ParameterNode | None = None
    # union
    branches: tuple[ParameterNode, ...] = ()
    union_keyword: str = "anyOf"
    constraints: ConstraintSet = field(default_factory=ConstraintSet)
    enum_values: tuple[Any, ...] | None = None
    # the literal "type" value from the source document, if any
    type_keyword: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def children(self) -> dict[str, ParameterNode]:
        return self.properties or {}

    @property
    def required_set(self) -> frozenset[str]:
        return frozenset(self.required or ())

    def depth(self) -> int:
        """Nesting depth; a leaf is 1, each object/array level adds one.

        Union branches are alternatives at the same level, so a union is as
        deep as its deepest branch.
        """
        if self.kind == "object":
            return 1 + max((c.depth() for c in self.children.values()), default=0)
        if self.kind == "array":
            return 1 + (self.items.depth() if self.items is not None else 0)
        if self.kind == "union":
            return max((b.depth() for b in self.branches), default=1)
        return 1

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        if self.type_keyword is not None:
            out["type"] = self.type_keyword
        if self.description is not None:
            out["description"] = self.description
        if self.enum_values is not None:
            out["enum"] = list(self.enum_values)
        if self.properties is not None:
            out["properties"] = {k: v.to_json() for k, v in self.properties.items()}
        if self.required is not None:
            out["required"] = list(self.required)
        if self.items is not None:
            out["items"] = self.items.to_json()
        if self.kind == "union":
            out[self.union_keyword] = [b.to_json() for b in self.branches]
        out.update(self.constraints.values)
        out.update(self.extra)
        return out


@dataclass(frozen=True)
class ToolSchema:
    """A parsed function definition.

    ``root`` is the ``parameters`` object schema (``None`` when the source
    omitted it).  ``envelope`` holds the outer ``{"type": "function", ...}``
    keys when the tool arrived in tools-array shape, otherwise ``None``.
    """

    name: str
    description: str | None = None
    root: ParameterNode | None = None
    function_extra: dict[str, Any] = field(default_factory=dict)
    envelope: dict[str, Any] | None = None

    @property
    def parameters(self) -> dict[str, ParameterNode]:
        return self.root.children if self.root is not None else {}

    @property
    def required(self) -> frozenset[str]:
        return self.root.required_set if self.root is not None else frozenset()

    def with_root(self, root: ParameterNode) -> ToolSchema:
        return replace(self, root=root)

    def function_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name}
        if self.description is not None:
            out["description"] = self.description
        if self.root is not None:
            out["parameters"] = self.root.to_json()
        out.update(self.function_extra)
        return out

    def to_json(self) -> dict[str, Any]:
        if self.envelope is None:
            return self.function_json()
        out = dict(self.envelope)
        out["function"] = self.function_json()
        return out


def parse_tool_schema(raw: Mapping[str, Any] | str) -> ToolSchema:
    """Parse one tool definition (tools-array element or bare function)."""
    if isinstance(raw, (str, bytes)):
        raw = json.loads(raw)
    if not isinstance(raw, Mapping):
        raise MalformedParameters("tool definition must be a JSON object")

    envelope = None
    fn: Mapping[str, Any] = raw
    if "function" in raw and isinstance(raw["function"], Mapping):
        envelope = {k: v for k, v in raw.items() if k != "function"}
        fn = raw["function"]

    name = fn.get("name")
    if not isinstance(name, str) or not name:
        raise MissingName("tool definition has no function name")
    description = fn.get("description")
    if description is not None and not isinstance(description, str):
        raise MalformedParameters(f"{name}: description must be a string")

    root = None
    if "parameters" in fn:
        params = fn["parameters"]
        if not isinstance(params, Mapping):
            raise MalformedParameters(f"{name}: parameters must be an object schema")
        if params.get("type", "object") != "object" or any(
            k in params for k in ("enum", "oneOf", "anyOf", "allOf", "items")
        ):
            raise MalformedParameters(f"{name}: parameters must be an object schema")
        root = _parse_object(params, name)

    extra = {k: v for k, v in fn.items() if k not in ("name", "description", "parameters")}
    return ToolSchema(
        name=name, description=description, root=root, function_extra=extra, envelope=envelope
    )


def parse_tools(raw: Any) -> list[ToolSchema]:
    """Parse a tools array, a ``{"tools": [...]}`` document or a single tool."""
    if isinstance(raw, Mapping) and "tools" in raw:
        raw = raw["tools"]
    if isinstance(raw, Mapping):
        raw = [raw]
    tools = [parse_tool_schema(t) for t in raw]
    seen: set[str] = set()
    for t in tools:
        if t.name in seen:
            raise MalformedParameters(f"duplicate tool name {t.name!r}")
        seen.add(t.name)
    return tools


def parse_parameter(raw: Any, where: str = "$") -> ParameterNode:
    if not isinstance(raw, Mapping):
        raise UnsupportedKind(f"{where}: schema must be an object, got {type(raw).__name__}")
    if "allOf" in raw:
        raise UnsupportedKind(f"{where}: allOf is not supported")

    type_kw = raw.get("type")
    if type_kw is not None and not isinstance(type_kw, str):
        raise UnsupportedKind(f"{where}: type {type_kw!r} is not supported")

    if "oneOf" in raw or "anyOf" in raw:
        if "oneOf" in raw and "anyOf" in raw:
            raise UnsupportedKind(f"{where}: both oneOf and anyOf present")
        kw = "oneOf" if "oneOf" in raw else "anyOf"
        raw_branches = raw[kw]
        if not isinstance(raw_branches, list) or not raw_branches:
            raise MalformedParameters(f"{where}: {kw} must be a non-empty list")
        branches = tuple(
            parse_parameter(b, f"{where}.{kw}[{i}]") for i, b in enumerate(raw_branches)
        )
        return _node(raw, "union", where, branches=branches, union_keyword=kw)

    if "enum" in raw:
        values = raw["enum"]
        if not isinstance(values, list) or not values:
            raise MalformedParameters(f"{where}: enum must be a non-empty list")
        return _node(raw, "enum", where, enum_values=tuple(values))

    if type_kw is None:
        if "properties" in raw:
            type_kw_kind = "object"
        elif "items" in raw:
            type_kw_kind = "array"
        else:
            raise UnsupportedKind(f"{where}: cannot determine parameter kind")
    elif type_kw in _TYPE_KEYWORDS:
        type_kw_kind = type_kw
    else:
        raise UnsupportedKind(f"{where}: unknown type {type_kw!r}")

    if type_kw_kind == "object":
        return _parse_object(raw, where)
    if type_kw_kind == "array":
        items = None
        if "items" in raw:
            items = parse_parameter(raw["items"], f"{where}[]")
        return _node(raw, "array", where, items=items)
    return _node(raw, type_kw_kind, where)


def _parse_object(raw: Mapping[str, Any], where: str) -> ParameterNode:
    props = None
    if "properties" in raw:
        if not isinstance(raw["properties"], Mapping):
            raise MalformedParameters(f"{where}: properties must be an object")
        props = {k: parse_parameter(v, f"{where}.{k}") for k, v in raw["properties"].items()}
    required = None
    if "required" in raw:
        req = raw["required"]
        if not isinstance(req, list) or not all(isinstance(r, str) for r in req):
            raise MalformedParameters(f"{where}: required must be a list of names")
        missing = [r for r in req if r not in (props or {})]
        if missing:
            raise MalformedParameters(f"{where}: required names unknown properties {missing}")
        required = tuple(req)
    return _node(raw, "object", where, properties=props, required=required)


def _node(raw: Mapping[str, Any], kind: str, where: str, **kw: Any) -> ParameterNode:
    desc = raw.get("description")
    if desc is not None and not isinstance(desc, str):
        raise MalformedParameters(f"{where}: description must be a string")
    constraints = ConstraintSet({k: raw[k] for k in CONSTRAINT_KEYWORDS if k in raw})
    extra = {k: v for k, v in raw.items() if k not in _STRUCTURAL}
    return ParameterNode(
        kind=kind,
        description=desc,
        constraints=constraints,
        type_keyword=raw.get("type"),
        extra=extra,
        **kw,
    )


def iter_nodes(node: ParameterNode, path: tuple[str, ...] = ()) -> Iterator[tuple[tuple[str, ...], ParameterNode]]:
    """Yield ``(path, node)`` for every named object property, depth first."""
    for name, child in node.children.items():
        yield path + (name,), child
        if child.kind == "object":
            yield from iter_nodes(child, path + (name,))


# ---------------------------------------------------------------------------
# argument validation


@dataclass(frozen=True)
class ValidationResult:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_arguments(schema: ToolSchema, args: Any) -> ValidationResult:
    """Check an argument payload against ``schema``; never raises."""
    if isinstance(args, (str, bytes)):
        try:
            args = json.loads(args)
        except ValueError as exc:
            return ValidationResult((f"$: arguments are not valid JSON ({exc})",))
    root = schema.root or ParameterNode(kind="object", properties={})
    out: list[str] = []
    _check(root, args, "$", out)
    return ValidationResult(tuple(out))


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_integer(v: Any) -> bool:
    if isinstance(v, bool):
        return False
    return isinstance(v, int) or (isinstance(v, float) and v.is_integer())


_KIND_CHECK = {
    "string": lambda v: isinstance(v, str),
    "number": _is_number,
    "integer": _is_integer,
    "boolean": lambda v: isinstance(v, bool),
    "array": lambda v: isinstance(v, list),
    "object": lambda v: isinstance(v, dict),
}


def _check(node: ParameterNode, value: Any, where: str, out: list[str]) -> None:
    if node.kind == "union":
        for branch in node.branches:
            trial: list[str] = []
            _check(branch, value, where, trial)
            if not trial:
                break
        else:
            out.append(f"{where}: value matches no branch of {node.union_keyword}")
            return
        _check_constraints(node, value, where, out)
        return

    if node.kind == "enum":
        if not any(_json_equal(value, e) for e in node.enum_values or ()):
            out.append(f"{where}: {value!r} is not one of {list(node.enum_values or ())}")
            return
        if node.type_keyword in _KIND_CHECK and not _KIND_CHECK[node.type_keyword](value):
            out.append(f"{where}: expected {node.type_keyword}")
            return
        _check_constraints(node, value, where, out)
        return

    if not _KIND_CHECK[node.kind](value):
        out.append(f"{where}: expected {node.kind}, got {_json_type(value)}")
        return
    _check_constraints(node, value, where, out)

    if node.kind == "object":
        for name in node.required or ():
            if name not in value:
                out.append(f"{where}: missing required parameter {name!r}")
        for name, child in node.children.items():
            if name in value:
                _check(child, value[name], f"{where}.{name}", out)
    elif node.kind == "array" and node.items is not None:
        for i, item in enumerate(value):
            _check(node.items, item, f"{where}[{i}]", out)


def _json_equal(a: Any, b: Any) -> bool:
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    return a == b


def _json_type(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, int):
        return "integer"
    if isinstance(v, float):
        return "number"
    if isinstance(v, str):
        return "string"
    if isinstance(v, list):
        return "array"
    return "object"


_EMAIL = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")
_URI = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:\S+$")


def _format_ok(fmt: str, value: str) -> bool:
    try:
        if fmt == "date-time":
            _dt.datetime.fromisoformat(value.replace("Z", "+00:00"))
        elif fmt == "date":
            _dt.date.fromisoformat(value)
        elif fmt == "email":
            return bool(_EMAIL.match(value))
        elif fmt in ("uri", "url"):
            return bool(_URI.match(value))
        elif fmt == "uuid":
            _uuid.UUID(value)
    except ValueError:
        return False
    # unknown formats are annotations only
    return True


def _check_constraints(node: ParameterNode, value: Any, where: str, out: list[str]) -> None:
    c = node.constraints
    if not c.count():
        return
    if isinstance(value, str):
        if "pattern" in c and re.search(c.get("pattern"), value) is None:
            out.append(f"{where}: does not match pattern {c.get('pattern')!r}")
        if "minLength" in c and len(value) < c.get("minLength"):
            out.append(f"{where}: shorter than {c.get('minLength')}")
        if "maxLength" in c and len(value) > c.get("maxLength"):
            out.append(f"{where}: longer than {c.get('maxLength')}")
        if "format" in c and not _format_ok(c.get("format"), value):
            out.append(f"{where}: not a valid {c.get('format')}")
    elif _is_number(value):
        if "minimum" in c and value < c.get("minimum"):
            out.append(f"{where}: below minimum {c.get('minimum')}")
        if "maximum" in c and value > c.get("maximum"):
            out.append(f"{where}: above maximum {c.get('maximum')}")
        if "multipleOf" in c:
            q = value / c.get("multipleOf")
            if not math.isclose(q, round(q), rel_tol=0, abs_tol=1e-9):
                out.append(f"{where}: not a multiple of {c.get('multipleOf')}")
    elif isinstance(value, list):
        if "minItems" in c and len(value) < c.get("minItems"):
            out.append(f"{where}: fewer than {c.get('minItems')} items")
        if "maxItems" in c and len(value) > c.get("maxItems"):
            out.append(f"{where}: more than {c.get('maxItems')} items")
        if c.get("uniqueItems"):
            keys = [canonical_json(v) for v in value]
            if len(set(keys)) != len(keys):
                out.append(f"{where}: items are not unique")
