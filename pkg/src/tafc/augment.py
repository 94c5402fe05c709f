"""Think-augmentation of tool schemas.

``augment_tool`` adds an optional function-level reasoning string to a tool
and wraps every sufficiently complex parameter as ``{think, value}``.  The
wrapped positions are listed in an :class:`AugmentationManifest`, which is
what the filter later uses to strip the reasoning back out; the manifest is
also embedded in the schema under :data:`MARKER_KEY` so that augmenting an
already-augmented schema is a no-op.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Mapping

from .complexity import ComplexityWeights, score_node
from .errors import UnknownTarget
from .schema_model import ParameterNode, ToolSchema, parse_tool_schema

log = logging.getLogger(__name__)

MARKER_KEY = "x-tafc"
DEFAULT_THINK_FIELD = "think"
FALLBACK_THINK_FIELD = "__tafc_think"
VALUE_FIELD = "value"
DEFAULT_MAX_DEPTH = 4

Path = tuple[str, ...]


def path_str(path: Iterable[str]) -> str:
    return ".".join(path)


def split_path(path: str | Iterable[str]) -> Path:
    if isinstance(path, str):
        return tuple(path.split(".")) if path else ()
    return tuple(path)


@dataclass(frozen=True)
class ThinkDescriptor:
    field_name: str = DEFAULT_THINK_FIELD
    description_text: str | None = None
    position: int = 0
    # optional per-path overrides for wrapper reasoning prompts
    parameter_texts: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class AugmentationManifest:
    function_level: bool = True
    think_field: str = DEFAULT_THINK_FIELD
    parameter_paths: tuple[str, ...] = ()
    # structure the augmentation had to create; removed again on strip
    created_parameters: bool = False
    created_properties: bool = False

    def paths(self) -> list[Path]:
        return [split_path(p) for p in self.parameter_paths]

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "function_level": self.function_level,
            "think_field": self.think_field,
            "parameter_paths": list(self.parameter_paths),
        }
        if self.created_parameters:
            out["created_parameters"] = True
        if self.created_properties:
            out["created_properties"] = True
        return out

    @classmethod
    def from_json(cls, raw: Mapping[str, Any]) -> AugmentationManifest:
        return cls(
            function_level=bool(raw.get("function_level", True)),
            think_field=raw.get("think_field", DEFAULT_THINK_FIELD),
            parameter_paths=tuple(raw.get("parameter_paths", ())),
            created_parameters=bool(raw.get("created_parameters", False)),
            created_properties=bool(raw.get("created_properties", False)),
        )


@dataclass(frozen=True)
class AugmentedTool:
    schema: ToolSchema
    manifest: AugmentationManifest
    origin: ToolSchema
    warnings: tuple[str, ...] = ()

    @property
    def name(self) -> str:
        return self.origin.name

    def tool_json(self, include_marker: bool = True) -> dict[str, Any]:
        raw = self.schema.to_json()
        if not include_marker:
            fn = raw["function"] if self.schema.envelope is not None else raw
            fn.pop(MARKER_KEY, None)
        return raw


class PathTrie:
    """Manifest paths as a tree: ``name -> (wrapped_here, subtree)``."""

    def __init__(self, paths: Iterable[Path] = ()):
        self.children: dict[str, tuple[bool, PathTrie]] = {}
        for p in paths:
            self.add(p)

    def add(self, path: Path) -> None:
        node = self
        for i, part in enumerate(path):
            wrapped, sub = node.children.get(part, (False, None))
            if sub is None:
                sub = PathTrie()
            node.children[part] = (wrapped or i == len(path) - 1, sub)
            node = sub

    def __bool__(self) -> bool:
        return bool(self.children)


# ---------------------------------------------------------------------------
# descriptions


def _resolve_path(schema: ToolSchema, path: Path) -> ParameterNode:
    node = schema.root
    for part in path:
        if node is None or part not in node.children:
            raise UnknownTarget(f"{schema.name} has no parameter {path_str(path)!r}")
        node = node.children[part]
    if node is None:
        raise UnknownTarget(f"{schema.name}: empty target path")
    return node


def default_think_description(schema: ToolSchema, target: str | Iterable[str] | None = None) -> str:
    """Built-in reasoning prompt for the function (``target=None``) or a parameter path."""
    if target is None:
        return (
            f"Before filling any other argument of `{schema.name}`, reason step by step: "
            f"justify why `{schema.name}` is the right function for this request and "
            "justify each parameter choice you are about to make."
        )
    path = split_path(target)
    if not path:
        raise UnknownTarget("empty parameter path")
    node = _resolve_path(schema, path)
    param = path_str(path)
    text = f"Explain the specific value you choose for `{param}` of `{schema.name}`"
    keywords = node.constraints.keywords()
    if node.kind == "enum":
        keywords = ["enum"] + keywords
    if keywords:
        text += f", how it satisfies its constraints ({', '.join(keywords)})"
    return text + ", and how it depends on the other parameters."


# ---------------------------------------------------------------------------
# augmentation


Decide = Callable[[Path, str, ParameterNode, Iterable[str], bool], bool]


def _think_node(text: str) -> ParameterNode:
    return ParameterNode(kind="string", type_keyword="string", description=text)


def _wrapper(value: ParameterNode, think_field: str, text: str, param: str) -> ParameterNode:
    return ParameterNode(
        kind="object",
        type_keyword="object",
        description=f"Reasoning-augmented `{param}`: fill `{think_field}` first, then `{VALUE_FIELD}`.",
        properties={think_field: _think_node(text), VALUE_FIELD: value},
        required=(think_field, VALUE_FIELD),
    )


def _wrap_object(
    node: ParameterNode,
    prefix: Path,
    level: int,
    decide: Decide,
    origin: ToolSchema,
    think: ThinkDescriptor,
    think_field: str,
    max_depth: int,
    paths: list[str],
) -> ParameterNode:
    if not node.children:
        return node
    siblings = list(node.children)
    required = node.required_set
    new_props: dict[str, ParameterNode] = {}
    for name, child in node.children.items():
        path = prefix + (name,)
        wrap = "." not in name and decide(path, name, child, siblings, name in required)
        if wrap:
            paths.append(path_str(path))
        new_child = child
        if child.kind == "object" and level < max_depth:
            new_child = _wrap_object(
                child, path, level + 1, decide, origin, think, think_field, max_depth, paths
            )
        if wrap:
            key = path_str(path)
            text = think.parameter_texts.get(key) or default_think_description(origin, path)
            new_child = _wrapper(new_child, think_field, text, key)
        new_props[name] = new_child
    return replace(node, properties=new_props)


def _pick_think_field(schema: ToolSchema, wanted: str) -> tuple[str, list[str]]:
    taken = set(schema.parameters)
    if wanted not in taken:
        return wanted, []
    name = FALLBACK_THINK_FIELD
    n = 2
    while name in taken:
        name = f"{FALLBACK_THINK_FIELD}_{n}"
        n += 1
    msg = f"{schema.name}: parameter {wanted!r} already exists; reasoning field renamed to {name!r}"
    log.warning(msg)
    return name, [msg]


def _build(
    origin: ToolSchema,
    decide: Decide,
    think: ThinkDescriptor,
    max_depth: int,
    function_level: bool = True,
    think_field: str | None = None,
) -> AugmentedTool:
    warnings: list[str] = []
    if think_field is None:
        think_field, warnings = _pick_think_field(origin, think.field_name)

    created_parameters = origin.root is None
    root = origin.root or ParameterNode(kind="object", type_keyword="object")
    created_properties = function_level and root.properties is None and not created_parameters

    paths: list[str] = []
    root = _wrap_object(root, (), 1, decide, origin, think, think_field, max_depth, paths)

    if function_level:
        text = think.description_text or default_think_description(origin)
        props = list(root.children.items())
        pos = max(0, min(think.position, len(props)))
        props.insert(pos, (think_field, _think_node(text)))
        root = replace(root, properties=dict(props))

    manifest = AugmentationManifest(
        function_level=function_level,
        think_field=think_field,
        parameter_paths=tuple(paths),
        created_parameters=created_parameters,
        created_properties=created_properties,
    )
    schema = replace(
        origin,
        root=root,
        function_extra={**origin.function_extra, MARKER_KEY: manifest.to_json()},
    )
    return AugmentedTool(schema=schema, manifest=manifest, origin=origin, warnings=tuple(warnings))


def augment_tool(
    schema: ToolSchema | Mapping[str, Any],
    weights: ComplexityWeights | None = None,
    think: ThinkDescriptor | None = None,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> AugmentedTool:
    """Return the think-augmented form of ``schema``.

    A schema that already carries the augmentation marker is first reduced
    to its original form, so re-augmenting with the same settings yields
    the same result.
    """
    if not isinstance(schema, ToolSchema):
        schema = parse_tool_schema(schema)
    weights = weights or ComplexityWeights()
    think = think or ThinkDescriptor()
    if MARKER_KEY in schema.function_extra:
        schema = strip_augmentation(schema)

    def decide(path: Path, name: str, node: ParameterNode, siblings: Iterable[str], required: bool) -> bool:
        return score_node(name, node, siblings, required, weights).psi > weights.tau

    return _build(schema, decide, think, max_depth)


def apply_manifest(
    origin: ToolSchema,
    manifest: AugmentationManifest,
    think: ThinkDescriptor | None = None,
) -> AugmentedTool:
    """Re-create the augmented tool that ``manifest`` describes."""
    think = think or ThinkDescriptor(field_name=manifest.think_field)
    wanted = set(manifest.parameter_paths)
    depth = max((len(p) for p in manifest.paths()), default=1)

    def decide(path: Path, *_: Any) -> bool:
        return path_str(path) in wanted

    aug = _build(
        origin,
        decide,
        think,
        max_depth=depth,
        function_level=manifest.function_level,
        think_field=manifest.think_field,
    )
    missing = wanted - set(aug.manifest.parameter_paths)
    if missing:
        raise UnknownTarget(f"{origin.name}: manifest paths not in schema: {sorted(missing)}")
    return aug


def _unwrap_object(node: ParameterNode, trie: PathTrie) -> ParameterNode:
    if not trie or not node.children:
        return node
    new_props = {}
    for name, child in node.children.items():
        if name in trie.children:
            wrapped, sub = trie.children[name]
            if wrapped:
                child = child.children[VALUE_FIELD]
            child = _unwrap_object(child, sub)
        new_props[name] = child
    return replace(node, properties=new_props)


def strip_augmentation(schema: ToolSchema, manifest: AugmentationManifest | None = None) -> ToolSchema:
    """Inverse of augmentation: drop the reasoning field and unwrap manifest paths."""
    if manifest is None:
        if MARKER_KEY not in schema.function_extra:
            return schema
        manifest = AugmentationManifest.from_json(schema.function_extra[MARKER_KEY])
    extra = {k: v for k, v in schema.function_extra.items() if k != MARKER_KEY}
    root = schema.root
    if root is not None:
        root = _unwrap_object(root, PathTrie(manifest.paths()))
        if manifest.function_level:
            props = {k: v for k, v in root.children.items() if k != manifest.think_field}
            root = replace(root, properties=None if manifest.created_properties else props)
        if manifest.created_parameters:
            root = None
    return replace(schema, root=root, function_extra=extra)
