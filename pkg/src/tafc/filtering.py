"""Strip reasoning out of tool calls made against augmented schemas.

Unwrapping is driven by the augmentation manifest, never by the shape of
the payload: an un-augmented object parameter that happens to contain
``think``/``value`` keys is user data and passes through untouched.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .augment import VALUE_FIELD, AugmentedTool, PathTrie, path_str, split_path
from .errors import MalformedParameters, MalformedReasoningTuple, UnknownFunction

log = logging.getLogger(__name__)

STRICT = "strict"
LENIENT = "lenient"


@dataclass(frozen=True)
class ReasoningTrace:
    function_level: str | None = None
    per_parameter: dict[str, str] = field(default_factory=dict)

    def is_empty(self) -> bool:
        return self.function_level is None and not self.per_parameter

    def to_json(self) -> dict[str, Any]:
        return {"function_level": self.function_level, "per_parameter": dict(self.per_parameter)}

    @classmethod
    def from_json(cls, raw: Mapping[str, Any] | None) -> ReasoningTrace:
        raw = raw or {}
        return cls(raw.get("function_level"), dict(raw.get("per_parameter") or {}))


@dataclass(frozen=True)
class FilteredCall:
    function_name: str
    clean_args: dict[str, Any]
    trace: ReasoningTrace
    strictness_warnings: tuple[str, ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {
            "function_name": self.function_name,
            "clean_args": self.clean_args,
            "trace": self.trace.to_json(),
            "strictness_warnings": list(self.strictness_warnings),
        }


def _as_text(value: Any) -> str:
    return value if isinstance(value, str) else json.dumps(value, ensure_ascii=False)


def filter_arguments(aug: AugmentedTool, raw_args: Mapping[str, Any], mode: str = STRICT) -> FilteredCall:
    """Remove every reasoning field from ``raw_args`` and collect it as a trace."""
    if mode not in (STRICT, LENIENT):
        raise ValueError(f"mode must be {STRICT!r} or {LENIENT!r}, got {mode!r}")
    if not isinstance(raw_args, Mapping):
        raise MalformedParameters(f"{aug.name}: arguments must be a JSON object")

    manifest = aug.manifest
    think_field = manifest.think_field
    warnings: list[str] = []
    per_parameter: dict[str, str] = {}

    args = dict(raw_args)
    function_level = None
    if manifest.function_level and think_field in args:
        raw_think = args.pop(think_field)
        if not isinstance(raw_think, str):
            if mode == STRICT:
                raise MalformedReasoningTuple(think_field, f"{think_field!r} must be a string")
            warnings.append(f"{think_field}: non-string reasoning coerced to text")
        function_level = _as_text(raw_think)

    def unwrap(obj: dict[str, Any], trie: PathTrie, prefix: tuple[str, ...]) -> dict[str, Any]:
        out = dict(obj)
        for name, (wrapped, sub) in trie.children.items():
            if name not in out:
                continue
            path = prefix + (name,)
            node = out[name]
            if wrapped:
                key = path_str(path)
                if isinstance(node, Mapping) and VALUE_FIELD in node:
                    if think_field in node:
                        per_parameter[key] = _as_text(node[think_field])
                    stray = set(node) - {think_field, VALUE_FIELD}
                    if stray:
                        warnings.append(f"{key}: ignored extra wrapper keys {sorted(stray)}")
                    node = node[VALUE_FIELD]
                elif mode == STRICT:
                    raise MalformedReasoningTuple(key)
                else:
                    msg = f"{key}: expected a reasoning tuple, passing the raw value through"
                    log.warning("%s: %s", aug.name, msg)
                    warnings.append(msg)
                    per_parameter[key] = ""
            if sub and isinstance(node, Mapping):
                node = unwrap(dict(node), sub, path)
            out[name] = node
        return out

    clean = unwrap(args, PathTrie(manifest.paths()), ())
    return FilteredCall(
        function_name=aug.name,
        clean_args=clean,
        trace=ReasoningTrace(function_level, per_parameter),
        strictness_warnings=tuple(warnings),
    )


def wrap_arguments(aug: AugmentedTool, clean_args: Mapping[str, Any], trace: ReasoningTrace) -> dict[str, Any]:
    """Encode clean arguments plus reasoning the way a model would emit them.

    Reasoning keys are placed before value keys everywhere.
    """
    think_field = aug.manifest.think_field

    def wrap(obj: Mapping[str, Any], trie: PathTrie, prefix: tuple[str, ...]) -> dict[str, Any]:
        out = {}
        for name, value in obj.items():
            if name in trie.children:
                wrapped, sub = trie.children[name]
                path = prefix + (name,)
                if sub and isinstance(value, Mapping):
                    value = wrap(value, sub, path)
                key = path_str(path)
                if wrapped:
                    inner = {}
                    if key in trace.per_parameter:
                        inner[think_field] = trace.per_parameter[key]
                    inner[VALUE_FIELD] = value
                    value = inner
            out[name] = value
        return out

    body = wrap(clean_args, PathTrie(aug.manifest.paths()), ())
    if aug.manifest.function_level and trace.function_level is not None:
        return {think_field: trace.function_level, **body}
    return body


class ToolRegistry:
    """Augmented tools by name, for filtering calls that name their function."""

    def __init__(self, tools: Iterable[AugmentedTool] = ()):
        self._tools: dict[str, AugmentedTool] = {}
        for t in tools:
            self.register(t)

    def register(self, tool: AugmentedTool) -> None:
        self._tools[tool.name] = tool

    def __contains__(self, name: str) -> bool:
        return name in self._tools

    def __getitem__(self, name: str) -> AugmentedTool:
        try:
            return self._tools[name]
        except KeyError:
            raise UnknownFunction(f"no augmented tool named {name!r}") from None

    def __iter__(self):
        return iter(self._tools.values())

    def __len__(self) -> int:
        return len(self._tools)

    def filter_call(self, name: str, raw_args: Mapping[str, Any] | str, mode: str = STRICT) -> FilteredCall:
        tool = self[name]
        if isinstance(raw_args, str):
            raw_args = json.loads(raw_args) if raw_args.strip() else {}
        return filter_arguments(tool, raw_args, mode)


__all__ = [
    "FilteredCall",
    "LENIENT",
    "ReasoningTrace",
    "STRICT",
    "ToolRegistry",
    "filter_arguments",
    "split_path",
    "wrap_arguments",
]
