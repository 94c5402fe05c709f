"""Per-parameter complexity scoring.

Each parameter gets three sub-scores in [0, 1]:

* ``dep`` -- how many sibling parameter names its description mentions,
  ``min(1, R / 3)``;
* ``type_score`` -- a per-kind base plus 0.15 per nesting level below the
  first, capped at 1;
* ``constraint_score`` -- active validation keywords (+1 when required),
  ``min(1, C / 4)``.

The composite is ``psi = logistic(a1*dep + a2*type + a3*constraint)`` and a
parameter gets its own reasoning slot when ``psi > tau``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable

from .errors import UnknownParameter
from .schema_model import ParameterNode, ToolSchema

DEFAULT_TAU = 0.6

TYPE_BASE = {
    "string": 0.0,
    "number": 0.0,
    "integer": 0.0,
    "boolean": 0.0,
    "enum": 0.25,
    "array": 0.5,
    "object": 0.75,
    "union": 1.0,
}
DEPTH_STEP = 0.15
DEP_SATURATION = 3
CONSTRAINT_SATURATION = 4


@dataclass(frozen=True)
class ComplexityWeights:
    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1.0
    tau: float = DEFAULT_TAU

    def __post_init__(self) -> None:
        for name in ("alpha1", "alpha2", "alpha3"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite non-negative number, got {v}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")

    @classmethod
    def from_alpha_string(cls, alpha: str, tau: float = DEFAULT_TAU) -> ComplexityWeights:
        """Build from the ``A1,A2,A3`` CLI form."""
        parts = [float(p) for p in alpha.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected three comma-separated weights, got {alpha!r}")
        return cls(*parts, tau=tau)


@dataclass(frozen=True)
class ParameterScore:
    name: str
    dep: float
    type_score: float
    constraint_score: float
    psi: float

    def to_json(self) -> dict:
        return {
            "dep": self.dep,
            "type_score": self.type_score,
            "constraint_score": self.constraint_score,
            "psi": self.psi,
        }


def logistic(z: float) -> float:
    # split form avoids overflow in exp for large |z|
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def combine(dep: float, type_score: float, constraint_score: float, weights: ComplexityWeights) -> float:
    z = weights.alpha1 * dep + weights.alpha2 * type_score + weights.alpha3 * constraint_score
    return logistic(z)


def _mentions(text: str, name: str) -> bool:
    return re.search(r"(?<!\w)" + re.escape(name) + r"(?!\w)", text) is not None


def dep_score(node: ParameterNode, name: str, siblings: Iterable[str]) -> float:
    text = node.description or ""
    hits = {s for s in siblings if s != name and _mentions(text, s)}
    return min(1.0, len(hits) / DEP_SATURATION)


def type_score(node: ParameterNode) -> float:
    return min(1.0, TYPE_BASE[node.kind] + DEPTH_STEP * (node.depth() - 1))


def constraint_score(node: ParameterNode, required: bool) -> float:
    return min(1.0, (node.constraints.count() + int(required)) / CONSTRAINT_SATURATION)


def score_node(
    name: str,
    node: ParameterNode,
    siblings: Iterable[str],
    required: bool,
    weights: ComplexityWeights,
) -> ParameterScore:
    """Score ``node`` as the property ``name`` of an object with ``siblings``."""
    d = dep_score(node, name, siblings)
    t = type_score(node)
    c = constraint_score(node, required)
    return ParameterScore(name, d, t, c, combine(d, t, c, weights))


def score_parameter(schema: ToolSchema, param: str, weights: ComplexityWeights | None = None) -> ParameterScore:
    weights = weights or ComplexityWeights()
    params = schema.parameters
    if param not in params:
        raise UnknownParameter(f"{schema.name} has no parameter {param!r}")
    return score_node(param, params[param], params.keys(), param in schema.required, weights)


def score_tool(schema: ToolSchema, weights: ComplexityWeights | None = None) -> dict[str, ParameterScore]:
    """Scores for every top-level parameter, in declaration order."""
    return {p: score_parameter(schema, p, weights) for p in schema.parameters}


def select_reasoning_parameters(schema: ToolSchema, weights: ComplexityWeights | None = None) -> set[str]:
    weights = weights or ComplexityWeights()
    return {name for name, s in score_tool(schema, weights).items() if s.psi > weights.tau}
