"""Alignment losses between generated and annotated reasoning."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from ..errors import EmptyText, ProviderFailure, SchemaMismatch, ZeroVector
from ..schema_model import ParameterNode, ToolSchema, canonical_json
from .providers import EmbeddingProvider, LogProbProvider

LOGIC_LOSS_CAP = 1e4
BCE_EPS = 1e-7
MISSING_PARAMETER_PENALTY = 1.0


@dataclass(frozen=True)
class AlignmentWeights:
    lambda1: float = 1 / 3
    lambda2: float = 1 / 3
    lambda3: float = 1 / 3
    beta: float = 0.1
    epsilon: float = 1e-3
    max_iterations: int = 50

    def __post_init__(self) -> None:
        for name in ("lambda1", "lambda2", "lambda3", "beta"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not (isinstance(self.max_iterations, int) and self.max_iterations > 0):
            raise ValueError(f"max_iterations must be a positive integer, got {self.max_iterations}")

    @classmethod
    def from_json(cls, raw: Mapping[str, Any] | None) -> AlignmentWeights:
        raw = dict(raw or {})
        if "lambdas" in raw:
            raw["lambda1"], raw["lambda2"], raw["lambda3"] = raw.pop("lambdas")
        return cls(**raw)


@dataclass(frozen=True)
class LossBreakdown:
    l_sem: float
    l_logic: float
    l_action: float
    l_align: float

    def to_json(self) -> dict[str, float]:
        return {"l_sem": self.l_sem, "l_logic": self.l_logic, "l_action": self.l_action, "l_align": self.l_align}


def alignment_loss(l_sem: float, l_logic: float, l_action: float, weights: AlignmentWeights | None = None) -> LossBreakdown:
    w = weights or AlignmentWeights()
    total = w.lambda1 * l_sem + w.lambda2 * l_logic + w.lambda3 * l_action
    return LossBreakdown(l_sem, l_logic, l_action, total)


def _vector(embed: EmbeddingProvider, text: str) -> np.ndarray:
    try:
        return np.asarray(embed.embed(text), dtype=float)
    except Exception as exc:
        raise ProviderFailure(f"embedding failed: {exc}") from exc


def semantic_loss(r: str, r_star: str, embed: EmbeddingProvider) -> float:
    """``1 - cos(embed(r), embed(r_star))``, in [0, 2]."""
    if not r or not r.strip() or not r_star or not r_star.strip():
        raise EmptyText("semantic loss needs two non-empty texts")
    a, b = _vector(embed, r), _vector(embed, r_star)
    if a.shape != b.shape:
        raise ProviderFailure(f"embedding dimensions differ: {a.shape} vs {b.shape}")
    if not a.any() or not b.any():
        raise ZeroVector("an embedding is all zeros; cosine is undefined")
    if np.array_equal(a, b):
        return 0.0
    cos = float(a @ b) / math.sqrt(float(a @ a) * float(b @ b))
    return min(2.0, max(0.0, 1.0 - cos))


def logic_context(x: str, tool_description: str) -> str:
    return f"Tool description: {tool_description}\nUser request: {x}"


def logic_loss(r_star: str, x: str, tool_description: str, logprob: LogProbProvider) -> float:
    """``-log P(r_star | x, description)``, capped at 1e4."""
    try:
        value = float(logprob.logprob(r_star, logic_context(x, tool_description)))
    except Exception as exc:
        raise ProviderFailure(f"logprob provider failed: {exc}") from exc
    if math.isnan(value) or value > 0:
        raise ProviderFailure(f"logprob provider returned invalid log-probability {value}")
    return min(LOGIC_LOSS_CAP, -value) + 0.0


# ---------------------------------------------------------------------------
# action loss


def _bce(p: float, y: bool) -> float:
    if y:
        return 0.0 if p >= 1.0 else -math.log(max(p, BCE_EPS))
    return 0.0 if p <= 0.0 else -math.log(max(1.0 - p, BCE_EPS))


def _probability(value: Any, where: str) -> float:
    if isinstance(value, bool):
        return 1.0 if value else 0.0
    if isinstance(value, (int, float)) and 0.0 <= value <= 1.0:
        return float(value)
    raise SchemaMismatch(f"{where}: expected a probability in [0, 1], got {value!r}")


def _kind_of(node: ParameterNode | None, target: Any) -> str:
    if node is not None:
        return node.kind
    if isinstance(target, bool):
        return "boolean"
    if isinstance(target, (int, float)):
        return "number"
    if isinstance(target, str):
        return "string"
    if isinstance(target, dict):
        return "object"
    return "array"


def _term(node: ParameterNode | None, pred: Any, target: Any, where: str) -> float:
    kind = _kind_of(node, target)
    if kind == "boolean":
        return _bce(_probability(pred, where), bool(target))
    if kind == "enum":
        options = list(node.enum_values or ()) if node is not None else [target]
        if isinstance(pred, Mapping):
            dist = {canonical_json(k): _probability(v, where) for k, v in pred.items()}
        else:
            dist = {canonical_json(pred): 1.0}
        total = 0.0
        for opt in options:
            key = canonical_json(opt)
            total += _bce(dist.get(key, 0.0), key == canonical_json(target))
        return total
    if kind in ("number", "integer"):
        if isinstance(pred, bool) or not isinstance(pred, (int, float)):
            raise SchemaMismatch(f"{where}: expected a number, got {pred!r}")
        return float((pred - target) ** 2)
    if kind == "object" and isinstance(target, Mapping):
        if not isinstance(pred, Mapping):
            raise SchemaMismatch(f"{where}: expected an object, got {pred!r}")
        return _object_loss(node, pred, target, where)
    # free strings, arrays and unions: exact match
    return 0.0 if canonical_json(pred) == canonical_json(target) else 1.0


def _object_loss(node: ParameterNode | None, pred: Mapping[str, Any], target: Mapping[str, Any], where: str) -> float:
    known = set(node.children) if node is not None and node.properties is not None else set(target)
    extra = set(pred) - known - set(target)
    if extra:
        raise SchemaMismatch(f"{where}: unexpected parameters {sorted(extra)}")
    total = 0.0
    for name, tgt in target.items():
        child = node.children.get(name) if node is not None else None
        if name not in pred:
            total += MISSING_PARAMETER_PENALTY
            continue
        total += _term(child, pred[name], tgt, f"{where}.{name}")
    return total


def parameter_loss(theta_hat: Mapping[str, Any], theta_star: Mapping[str, Any], schema: ToolSchema | None = None) -> float:
    """BCE for enum/boolean, squared error for numbers, 0/1 mismatch for the rest."""
    root = schema.root if schema is not None else None
    return _object_loss(root, theta_hat, theta_star, "$")


def embedding_distance(r: str, r_star: str, embed: EmbeddingProvider) -> float:
    return float(np.linalg.norm(_vector(embed, r) - _vector(embed, r_star)))


def action_loss(
    theta_hat: Mapping[str, Any],
    theta_star: Mapping[str, Any],
    r: str,
    r_star: str,
    beta: float,
    embed: EmbeddingProvider,
    schema: ToolSchema | None = None,
) -> float:
    param = parameter_loss(theta_hat, theta_star, schema)
    if beta == 0:
        return param
    return param + beta * embedding_distance(r, r_star, embed)
