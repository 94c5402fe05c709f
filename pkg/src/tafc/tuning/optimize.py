"""Description tuning loops.

Two loops live here:

* think-description tuning -- a meta model rewrites the reasoning-field
  prompt from execution traces, candidates are ranked by the mean
  log-likelihood of the target parameters;
* tool-description refinement -- a refiner rewrites the tool description
  from the current alignment loss and a batch of reasoning pairs, until
  successive losses differ by less than ``epsilon``.
"""

from __future__ import annotations

import json
import logging
import math
import random
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Protocol, Sequence, runtime_checkable

from ..augment import AugmentedTool, ThinkDescriptor, augment_tool
from ..complexity import ComplexityWeights
from ..errors import EmptyCandidateWarning, EmptyTaskSet, EmptyText, ProviderFailure, SchemaMismatch, ZeroVector
from ..filtering import LENIENT, filter_arguments
from ..schema_model import ToolSchema, canonical_json
from .losses import AlignmentWeights, LossBreakdown, action_loss, alignment_loss, logic_loss, semantic_loss
from .providers import ChatProvider, ProviderBundle, parse_json_object

log = logging.getLogger(__name__)

DEFAULT_EPOCHS = 5
DEFAULT_BATCH = 8
DEFAULT_TRACE_SAMPLE = 16


@runtime_checkable
class StructuredLogProbProvider(Protocol):
    """Log-probability of a full argument object given a prompt."""

    def logprob_arguments(self, arguments: Mapping[str, Any], context: str) -> float: ...


@dataclass(frozen=True)
class TraceTuple:
    x: str
    theta: dict[str, Any]
    theta_hat: dict[str, Any] | None
    reasoning: str


@dataclass(frozen=True)
class DatasetItem:
    x: str
    function: str | None
    theta: dict[str, Any]
    r_star: str

    @classmethod
    def from_json(cls, raw: Mapping[str, Any]) -> DatasetItem:
        return cls(raw["x"], raw.get("function"), dict(raw.get("theta") or {}), raw.get("r_star") or "")


def load_dataset(path: str) -> list[DatasetItem]:
    with open(path, encoding="utf-8") as fh:
        return [DatasetItem.from_json(json.loads(line)) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# prompting the tool-calling model


def render_call_prompt(tool_json: Mapping[str, Any], x: str) -> str:
    return (
        "You can call the function below. Reply with one JSON object holding its arguments.\n\n"
        f"Function:\n{json.dumps(tool_json, indent=2, ensure_ascii=False)}\n\n"
        f"Request: {x}\n"
    )


def predict_call(caller: ChatProvider, aug: AugmentedTool, x: str) -> tuple[dict[str, Any] | None, str]:
    """Ask ``caller`` for arguments; return clean arguments and flattened reasoning."""
    try:
        reply = caller.complete(render_call_prompt(aug.tool_json(include_marker=False), x))
    except ProviderFailure:
        raise
    except Exception as exc:
        raise ProviderFailure(f"tool-calling model failed: {exc}") from exc
    raw = parse_json_object(reply)
    if raw is None:
        return None, ""
    call = filter_arguments(aug, raw, LENIENT)
    parts = [call.trace.function_level or ""] + list(call.trace.per_parameter.values())
    return call.clean_args, " ".join(p for p in parts if p).strip()


# ---------------------------------------------------------------------------
# think-description tuning


def estimate_description_objective(
    candidate: str,
    tasks: Sequence[tuple[str, Mapping[str, Any]]],
    providers: ProviderBundle,
    tool: ToolSchema,
    weights: ComplexityWeights | None = None,
) -> float:
    """Mean ``log P(theta | x, f, D)`` over ``tasks`` for think description ``candidate``.

    Falls back to ``log((correct + 1) / (total + 2))`` from exact-match
    predictions when the logprob provider cannot score argument objects.
    """
    if not tasks:
        raise EmptyTaskSet("objective needs at least one (x, theta) task")
    aug = augment_tool(tool, weights, ThinkDescriptor(description_text=candidate))
    scorer = providers.logprob
    if isinstance(scorer, StructuredLogProbProvider):
        tool_json = aug.tool_json(include_marker=False)
        total = 0.0
        for x, theta in tasks:
            try:
                total += float(scorer.logprob_arguments(theta, render_call_prompt(tool_json, x)))
            except Exception as exc:
                raise ProviderFailure(f"logprob provider failed: {exc}") from exc
        return total / len(tasks)

    correct = 0
    for x, theta in tasks:
        predicted, _ = predict_call(providers.caller, aug, x)
        if predicted is not None and canonical_json(predicted) == canonical_json(theta):
            correct += 1
    return math.log((correct + 1) / (len(tasks) + 2))


def render_meta_prompt(current: str, traces: Sequence[TraceTuple]) -> str:
    lines = [
        "You maintain the description of a `think` field that asks a model to reason before it fills function arguments.",
        "Rewrite the description so the reasoning leads to the target arguments in the traces below.",
        "",
        "Current description:",
        current,
        "",
        "Execution traces:",
    ]
    for i, t in enumerate(traces, 1):
        predicted = "none" if t.theta_hat is None else canonical_json(t.theta_hat)
        lines += [
            f"[{i}] input: {t.x}",
            f"    target: {canonical_json(t.theta)}",
            f"    predicted: {predicted}",
            f"    reasoning: {t.reasoning or '(none)'}",
        ]
    lines += ["", "Reply with the new description only."]
    return "\n".join(lines)


def _ask(chat: ChatProvider, prompt: str, current: str) -> str:
    try:
        out = chat.complete(prompt)
    except ProviderFailure:
        raise
    except Exception as exc:
        raise ProviderFailure(f"refinement provider failed: {exc}") from exc
    out = (out or "").strip()
    if not out:
        warnings.warn("refinement provider returned an empty candidate; keeping current text", EmptyCandidateWarning, stacklevel=3)
        return current
    return out


def refine_descriptions(current: str, traces: Sequence[TraceTuple], chat: ChatProvider) -> str:
    if not traces:
        raise EmptyTaskSet("refinement needs at least one trace")
    return _ask(chat, render_meta_prompt(current, traces), current)


@dataclass
class ThinkTuningResult:
    best: str
    best_objective: float
    initial_objective: float
    candidates: list[str] = field(default_factory=list)
    objectives: list[float] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "final_description": self.best,
            "best_objective": self.best_objective,
            "initial_objective": self.initial_objective,
            "candidates": [{"epoch": i + 1, "description": c, "objective": o} for i, (c, o) in enumerate(zip(self.candidates, self.objectives))],
        }


def collect_traces(
    description: str,
    tasks: Sequence[tuple[str, Mapping[str, Any]]],
    providers: ProviderBundle,
    tool: ToolSchema,
    weights: ComplexityWeights | None = None,
) -> list[TraceTuple]:
    aug = augment_tool(tool, weights, ThinkDescriptor(description_text=description))
    out = []
    for x, theta in tasks:
        predicted, reasoning = predict_call(providers.caller, aug, x)
        out.append(TraceTuple(x, dict(theta), predicted, reasoning))
    return out


def tune_think_description(
    initial: str,
    tasks: Sequence[tuple[str, Mapping[str, Any]]],
    providers: ProviderBundle,
    tool: ToolSchema,
    epochs: int = DEFAULT_EPOCHS,
    trace_sample: int = DEFAULT_TRACE_SAMPLE,
    weights: ComplexityWeights | None = None,
) -> ThinkTuningResult:
    """Refine the think description for ``epochs`` rounds and keep the best scorer.

    The starting text competes too; ties keep the earlier description.
    """
    if not tasks:
        raise EmptyTaskSet("think tuning needs at least one task")
    objective = estimate_description_objective(initial, tasks, providers, tool, weights)
    result = ThinkTuningResult(best=initial, best_objective=objective, initial_objective=objective)
    current = initial
    for epoch in range(1, epochs + 1):
        traces = collect_traces(current, tasks[:trace_sample], providers, tool, weights)
        candidate = refine_descriptions(current, traces, providers.chat)
        score = estimate_description_objective(candidate, tasks, providers, tool, weights)
        log.info("think epoch %d: objective %.6f", epoch, score)
        result.candidates.append(candidate)
        result.objectives.append(score)
        if score > result.best_objective:
            result.best, result.best_objective = candidate, score
        current = candidate
    return result


# ---------------------------------------------------------------------------
# tool-description refinement


Evaluator = Callable[[str, Sequence[DatasetItem]], LossBreakdown]


def render_refine_prompt(description: str, loss: LossBreakdown, batch: Sequence[tuple[str, str, str]]) -> str:
    lines = [
        "Improve this tool description so that a model's reasoning when using the tool matches the reference reasoning.",
        "",
        "Current description:",
        description,
        "",
        f"Alignment loss: {loss.l_align:.6f} (semantic {loss.l_sem:.6f}, logic {loss.l_logic:.6f}, action {loss.l_action:.6f})",
        "",
        "Examples:",
    ]
    for i, (x, r, r_star) in enumerate(batch, 1):
        lines += [f"[{i}] input: {x}", f"    model reasoning: {r or '(none)'}", f"    reference reasoning: {r_star}"]
    lines += ["", "Reply with the full revised description only."]
    return "\n".join(lines)


def batch_alignment(
    description: str,
    batch: Sequence[DatasetItem],
    providers: ProviderBundle,
    tool: ToolSchema,
    weights: AlignmentWeights,
    complexity: ComplexityWeights | None = None,
) -> tuple[LossBreakdown, list[tuple[str, str, str]]]:
    """Mean alignment loss of ``batch`` with ``description`` as the tool description."""
    aug = augment_tool(replace(tool, description=description), complexity)
    sem = logic = act = 0.0
    triples = []
    for item in batch:
        theta_hat, r = predict_call(providers.caller, aug, item.x)
        triples.append((item.x, r, item.r_star))
        try:
            sem += semantic_loss(r, item.r_star, providers.embed)
        except (EmptyText, ZeroVector):
            # no usable reasoning: treat as orthogonal
            sem += 1.0
        logic += logic_loss(item.r_star, item.x, description, providers.logprob)
        try:
            act += action_loss(theta_hat or {}, item.theta, r, item.r_star, weights.beta, providers.embed, tool)
        except SchemaMismatch:
            act += len(item.theta) * 1.0
    n = len(batch)
    return alignment_loss(sem / n, logic / n, act / n, weights), triples


@dataclass
class ToolTuningResult:
    description: str
    loss: float
    history: list[LossBreakdown]
    descriptions: list[str]
    stop_reason: str
    provider_failed: bool = False

    @property
    def iterations(self) -> int:
        return len(self.history)

    def to_json(self) -> dict[str, Any]:
        return {
            "final_description": self.description,
            "best_loss": self.loss,
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "provider_failed": self.provider_failed,
            "loss_history": [h.to_json() for h in self.history],
            "candidates": self.descriptions,
        }


def optimize_tool_description(
    initial: str,
    dataset: Sequence[DatasetItem],
    weights: AlignmentWeights,
    providers: ProviderBundle,
    tool: ToolSchema | None = None,
    batch_size: int = DEFAULT_BATCH,
    seed: int = 0,
    evaluate: Evaluator | None = None,
) -> ToolTuningResult:
    """Refine a tool description until the alignment loss stops moving.

    Iteration ``t`` scores description ``D_t`` (``D_1 = initial``).  The loop
    stops once ``|L_t - L_{t-1}| < epsilon`` or after ``max_iterations``
    scores, and returns the lowest-loss description seen.
    """
    if not dataset:
        raise EmptyTaskSet("tool description refinement needs a non-empty dataset")
    if tool is None and evaluate is None:
        raise ValueError("either a tool schema or an evaluate callback is required")

    rng = random.Random(seed)
    batch = rng.sample(list(dataset), min(batch_size, len(dataset)))

    def default_evaluate(desc: str, items: Sequence[DatasetItem]) -> tuple[LossBreakdown, list[tuple[str, str, str]]]:
        assert tool is not None
        return batch_alignment(desc, items, providers, tool, weights)

    history: list[LossBreakdown] = []
    descriptions: list[str] = []
    current = initial
    stop_reason = "max_iterations"
    failed = False
    for t in range(1, weights.max_iterations + 1):
        try:
            if evaluate is not None:
                loss = evaluate(current, batch)
                triples = [(item.x, "", item.r_star) for item in batch]
            else:
                loss, triples = default_evaluate(current, batch)
        except ProviderFailure as exc:
            log.warning("provider failure at iteration %d: %s", t, exc)
            failed, stop_reason = True, "provider_failure"
            break
        history.append(loss)
        descriptions.append(current)
        log.info("tool iteration %d: L_align=%.6f", t, loss.l_align)
        if t > 1 and abs(loss.l_align - history[-2].l_align) < weights.epsilon:
            stop_reason = "converged"
            break
        if t == weights.max_iterations:
            break
        try:
            current = _ask(providers.chat, render_refine_prompt(current, loss, triples), current)
        except ProviderFailure as exc:
            log.warning("refiner failure at iteration %d: %s", t, exc)
            failed, stop_reason = True, "provider_failure"
            break

    if not history:
        return ToolTuningResult(initial, math.inf, [], [], stop_reason, failed)
    best = min(range(len(history)), key=lambda i: history[i].l_align)
    return ToolTuningResult(descriptions[best], history[best].l_align, history, descriptions, stop_reason, failed)
