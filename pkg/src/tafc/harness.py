"""Desk-scale pass-rate evaluation against a scripted tool-calling model.

Every task is played through a :class:`~tafc.gateway.Gateway` whose
upstream is a :class:`ScriptedToolModel`.  The model knows the right answer
for each task and gets it right with a probability that may depend on
whether the tool schemas it sees carry a reasoning field.  Random draws are
keyed by ``(seed, run, task, step)`` only, so the standard and augmented
modes face identical luck and differ only in augmentation.
"""

from __future__ import annotations

import json
import random
import statistics
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .augment import FALLBACK_THINK_FIELD, VALUE_FIELD
from .errors import BudgetExhausted, ScenarioInvalid, UpstreamError
from .gateway import Budget, Gateway, ProxyConfig
from .schema_model import ToolSchema, canonical_json, parse_tools, validate_arguments
from .trace_store import TraceStore

MODES = ("standard", "tafc")
BEHAVIOURS = ("think_gated", "ignore_think")


@dataclass(frozen=True)
class Step:
    tool: str
    args: dict[str, Any]


@dataclass(frozen=True)
class Task:
    id: str
    x: str
    steps: tuple[Step, ...]

    @classmethod
    def from_json(cls, raw: Mapping[str, Any]) -> Task:
        if "steps" in raw:
            steps = tuple(Step(s["tool"], dict(s["args"])) for s in raw["steps"])
        else:
            steps = (Step(raw["expected_tool"], dict(raw["expected_args"])),)
        if not steps:
            raise ScenarioInvalid(f"task {raw.get('id')!r} has no steps")
        return cls(str(raw["id"]), raw["x"], steps)

    def to_json(self) -> dict[str, Any]:
        return {"id": self.id, "x": self.x, "steps": [{"tool": s.tool, "args": s.args} for s in self.steps]}


@dataclass
class EvalScenario:
    name: str
    tools: list[dict[str, Any]]
    tasks: list[Task]
    behavior: dict[str, Any]
    runs: int = 3
    mode: str = "tafc"
    family: str = ""

    def __post_init__(self) -> None:
        self.validate()

    def schemas(self) -> dict[str, ToolSchema]:
        return {t.name: t for t in parse_tools(self.tools)}

    def validate(self) -> None:
        try:
            schemas = self.schemas()
        except Exception as exc:
            raise ScenarioInvalid(f"{self.name}: bad tool suite: {exc}") from exc
        if self.mode not in MODES:
            raise ScenarioInvalid(f"{self.name}: mode must be one of {MODES}")
        if self.behavior.get("kind") not in BEHAVIOURS:
            raise ScenarioInvalid(f"{self.name}: behavior kind must be one of {BEHAVIOURS}")
        if self.runs < 1:
            raise ScenarioInvalid(f"{self.name}: runs must be >= 1")
        ids = [t.id for t in self.tasks]
        if len(set(ids)) != len(ids):
            raise ScenarioInvalid(f"{self.name}: duplicate task ids")
        for task in self.tasks:
            for step in task.steps:
                if step.tool not in schemas:
                    raise ScenarioInvalid(f"{self.name}/{task.id}: unknown tool {step.tool!r}")
                verdict = validate_arguments(schemas[step.tool], step.args)
                if not verdict:
                    raise ScenarioInvalid(f"{self.name}/{task.id}: expected args invalid: {verdict.violations}")

    @classmethod
    def from_json(cls, raw: Mapping[str, Any]) -> EvalScenario:
        try:
            return cls(
                name=raw.get("name", "scenario"),
                tools=list(raw["tools"]),
                tasks=[Task.from_json(t) for t in raw["tasks"]],
                behavior=dict(raw["behavior"]),
                runs=int(raw.get("runs", 3)),
                mode=raw.get("mode", "tafc"),
                family=raw.get("family", ""),
            )
        except (KeyError, TypeError) as exc:
            raise ScenarioInvalid(f"malformed scenario: {exc}") from exc

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "family": self.family,
            "tools": self.tools,
            "tasks": [t.to_json() for t in self.tasks],
            "behavior": self.behavior,
            "runs": self.runs,
            "mode": self.mode,
        }


@dataclass
class EvalReport:
    scenario: str
    mode: str
    seed: int
    pass_rates: list[float]
    per_task: dict[str, list[bool]]
    reasoning_coverage: float
    trace_count: int
    outcomes: dict[str, int] = field(default_factory=dict)

    @property
    def pass_rate_mean(self) -> float:
        return statistics.fmean(self.pass_rates)

    @property
    def pass_rate_stdev(self) -> float:
        return statistics.stdev(self.pass_rates) if len(self.pass_rates) > 1 else 0.0

    def to_json(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "mode": self.mode,
            "seed": self.seed,
            "runs": len(self.pass_rates),
            "pass_rate": {"mean": self.pass_rate_mean, "stdev": self.pass_rate_stdev, "per_run": self.pass_rates},
            "per_task": self.per_task,
            "reasoning_coverage": self.reasoning_coverage,
            "trace_count": self.trace_count,
            "outcomes": self.outcomes,
        }


# ---------------------------------------------------------------------------
# scripted model


def _think_key(tool_json: Mapping[str, Any]) -> str | None:
    props = ((tool_json.get("function") or tool_json).get("parameters") or {}).get("properties") or {}
    for key in props:
        if key == "think" or key.startswith(FALLBACK_THINK_FIELD):
            if (props[key] or {}).get("type") == "string":
                return key
    return None


def _is_wrapper(node: Mapping[str, Any], think_key: str) -> bool:
    props = node.get("properties") or {}
    return node.get("type") == "object" and set(props) == {think_key, VALUE_FIELD}


def _encode(args: Mapping[str, Any], params: Mapping[str, Any], think_key: str, note: str) -> dict[str, Any]:
    props = params.get("properties") or {}
    out = {}
    for name, value in args.items():
        node = props.get(name) or {}
        if _is_wrapper(node, think_key):
            inner = node["properties"][VALUE_FIELD]
            if isinstance(value, Mapping) and inner.get("type") == "object":
                value = _encode(value, inner, think_key, note)
            value = {think_key: f"{note}; chose {name}", VALUE_FIELD: value}
        elif isinstance(value, Mapping) and node.get("type") == "object":
            value = _encode(value, node, think_key, note)
        out[name] = value
    return out


def corrupt(args: Mapping[str, Any], rng: random.Random) -> dict[str, Any]:
    """A plausible but wrong variant of ``args``."""
    out = dict(args)
    if not out:
        return {"unexpected": True}
    key = rng.choice(sorted(out))
    v = out[key]
    if isinstance(v, bool):
        out[key] = not v
    elif isinstance(v, (int, float)):
        out[key] = v + 1
    elif isinstance(v, str):
        out[key] = v + "-x"
    elif isinstance(v, list):
        out[key] = v[:-1] if v else ["x"]
    elif isinstance(v, dict):
        out[key] = corrupt(v, rng) if v else {"x": 1}
    else:
        del out[key]
    return out


class ScriptedToolModel:
    """Upstream stand-in that answers chat-completions requests for known tasks."""

    def __init__(self, tasks: Sequence[Task], behavior: Mapping[str, Any], seed: int, run: int):
        self.tasks = {t.x: t for t in tasks}
        self.behavior = dict(behavior)
        self.seed = seed
        self.run = run
        self.calls = 0

    def p_correct(self, think_visible: bool) -> float:
        b = self.behavior
        if b["kind"] == "ignore_think":
            return float(b.get("p_correct", 0.7))
        key = "p_correct_with_think" if think_visible else "p_correct_without_think"
        return float(b.get(key, 0.9 if think_visible else 0.5))

    def __call__(self, request: dict[str, Any], timeout: float, headers: Mapping[str, str] | None = None) -> dict[str, Any]:
        self.calls += 1
        messages = request.get("messages") or []
        first_user = next((m["content"] for m in messages if m.get("role") == "user"), "")
        task = self.tasks.get(first_user)
        step_index = sum(1 for m in messages if m.get("role") == "tool")
        if task is None or step_index >= len(task.steps):
            return _completion({"role": "assistant", "content": "done"}, "stop")

        step = task.steps[step_index]
        rng = random.Random(f"{self.seed}:{self.run}:{task.id}:{step_index}")
        draw = rng.random()
        tools = {((t.get("function") or t)["name"]): t for t in request.get("tools") or []}
        tool_name = step.tool
        think_key = _think_key(tools[tool_name]) if tool_name in tools else None
        correct = draw < self.p_correct(think_key is not None)

        args = dict(step.args)
        if not correct:
            others = sorted(n for n in tools if n != tool_name)
            if others and rng.random() < 0.3:
                tool_name = rng.choice(others)
                think_key = _think_key(tools[tool_name])
            else:
                args = corrupt(args, rng)

        if think_key is not None:
            fn = tools[tool_name].get("function") or tools[tool_name]
            note = f"request asks for {tool_name}"
            args = {think_key: f"The user wants {tool_name}; each argument follows from the request.",
                    **_encode(args, fn.get("parameters") or {}, think_key, note)}
        call = {
            "id": f"call_{task.id}_{step_index}",
            "type": "function",
            "function": {"name": tool_name, "arguments": json.dumps(args)},
        }
        return _completion({"role": "assistant", "content": None, "tool_calls": [call]}, "tool_calls")


def _completion(message: dict[str, Any], finish: str) -> dict[str, Any]:
    return {
        "id": "chatcmpl-scripted",
        "object": "chat.completion",
        "model": "scripted",
        "choices": [{"index": 0, "message": message, "finish_reason": finish}],
    }


# ---------------------------------------------------------------------------
# evaluation


SYSTEM_PROMPT = "You are a helpful assistant. Use the provided functions to complete the user's request."


def _run_task(gateway: Gateway, scenario: EvalScenario, task: Task, session: str) -> bool:
    schemas = scenario.schemas()
    messages: list[dict[str, Any]] = [
        {"role": "system", "content": SYSTEM_PROMPT},
        {"role": "user", "content": task.x},
    ]
    for step in task.steps:
        request = {"model": "scripted", "messages": list(messages), "tools": scenario.tools, "temperature": 0.1}
        try:
            response = gateway.handle_chat_request(request, session)
        except (BudgetExhausted, UpstreamError):
            return False
        message = response["choices"][0]["message"]
        calls = message.get("tool_calls") or []
        if len(calls) != 1:
            return False
        fn = calls[0]["function"]
        args = json.loads(fn["arguments"])
        if fn["name"] != step.tool:
            return False
        if not validate_arguments(schemas[step.tool], args):
            return False
        if canonical_json(args) != canonical_json(step.args):
            return False
        messages.append(message)
        messages.append({"role": "tool", "tool_call_id": calls[0]["id"], "content": json.dumps({"ok": True})})
    return True


def run_eval(scenario: EvalScenario, mode: str | None = None, seed: int = 0, runs: int | None = None) -> EvalReport:
    """Play every task ``runs`` times and report pass-rate mean and stdev."""
    mode = mode or scenario.mode
    if mode not in MODES:
        raise ScenarioInvalid(f"mode must be one of {MODES}")
    runs = scenario.runs if runs is None else runs
    if runs < 1:
        raise ScenarioInvalid("runs must be >= 1")

    tasks = sorted(scenario.tasks, key=lambda t: t.id)
    pass_rates: list[float] = []
    per_task: dict[str, list[bool]] = {t.id: [] for t in tasks}
    reasoned = processed = traces = 0
    outcomes: dict[str, int] = {}

    for run in range(runs):
        model = ScriptedToolModel(tasks, scenario.behavior, seed, run)
        store = TraceStore(None)
        config = ProxyConfig(augment=(mode == "tafc"), mode="lenient", budget=Budget(10, 30.0))
        gateway = Gateway(config, upstream=model, store=store, executor=lambda name, args: {"ok": True})
        passed = 0
        for task in tasks:
            ok = _run_task(gateway, scenario, task, session=f"{run}:{task.id}")
            per_task[task.id].append(ok)
            passed += ok
        pass_rates.append(passed / len(tasks))
        for rec in store.records():
            traces += 1
            outcomes[rec.outcome] = outcomes.get(rec.outcome, 0) + 1
            if rec.function_name:
                processed += 1
                reasoned += bool(rec.trace.function_level)

    return EvalReport(
        scenario=scenario.name,
        mode=mode,
        seed=seed,
        pass_rates=pass_rates,
        per_task=per_task,
        reasoning_coverage=reasoned / processed if processed else 0.0,
        trace_count=traces,
        outcomes=dict(sorted(outcomes.items())),
    )
