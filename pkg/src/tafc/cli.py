"""``tafc`` command line.

Exit codes: 0 success, 1 usage error, 2 validation failure,
3 provider/upstream failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any, Sequence

from .augment import MARKER_KEY, AugmentationManifest, apply_manifest, augment_tool, default_think_description, strip_augmentation
from .complexity import DEFAULT_TAU, ComplexityWeights, score_tool
from .errors import ProviderFailure, ScenarioInvalid, SchemaError, TafcError, UpstreamError
from .filtering import LENIENT, STRICT, ToolRegistry
from .schema_model import parse_tools, validate_arguments

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_PROVIDER = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _emit(doc: Any, out: str | None = None) -> None:
    text = json.dumps(doc, indent=2, ensure_ascii=False)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _weights(args: argparse.Namespace) -> ComplexityWeights:
    tau = DEFAULT_TAU if args.tau is None else args.tau
    try:
        if getattr(args, "alpha", None):
            return ComplexityWeights.from_alpha_string(args.alpha, tau)
        return ComplexityWeights(tau=tau)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_augment(args: argparse.Namespace) -> int:
    tools = parse_tools(_read_json(args.tools))
    weights = _weights(args)
    augmented = [augment_tool(t, weights) for t in tools]
    for a in augmented:
        for w in a.warnings:
            print(f"warning: {w}", file=sys.stderr)
    _emit(
        {
            "tools": [a.tool_json() for a in augmented],
            "manifests": {a.name: a.manifest.to_json() for a in augmented},
        },
        args.out,
    )
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    weights = _weights(args)
    report = {}
    for tool in parse_tools(_read_json(args.tools)):
        scores = score_tool(tool, weights)
        report[tool.name] = {
            name: {**s.to_json(), "selected": s.psi > weights.tau} for name, s in scores.items()
        }
    _emit({"tau": weights.tau, "alpha": [weights.alpha1, weights.alpha2, weights.alpha3], "tools": report})
    return EXIT_OK


def _manifests(doc: Any) -> dict[str, AugmentationManifest]:
    if isinstance(doc, dict) and "manifests" in doc:
        doc = doc["manifests"]
    if not isinstance(doc, dict):
        raise UsageError("manifest file must map tool names to manifests")
    return {name: AugmentationManifest.from_json(m) for name, m in doc.items()}


def cmd_filter(args: argparse.Namespace) -> int:
    manifests = _manifests(_read_json(args.manifest))
    registry = ToolRegistry()
    origins = {}
    for tool in parse_tools(_read_json(args.tools)):
        manifest = manifests.get(tool.name)
        if manifest is None and MARKER_KEY in tool.function_extra:
            manifest = AugmentationManifest.from_json(tool.function_extra[MARKER_KEY])
        if manifest is None:
            continue
        origin = strip_augmentation(tool, manifest) if MARKER_KEY in tool.function_extra else tool
        aug = apply_manifest(origin, manifest)
        registry.register(aug)
        origins[tool.name] = origin

    call = _read_json(args.args)
    if "function" in call and isinstance(call["function"], dict):
        call = call["function"]
    if "name" not in call:
        raise UsageError("arguments file needs a function name")
    raw = call.get("arguments", {})
    if isinstance(raw, str):
        raw = json.loads(raw)
    filtered = registry.filter_call(call["name"], raw, STRICT if args.strict else LENIENT)
    verdict = validate_arguments(origins[call["name"]], filtered.clean_args)
    _emit({**filtered.to_json(), "valid": verdict.ok, "violations": list(verdict.violations)})
    return EXIT_OK if verdict.ok else EXIT_VALIDATION


def cmd_serve(args: argparse.Namespace) -> int:
    from .gateway import ProxyConfig, serve

    try:
        config = ProxyConfig.load(args.config)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"bad config: {exc}") from exc
    serve(config)
    return EXIT_OK


def cmd_tune(args: argparse.Namespace) -> int:
    from .schema_model import parse_tool_schema
    from .tuning import AlignmentWeights, build_providers, optimize_tool_description, tune_think_description
    from .tuning.optimize import load_dataset

    config = _read_json(args.config)
    dataset = load_dataset(args.dataset)
    providers = build_providers(config.get("providers"))
    if "tool" not in config:
        raise UsageError("tuning config needs a 'tool' definition")
    tool = parse_tool_schema(config["tool"])
    items = [d for d in dataset if d.function in (None, tool.name)]
    if args.target == "think":
        tasks = [(d.x, d.theta) for d in items]
        initial = config.get("initial_description") or ""
        if not initial:
            initial = default_think_description(tool)
        result = tune_think_description(
            initial, tasks, providers, tool, epochs=int(config.get("epochs", 5)),
            trace_sample=int(config.get("trace_sample", 16)),
        )
    else:
        weights = AlignmentWeights.from_json(config.get("weights"))
        result = optimize_tool_description(
            config.get("initial_description") or tool.description or "",
            items, weights, providers, tool,
            batch_size=int(config.get("batch_size", 8)), seed=int(config.get("seed", 0)),
        )
    _emit({"target": args.target, **result.to_json()}, args.report)
    if getattr(result, "provider_failed", False):
        return EXIT_PROVIDER
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    from .harness import run_eval
    from .scenarios import load_scenario

    try:
        scenario = load_scenario(args.scenario)
    except OSError as exc:
        raise UsageError(f"cannot read scenario {args.scenario}: {exc}") from exc
    report = run_eval(scenario, mode=args.mode, seed=args.seed, runs=args.runs)
    _emit(report.to_json())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tafc", description="Think-augmented function calling tools.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("augment", help="augment tool schemas")
    a.add_argument("--tools", required=True)
    a.add_argument("--tau", type=float)
    a.add_argument("--alpha", help="A1,A2,A3")
    a.add_argument("--out")
    a.set_defaults(func=cmd_augment)

    s = sub.add_parser("score", help="per-parameter complexity report")
    s.add_argument("--tools", required=True)
    s.add_argument("--tau", type=float)
    s.set_defaults(func=cmd_score)

    f = sub.add_parser("filter", help="strip reasoning from a tool call")
    f.add_argument("--tools", required=True)
    f.add_argument("--manifest", required=True)
    f.add_argument("--args", required=True)
    f.add_argument("--strict", action="store_true")
    f.set_defaults(func=cmd_filter)

    sv = sub.add_parser("serve", help="run the proxy")
    sv.add_argument("--config")
    sv.set_defaults(func=cmd_serve)

    t = sub.add_parser("tune", help="tune think or tool descriptions")
    t.add_argument("target", choices=["think", "tool"])
    t.add_argument("--dataset", required=True)
    t.add_argument("--config", required=True)
    t.add_argument("--report", required=True)
    t.set_defaults(func=cmd_tune)

    e = sub.add_parser("eval", help="pass-rate evaluation with a scripted model")
    e.add_argument("--scenario", required=True, help="bundled name (i1, i2, i3, control) or JSON file")
    e.add_argument("--mode", choices=["standard", "tafc"], default="tafc")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--runs", type=int, default=3)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"tafc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        print(f"tafc: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ProviderFailure, UpstreamError) as exc:
        print(f"tafc: provider failure: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (SchemaError, ScenarioInvalid, TafcError) as exc:
        print(f"tafc: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
