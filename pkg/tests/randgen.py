"""Random tool schemas, valid argument payloads and an independent unwrapper.

Nothing here imports the filtering code: ``oracle_wrap``/``oracle_unwrap``
are written against plain dicts and dotted path strings so that the
package's manifest-driven filter can be checked against them.
"""

from __future__ import annotations

import random
import string
from typing import Any

NAMES = [
    "query", "filters", "limit", "mode", "value", "think", "target", "items", "user",
    "region", "options", "tags", "count", "ratio", "flag", "payload", "spec", "range",
]
PATTERNS = {"^[a-z]+$": string.ascii_lowercase, "^[0-9]{2,6}$": string.digits}


def _names(rng: random.Random, n: int, top: bool) -> list[str]:
    pool = [x for x in NAMES if not (top and x == "think")] if rng.random() < 0.9 else NAMES
    return rng.sample(pool, n)


def gen_node(rng: random.Random, depth: int, max_depth: int, siblings: list[str] | None = None) -> dict[str, Any]:
    kinds = ["string", "number", "integer", "boolean", "enum"]
    if depth < max_depth:
        kinds += ["array", "object", "object", "union"]
    kind = rng.choice(kinds)
    node: dict[str, Any] = {}
    if rng.random() < 0.6:
        text = rng.choice(["Value to use.", "Depends on", "Bounded by", "Free text"])
        if siblings and rng.random() < 0.5:
            text += " " + " and ".join(rng.sample(siblings, min(len(siblings), rng.randint(1, 3))))
        node["description"] = text
    if kind == "string":
        node["type"] = "string"
        r = rng.random()
        if r < 0.25:
            node["pattern"] = rng.choice(list(PATTERNS))
        elif r < 0.4:
            node["format"] = "date"
        if rng.random() < 0.3:
            node["maxLength"] = 12
    elif kind in ("number", "integer"):
        node["type"] = kind
        if rng.random() < 0.5:
            node["minimum"] = rng.choice([0, -5, 1])
        if rng.random() < 0.5:
            node["maximum"] = 100
        if kind == "integer" and rng.random() < 0.3:
            node["multipleOf"] = 5
    elif kind == "boolean":
        node["type"] = "boolean"
    elif kind == "enum":
        if rng.random() < 0.7:
            node["type"] = "string"
        node["enum"] = rng.sample(["a", "b", "c", "d", "e"], rng.randint(1, 4))
    elif kind == "array":
        node["type"] = "array"
        node["items"] = gen_node(rng, depth + 1, max_depth)
        if rng.random() < 0.4:
            node["minItems"] = 1
        if rng.random() < 0.3:
            node["maxItems"] = 4
    elif kind == "union":
        node[rng.choice(["anyOf", "oneOf"])] = [{"type": "string", "pattern": "^[a-z]+$"}, {"type": "integer", "minimum": 0}]
    else:
        node.update(gen_object(rng, depth + 1, max_depth))
    if rng.random() < 0.1:
        node["x-vendor"] = {"keep": [1, 2]}
    return node


def gen_object(rng: random.Random, depth: int, max_depth: int, top: bool = False) -> dict[str, Any]:
    n = rng.randint(0 if not top else 0, 8)
    names = _names(rng, n, top)
    props = {}
    for name in names:
        props[name] = gen_node(rng, depth, max_depth, [s for s in names if s != name])
    node: dict[str, Any] = {"type": "object", "properties": props}
    req = [p for p in names if rng.random() < 0.5]
    if req or rng.random() < 0.5:
        node["required"] = req
    if rng.random() < 0.2:
        node["additionalProperties"] = False
    return node


def gen_tool(rng: random.Random, max_depth: int = 4) -> dict[str, Any]:
    fn: dict[str, Any] = {"name": f"tool_{rng.randrange(10**6)}", "parameters": gen_object(rng, 1, max_depth, top=True)}
    if rng.random() < 0.8:
        fn["description"] = "A generated tool."
    if rng.random() < 0.2:
        fn["strict"] = True
    if rng.random() < 0.7:
        return {"type": "function", "function": fn}
    return fn


def gen_value(rng: random.Random, node: dict[str, Any]) -> Any:
    if "enum" in node:
        return rng.choice(node["enum"])
    if "anyOf" in node or "oneOf" in node:
        return gen_value(rng, rng.choice(node.get("anyOf") or node.get("oneOf")))
    t = node.get("type")
    if t == "string":
        if "pattern" in node:
            alphabet = PATTERNS[node["pattern"]]
            return "".join(rng.choice(alphabet) for _ in range(rng.randint(2, 6)))
        if node.get("format") == "date":
            return f"2025-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}"
        return "".join(rng.choice("abc xyz") for _ in range(rng.randint(0, 10)))
    if t in ("integer", "number"):
        lo = node.get("minimum", -20)
        hi = node.get("maximum", 100)
        v = rng.randint(max(lo, 0) if lo > 0 else lo, hi)
        if "multipleOf" in node:
            v = (v // node["multipleOf"]) * node["multipleOf"]
            if v < lo:
                v += node["multipleOf"]
        if t == "number" and rng.random() < 0.5:
            v = float(v)
        return v
    if t == "boolean":
        return rng.random() < 0.5
    if t == "array":
        n = rng.randint(node.get("minItems", 0), node.get("maxItems", 3))
        return [gen_value(rng, node["items"]) for _ in range(n)]
    if t == "object":
        return gen_args(rng, node)
    raise AssertionError(f"unexpected node {node}")


def gen_args(rng: random.Random, obj: dict[str, Any]) -> dict[str, Any]:
    req = set(obj.get("required", []))
    out = {}
    for name, child in (obj.get("properties") or {}).items():
        if name in req or rng.random() < 0.6:
            out[name] = gen_value(rng, child)
    return out


def object_paths(obj: dict[str, Any], prefix: str = "", depth: int = 1, max_depth: int = 4) -> list[str]:
    """All dotted paths of named properties reachable through nested objects."""
    out = []
    for name, child in (obj.get("properties") or {}).items():
        p = f"{prefix}{name}"
        out.append(p)
        if child.get("type") == "object" and depth < max_depth:
            out.extend(object_paths(child, p + ".", depth + 1, max_depth))
    return out


def random_text(rng: random.Random) -> str:
    return rng.choice(["", "because", "the user said so", "t-" + str(rng.randrange(1000)), "ünïcode ✓"])


def oracle_wrap(args: Any, paths: set[str], think: str, rng: random.Random, prefix: str = "") -> tuple[Any, dict[str, str]]:
    """Wrap every listed path as {think, value}; returns the payload and the reasoning used."""
    traces: dict[str, str] = {}
    if not isinstance(args, dict):
        return args, traces
    out = {}
    for key, val in args.items():
        p = prefix + key
        if any(q.startswith(p + ".") for q in paths):
            val, sub = oracle_wrap(val, paths, think, rng, p + ".")
            traces.update(sub)
        if p in paths:
            r = random_text(rng)
            traces[p] = r
            val = {think: r, "value": val}
        out[key] = val
    return out, traces


def oracle_unwrap(doc: Any, paths: set[str], think: str, prefix: str = "") -> tuple[Any, dict[str, str]]:
    """Brute force: visit every key, unwrap when its dotted path is listed."""
    traces: dict[str, str] = {}
    if not isinstance(doc, dict):
        return doc, traces
    out = {}
    for key, val in doc.items():
        p = prefix + key
        if p in paths and isinstance(val, dict) and "value" in val:
            if think in val:
                traces[p] = val[think]
            val = val["value"]
        if isinstance(val, dict) and any(q.startswith(p + ".") for q in paths):
            val, sub = oracle_unwrap(val, paths, think, p + ".")
            traces.update(sub)
        out[key] = val
    return out, traces
