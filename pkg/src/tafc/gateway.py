"""Chat-completions proxy that augments tools and filters tool calls.

Outbound, every tool in the request is replaced by its think-augmented
form.  Inbound, each tool call's ``arguments`` string is parsed, stripped of
reasoning, checked against the original schema, re-encoded and handed back
to the client; the reasoning is reported only under the ``tafc`` extension
field of the response.  Each tool call the upstream emits costs one unit of
the session budget and produces one trace record.
"""

from __future__ import annotations

import copy
import json
import logging
import os
import threading
import time
import uuid
from dataclasses import asdict, dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable, Mapping, Protocol

from .augment import AugmentationManifest, AugmentedTool, ThinkDescriptor, augment_tool
from .complexity import ComplexityWeights
from .errors import (
    BudgetExhausted,
    MalformedParameters,
    MalformedReasoningTuple,
    SchemaError,
    UnknownFunction,
    UpstreamError,
    UpstreamTimeout,
    UpstreamUnreachable,
)
from .filtering import LENIENT, STRICT, ReasoningTrace, ToolRegistry
from .schema_model import canonical_json, parse_tool_schema, validate_arguments
from .trace_store import TraceRecord, TraceStore

log = logging.getLogger(__name__)

SESSION_HEADER = "X-TAFC-Session"
EXTENSION_FIELD = "tafc"


@dataclass
class Budget:
    max_tool_calls: int = 10
    timeout_s: float = 30.0

    def __post_init__(self) -> None:
        if self.max_tool_calls <= 0 or self.timeout_s <= 0:
            raise ValueError("budget limits must be strictly positive")


@dataclass
class ProxyConfig:
    upstream_url: str = "http://127.0.0.1:8000"
    api_key_env: str = "TAFC_API_KEY"
    temperature: float = 0.1
    budget: Budget = field(default_factory=Budget)
    strip_marker_fields: bool = True
    mode: str = LENIENT
    augment: bool = True
    expose_reasoning: bool = True
    trace_path: str | None = None
    fsync: bool = True
    tau: float = 0.6
    alpha: tuple[float, float, float] = (1.0, 1.0, 1.0)
    think_description: str | None = None
    host: str = "127.0.0.1"
    port: int = 8080

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature must lie in [0, 2], got {self.temperature}")
        if self.mode not in (STRICT, LENIENT):
            raise ValueError(f"mode must be {STRICT!r} or {LENIENT!r}")
        if isinstance(self.budget, Mapping):
            self.budget = Budget(**self.budget)
        self.alpha = tuple(self.alpha)

    @property
    def complexity(self) -> ComplexityWeights:
        return ComplexityWeights(*self.alpha, tau=self.tau)

    @property
    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)

    @classmethod
    def from_json(cls, raw: Mapping[str, Any]) -> ProxyConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config fields {sorted(unknown)}")
        return cls(**raw)

    @classmethod
    def load(cls, path: str | None = None) -> ProxyConfig:
        """Read a JSON config (``path`` or ``$TAFC_CONFIG``), then apply ``$TAFC_UPSTREAM_URL``."""
        path = path or os.environ.get("TAFC_CONFIG")
        raw: dict[str, Any] = {}
        if path:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        if os.environ.get("TAFC_UPSTREAM_URL"):
            raw["upstream_url"] = os.environ["TAFC_UPSTREAM_URL"]
        return cls.from_json(raw)

    def to_json(self) -> dict[str, Any]:
        out = asdict(self)
        out["alpha"] = list(self.alpha)
        return out


class Upstream(Protocol):
    def __call__(self, request: dict[str, Any], timeout: float, headers: Mapping[str, str] | None = None) -> dict[str, Any]: ...


class HttpUpstream:
    """POSTs to ``{base_url}/v1/chat/completions``."""

    def __init__(self, base_url: str, api_key: str | None = None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self._client = httpx.Client()

    def __call__(self, request: dict[str, Any], timeout: float, headers: Mapping[str, str] | None = None) -> dict[str, Any]:
        import httpx

        hdrs = {"Content-Type": "application/json"}
        if headers and headers.get("Authorization"):
            hdrs["Authorization"] = headers["Authorization"]
        elif self.api_key:
            hdrs["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._client.post(f"{self.base_url}/v1/chat/completions", json=request, headers=hdrs, timeout=timeout)
        except httpx.TimeoutException as exc:
            raise UpstreamTimeout(str(exc)) from exc
        except httpx.HTTPError as exc:
            raise UpstreamUnreachable(str(exc)) from exc
        if resp.status_code >= 400:
            raise UpstreamError(f"upstream returned HTTP {resp.status_code}: {resp.text[:500]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise UpstreamError("upstream returned a non-JSON body") from exc

    def close(self) -> None:
        self._client.close()


class SessionBudget:
    """Per-session tool-call counters behind one lock."""

    def __init__(self, limit: int):
        self.limit = limit
        self._counts: dict[str, int] = {}
        self._lock = threading.Lock()

    def acquire(self, session: str) -> bool:
        with self._lock:
            n = self._counts.get(session, 0)
            if n >= self.limit:
                return False
            self._counts[session] = n + 1
            return True

    def used(self, session: str) -> int:
        with self._lock:
            return self._counts.get(session, 0)

    def reset(self, session: str | None = None) -> None:
        with self._lock:
            if session is None:
                self._counts.clear()
            else:
                self._counts.pop(session, None)


Executor = Callable[[str, dict[str, Any]], Any]


def user_input(request: Mapping[str, Any]) -> str:
    """Text of the last user message, the ``x`` recorded with each trace."""
    for msg in reversed(request.get("messages") or []):
        if msg.get("role") == "user":
            content = msg.get("content")
            if isinstance(content, str):
                return content
            if isinstance(content, list):
                return " ".join(p.get("text", "") for p in content if isinstance(p, Mapping))
    return ""


def plain_tool(tool: Any) -> AugmentedTool:
    """An identity 'augmentation' used when augmentation is switched off."""
    schema = parse_tool_schema(tool) if not hasattr(tool, "name") else tool
    return AugmentedTool(schema=schema, manifest=AugmentationManifest(function_level=False), origin=schema)


class Gateway:
    def __init__(
        self,
        config: ProxyConfig | None = None,
        upstream: Upstream | None = None,
        store: TraceStore | None = None,
        executor: Executor | None = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.config = config or ProxyConfig()
        if upstream is None:
            upstream = HttpUpstream(self.config.upstream_url, self.config.api_key)
        self.upstream = upstream
        if store is None:
            store = TraceStore(self.config.trace_path, fsync=self.config.fsync)
        self.store = store
        self.executor = executor
        self.clock = clock
        self.budget = SessionBudget(self.config.budget.max_tool_calls)
        self._cache: dict[str, AugmentedTool] = {}
        self._cache_lock = threading.Lock()

    def enforce_budget(self, session: str) -> bool:
        """Permit (True) and count one tool call, or refuse (False)."""
        return self.budget.acquire(session)

    def _augmented(self, raw_tool: Mapping[str, Any]) -> AugmentedTool:
        key = canonical_json(raw_tool)
        with self._cache_lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        schema = parse_tool_schema(raw_tool)
        if self.config.augment:
            think = ThinkDescriptor(description_text=self.config.think_description)
            aug = augment_tool(schema, self.config.complexity, think)
            for w in aug.warnings:
                log.warning(w)
        else:
            aug = plain_tool(schema)
        with self._cache_lock:
            self._cache[key] = aug
        return aug

    def _record(self, x: str, name: str, trace: ReasoningTrace, params: dict[str, Any], outcome: str) -> int:
        return self.store.append(TraceRecord(x=x, function_name=name, trace=trace, parameters=params, outcome=outcome))

    def _call_upstream(self, request: dict[str, Any], headers: Mapping[str, str] | None) -> dict[str, Any]:
        timeout = self.config.budget.timeout_s
        start = self.clock()
        response = self.upstream(request, timeout, headers)
        elapsed = self.clock() - start
        if elapsed > timeout:
            raise UpstreamTimeout(f"upstream took {elapsed:.1f}s (limit {timeout}s)")
        return response

    def handle_chat_request(
        self,
        request: Mapping[str, Any],
        session: str | None = None,
        headers: Mapping[str, str] | None = None,
    ) -> dict[str, Any]:
        session = session or str(uuid.uuid4())
        tools = request.get("tools")
        if not tools:
            return self._call_upstream(dict(request), headers)

        registry = ToolRegistry(self._augmented(t) for t in tools)
        outbound = dict(request)
        outbound["tools"] = [a.tool_json(include_marker=not self.config.strip_marker_fields) for a in registry]
        outbound.setdefault("temperature", self.config.temperature)
        x = user_input(request)

        try:
            raw_response = self._call_upstream(outbound, headers)
        except UpstreamTimeout:
            self._record(x, "", ReasoningTrace(), {}, "timeout")
            raise

        response = copy.deepcopy(raw_response)
        calls_report: list[dict[str, Any]] = []
        refusals: list[dict[str, Any]] = []
        n_calls = 0
        for choice in response.get("choices") or []:
            message = choice.get("message") or {}
            tool_calls = message.get("tool_calls")
            if not tool_calls:
                continue
            kept = []
            for call in tool_calls:
                n_calls += 1
                entry = self._process_call(call, registry, session, x)
                if entry["outcome"] == "budget_exhausted":
                    refusals.append({"tool_call_id": call.get("id"), "reason": "budget_exhausted"})
                    continue
                calls_report.append(entry)
                if "arguments" in entry:
                    call.setdefault("function", {})["arguments"] = entry.pop("arguments")
                    kept.append(call)
                else:
                    entry.pop("arguments", None)
            message["tool_calls"] = kept
            if not kept:
                message.pop("tool_calls")
                if choice.get("finish_reason") == "tool_calls":
                    choice["finish_reason"] = "stop"

        if refusals and len(refusals) == n_calls:
            raise BudgetExhausted(session, self.config.budget.max_tool_calls)

        ext: dict[str, Any] = {"session": session, "calls": calls_report}
        if refusals:
            ext["refusals"] = refusals
        if not self.config.expose_reasoning:
            for c in calls_report:
                c.pop("trace", None)
        response[EXTENSION_FIELD] = ext
        return response

    def _process_call(self, call: dict[str, Any], registry: ToolRegistry, session: str, x: str) -> dict[str, Any]:
        fn = call.get("function") or {}
        name = fn.get("name", "")
        entry: dict[str, Any] = {"tool_call_id": call.get("id"), "function": name}

        if not self.enforce_budget(session):
            self._record(x, name, ReasoningTrace(), {}, "budget_exhausted")
            entry["outcome"] = "budget_exhausted"
            return entry

        raw_args = fn.get("arguments", "{}")
        try:
            parsed = json.loads(raw_args) if isinstance(raw_args, str) else raw_args
            if parsed is None or (isinstance(raw_args, str) and not raw_args.strip()):
                parsed = {}
            filtered = registry.filter_call(name, parsed, self.config.mode)
        except (ValueError, UnknownFunction, MalformedReasoningTuple, MalformedParameters) as exc:
            self._record(x, name, ReasoningTrace(), {}, "validation_error")
            entry.update(outcome="validation_error", error=str(exc))
            return entry

        origin = registry[name].origin
        verdict = validate_arguments(origin, filtered.clean_args)
        outcome = "success" if verdict.ok else "validation_error"
        if verdict.ok and self.executor is not None:
            try:
                self.executor(name, copy.deepcopy(filtered.clean_args))
            except Exception as exc:
                outcome = "execution_error"
                entry["error"] = str(exc)
        self._record(x, name, filtered.trace, filtered.clean_args, outcome)
        entry.update(
            outcome=outcome,
            trace=filtered.trace.to_json(),
            arguments=json.dumps(filtered.clean_args, ensure_ascii=False),
        )
        if verdict.violations:
            entry["violations"] = list(verdict.violations)
        if filtered.strictness_warnings:
            entry["warnings"] = list(filtered.strictness_warnings)
        return entry


# ---------------------------------------------------------------------------
# HTTP front end


def _error_body(kind: str, message: str) -> dict[str, Any]:
    return {"error": {"type": kind, "message": message}}


def make_handler(gateway: Gateway) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def setup(self) -> None:
            super().setup()
            self.connection_session = str(uuid.uuid4())

        def log_message(self, fmt: str, *args: Any) -> None:
            log.info("%s %s", self.address_string(), fmt % args)

        def _send(self, status: int, body: Mapping[str, Any]) -> None:
            data = json.dumps(body, ensure_ascii=False).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self) -> None:
            if self.path.rstrip("/") == "/healthz":
                self._send(200, {"status": "ok"})
            else:
                self._send(404, _error_body("not_found", self.path))

        def do_POST(self) -> None:
            if self.path.rstrip("/") != "/v1/chat/completions":
                self._send(404, _error_body("not_found", self.path))
                return
            length = int(self.headers.get("Content-Length") or 0)
            try:
                request = json.loads(self.rfile.read(length) or b"{}")
                if not isinstance(request, dict):
                    raise ValueError("request body must be a JSON object")
            except ValueError as exc:
                self._send(400, _error_body("invalid_request", str(exc)))
                return
            session = self.headers.get(SESSION_HEADER) or self.connection_session
            fwd = {"Authorization": self.headers["Authorization"]} if self.headers.get("Authorization") else None
            try:
                self._send(200, gateway.handle_chat_request(request, session, fwd))
            except SchemaError as exc:
                self._send(400, _error_body("invalid_tool_schema", str(exc)))
            except BudgetExhausted as exc:
                body = _error_body("budget_exhausted", str(exc))
                body["error"].update(session=exc.session, limit=exc.limit)
                self._send(429, body)
            except UpstreamTimeout as exc:
                self._send(504, _error_body("upstream_timeout", str(exc)))
            except UpstreamUnreachable as exc:
                self._send(502, _error_body("upstream_unreachable", str(exc)))
            except UpstreamError as exc:
                self._send(502, _error_body("upstream_error", str(exc)))

    return Handler


def make_server(gateway: Gateway, host: str | None = None, port: int | None = None) -> ThreadingHTTPServer:
    host = gateway.config.host if host is None else host
    port = gateway.config.port if port is None else port
    server = ThreadingHTTPServer((host, port), make_handler(gateway))
    server.daemon_threads = True
    return server


def serve(config: ProxyConfig) -> None:
    gateway = Gateway(config)
    server = make_server(gateway)
    log.info("tafc gateway listening on %s:%d -> %s", *server.server_address[:2], config.upstream_url)
    try:
        server.serve_forever()
    finally:
        server.server_close()
