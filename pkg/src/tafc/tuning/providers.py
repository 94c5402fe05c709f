"""Model provider interfaces plus deterministic in-tree stand-ins."""

from __future__ import annotations

import hashlib
import json
import math
import re
import threading
from collections import Counter
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping, Protocol, Sequence, runtime_checkable

import numpy as np

from ..errors import ProviderFailure

_TOKEN = re.compile(r"\w+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@runtime_checkable
class ChatProvider(Protocol):
    def complete(self, prompt: str) -> str: ...


@runtime_checkable
class EmbeddingProvider(Protocol):
    def embed(self, text: str) -> np.ndarray: ...


@runtime_checkable
class LogProbProvider(Protocol):
    def logprob(self, text: str, context: str) -> float: ...


@dataclass
class ProviderBundle:
    chat: ChatProvider
    embed: EmbeddingProvider
    logprob: LogProbProvider
    # model that answers tool-call prompts; defaults to ``chat``
    agent: ChatProvider | None = None

    @property
    def caller(self) -> ChatProvider:
        return self.agent or self.chat


class HashedBagOfWordsEmbedder:
    """Token counts hashed into a fixed number of buckets."""

    def __init__(self, dim: int = 64):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim

    def bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for tok in tokenize(text):
            vec[self.bucket(tok)] += 1.0
        return vec


class TokenOverlapLogProb:
    """Pseudo log-probability: add-one smoothed unigram model of the context.

    ``log P(text | context) = sum_t log((count_ctx(t) + 1) / (|ctx| + V))``
    with ``V`` the joint vocabulary size.  Always finite and <= 0.
    """

    def logprob(self, text: str, context: str) -> float:
        toks = tokenize(text)
        ctx = Counter(tokenize(context))
        total = sum(ctx.values())
        vocab = len(set(toks) | set(ctx))
        if not toks:
            return 0.0
        return sum(math.log((ctx[t] + 1) / (total + vocab)) for t in toks)


Responder = Callable[[str], str]


class ScriptedChatProvider:
    """Answers from a table of ``(regex, response)`` rules, then a queue, then a default.

    A response may be a string or a callable taking the prompt.  ``queue``
    responses are consumed in order when no rule matches.  Every prompt is
    recorded in :attr:`prompts`.
    """

    def __init__(
        self,
        rules: Iterable[tuple[str, str | Responder]] = (),
        queue: Sequence[str] = (),
        default: str | Responder | None = None,
    ):
        self.rules = [(re.compile(p, re.S), r) for p, r in rules]
        self.queue = list(queue)
        self.default = default
        self.prompts: list[str] = []
        self._lock = threading.Lock()

    def complete(self, prompt: str) -> str:
        with self._lock:
            self.prompts.append(prompt)
            for pattern, response in self.rules:
                if pattern.search(prompt):
                    return response(prompt) if callable(response) else response
            if self.queue:
                return self.queue.pop(0)
        if self.default is None:
            raise ProviderFailure("scripted provider has no response for this prompt")
        return self.default(prompt) if callable(self.default) else self.default


class HttpChatProvider:
    """Chat-completions endpoint used as a plain text-in/text-out model."""

    def __init__(self, base_url: str, model: str, api_key: str | None = None, temperature: float = 0.1, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.temperature = temperature
        self.timeout = timeout

    def complete(self, prompt: str) -> str:
        import httpx

        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        body = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            resp = httpx.post(f"{self.base_url}/v1/chat/completions", json=body, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"].get("content") or ""
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise ProviderFailure(f"chat provider failed: {exc}") from exc


def build_providers(cfg: Mapping[str, Any] | None) -> ProviderBundle:
    """Build providers from a config mapping (``chat``/``embed``/``logprob``/``agent`` entries)."""
    cfg = cfg or {}

    def chat_from(spec: Mapping[str, Any] | None) -> ChatProvider | None:
        if spec is None:
            return None
        kind = spec.get("type", "scripted")
        if kind == "scripted":
            rules = [(r["pattern"], r["response"]) for r in spec.get("rules", [])]
            return ScriptedChatProvider(rules, spec.get("queue", []), spec.get("default"))
        if kind == "echo":
            return ScriptedChatProvider(default=lambda p: p)
        if kind == "http":
            return HttpChatProvider(
                spec["base_url"], spec.get("model", "default"), spec.get("api_key"), spec.get("temperature", 0.1)
            )
        raise ValueError(f"unknown chat provider type {kind!r}")

    embed_cfg = cfg.get("embed", {})
    if embed_cfg.get("type", "hashed_bow") != "hashed_bow":
        raise ValueError(f"unknown embedding provider {embed_cfg.get('type')!r}")
    logprob_cfg = cfg.get("logprob", {})
    if logprob_cfg.get("type", "token_overlap") != "token_overlap":
        raise ValueError(f"unknown logprob provider {logprob_cfg.get('type')!r}")

    chat = chat_from(cfg.get("chat", {"type": "scripted", "default": ""}))
    assert chat is not None
    return ProviderBundle(
        chat=chat,
        embed=HashedBagOfWordsEmbedder(embed_cfg.get("dim", 64)),
        logprob=TokenOverlapLogProb(),
        agent=chat_from(cfg.get("agent")),
    )


def parse_json_object(text: str) -> dict[str, Any] | None:
    """First JSON object found in ``text`` or None."""
    text = text.strip()
    try:
        obj = json.loads(text)
        return obj if isinstance(obj, dict) else None
    except ValueError:
        pass
    start = text.find("{")
    while start >= 0:
        try:
            obj, _ = json.JSONDecoder().raw_decode(text[start:])
            if isinstance(obj, dict):
                return obj
        except ValueError:
            pass
        start = text.find("{", start + 1)
    return None
