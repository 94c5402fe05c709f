"""Append-only JSONL repository of reasoning traces.

One record per line.  Appends go through a single lock and are fsynced by
default, so after a crash the file holds a prefix of the append sequence
plus at most one torn trailing line, which :meth:`TraceStore.open` drops.
A leading ``{"__meta__": ...}`` line, written when the file is rewritten by
:meth:`TraceStore.prune`, carries the id counter so ids are never reused.
"""

from __future__ import annotations

import datetime as _dt
import errno
import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

from .errors import IOFailure, StorageFull
from .filtering import ReasoningTrace

OUTCOMES = ("success", "execution_error", "validation_error", "timeout", "budget_exhausted")
DEFAULT_PRUNE_N = 10_000
META_KEY = "__meta__"


def now_rfc3339() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="microseconds").replace("+00:00", "Z")


@dataclass(frozen=True)
class TraceRecord:
    x: str
    function_name: str
    trace: ReasoningTrace
    parameters: dict[str, Any]
    outcome: str
    id: int | None = None
    timestamp: str | None = None

    def __post_init__(self) -> None:
        if self.outcome not in OUTCOMES:
            raise ValueError(f"outcome must be one of {OUTCOMES}, got {self.outcome!r}")

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "timestamp": self.timestamp,
            "x": self.x,
            "function_name": self.function_name,
            "trace": self.trace.to_json(),
            "parameters": self.parameters,
            "outcome": self.outcome,
        }

    @classmethod
    def from_json(cls, raw: Mapping[str, Any]) -> TraceRecord:
        return cls(
            id=raw["id"],
            timestamp=raw["timestamp"],
            x=raw["x"],
            function_name=raw["function_name"],
            trace=ReasoningTrace.from_json(raw["trace"]),
            parameters=raw["parameters"],
            outcome=raw["outcome"],
        )


@dataclass(frozen=True)
class TrainingExample:
    """One ``(x, f, theta, r)`` tuple; ``record_id`` joins external annotations."""

    x: str
    function_name: str
    theta: dict[str, Any]
    reasoning: ReasoningTrace
    record_id: int
    r_star: str | None = None


class TraceStore:
    """Reasoning repository backed by a JSONL file, or memory when ``path`` is None."""

    def __init__(self, path: str | os.PathLike | None = None, fsync: bool = True, max_records: int | None = None):
        self.path = Path(path) if path is not None else None
        self.fsync = fsync
        self.max_records = max_records
        self._lock = threading.Lock()
        self._records: list[TraceRecord] = []
        self._next_id = 1
        if self.path is not None:
            self._load()

    @classmethod
    def open(cls, path: str | os.PathLike, **kw: Any) -> TraceStore:
        return cls(path, **kw)

    # -- persistence ----------------------------------------------------

    def _load(self) -> None:
        assert self.path is not None
        if not self.path.exists():
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()
            return
        data = self.path.read_bytes()
        good_end = 0
        pos = 0
        next_id = 1
        records: list[TraceRecord] = []
        while pos < len(data):
            nl = data.find(b"\n", pos)
            if nl < 0:
                break  # torn tail: no terminating newline
            line = data[pos:nl]
            try:
                obj = json.loads(line)
                if META_KEY in obj:
                    next_id = max(next_id, int(obj[META_KEY]["next_id"]))
                else:
                    rec = TraceRecord.from_json(obj)
                    if records and rec.id <= records[-1].id:
                        break
                    records.append(rec)
                    next_id = max(next_id, rec.id + 1)
            except (ValueError, KeyError, TypeError):
                break
            pos = nl + 1
            good_end = pos
        if good_end < len(data):
            with open(self.path, "r+b") as fh:
                fh.truncate(good_end)
                self._sync(fh)
        self._records = records
        self._next_id = next_id

    def _sync(self, fh: Any) -> None:
        if self.fsync:
            fh.flush()
            os.fsync(fh.fileno())

    def _write_line(self, payload: dict[str, Any]) -> None:
        assert self.path is not None
        line = (json.dumps(payload, ensure_ascii=False, separators=(",", ":")) + "\n").encode()
        try:
            fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
            try:
                view = memoryview(line)
                while view:
                    n = os.write(fd, view)
                    view = view[n:]
                if self.fsync:
                    os.fsync(fd)
            finally:
                os.close(fd)
        except OSError as exc:
            if exc.errno in (errno.ENOSPC, errno.EDQUOT):
                raise StorageFull(str(exc)) from exc
            raise IOFailure(str(exc)) from exc

    def _rewrite(self, records: list[TraceRecord]) -> None:
        assert self.path is not None
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(json.dumps({META_KEY: {"next_id": self._next_id}}) + "\n")
                for r in records:
                    fh.write(json.dumps(r.to_json(), ensure_ascii=False, separators=(",", ":")) + "\n")
                self._sync(fh)
            os.replace(tmp, self.path)
        except OSError as exc:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise IOFailure(str(exc)) from exc

    # -- operations -----------------------------------------------------

    def append(self, record: TraceRecord) -> int:
        with self._lock:
            if self.max_records is not None and len(self._records) >= self.max_records:
                raise StorageFull(f"trace store holds {self.max_records} records")
            stored = TraceRecord(
                x=record.x,
                function_name=record.function_name,
                trace=record.trace,
                parameters=record.parameters,
                outcome=record.outcome,
                id=self._next_id,
                timestamp=record.timestamp or now_rfc3339(),
            )
            if self.path is not None:
                self._write_line(stored.to_json())
            self._records.append(stored)
            self._next_id += 1
            return stored.id

    def get(self, record_id: int) -> TraceRecord:
        for r in self.records():
            if r.id == record_id:
                return r
        raise KeyError(record_id)

    def records(self) -> list[TraceRecord]:
        with self._lock:
            return list(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records())

    def prune(self, keep_latest: int = DEFAULT_PRUNE_N) -> int:
        """Keep the newest ``keep_latest`` records per function; return how many went."""
        if keep_latest < 0:
            raise ValueError("keep_latest must be >= 0")
        with self._lock:
            seen: dict[str, int] = {}
            kept: list[TraceRecord] = []
            for r in reversed(self._records):
                n = seen.get(r.function_name, 0)
                if n < keep_latest:
                    kept.append(r)
                seen[r.function_name] = n + 1
            kept.reverse()
            removed = len(self._records) - len(kept)
            if removed and self.path is not None:
                self._rewrite(kept)
            self._records = kept
            return removed

    def build_training_set(
        self,
        outcomes: Iterable[str] = ("success",),
        function_name: str | None = None,
        annotations: Mapping[int, str] | None = None,
    ) -> list[TrainingExample]:
        wanted = set(outcomes)
        unknown = wanted - set(OUTCOMES)
        if unknown:
            raise ValueError(f"unknown outcomes {sorted(unknown)}")
        annotations = annotations or {}
        return [
            TrainingExample(
                x=r.x,
                function_name=r.function_name,
                theta=r.parameters,
                reasoning=r.trace,
                record_id=r.id,
                r_star=annotations.get(r.id),
            )
            for r in self.records()
            if r.outcome in wanted and (function_name is None or r.function_name == function_name)
        ]


def load_annotations(path: str | os.PathLike) -> dict[int, str]:
    """Read ``{"id": ..., "r_star": ...}`` lines into an id -> text map."""
    out: dict[int, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                obj = json.loads(line)
                out[int(obj["id"])] = obj["r_star"]
    return out
