"""Append-only interaction log backed by a JSON-lines file.

The file is the source of truth; the in-memory index (learner -> event
offsets) is rebuilt by replaying it on open.  Writers are serialized
through one lock, and readers work on :class:`LogSnapshot` objects, which
always see a prefix of the append order.
"""

from __future__ import annotations

import bisect
import json
import math
import os
import threading
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from datetime import timedelta
from pathlib import Path

import numpy as np

from .errors import StorageFailure, ValidationFailed

IMPRESSION = "impression"
CLICK = "click"
ATTEMPT = "attempt"
EVENT_KINDS = (IMPRESSION, CLICK, ATTEMPT)

DEFAULT_SESSION_GAP_MS = 30 * 60 * 1000


@dataclass(frozen=True)
class InteractionEvent:
    learner_id: str
    item_id: str | None
    event_kind: str
    recommender: str
    timestamp_ms: int
    result: float | None = None

    def validate(self) -> "InteractionEvent":
        if not isinstance(self.learner_id, str) or not self.learner_id:
            raise ValidationFailed("learner_id must be a non-empty string")
        if self.event_kind not in EVENT_KINDS:
            raise ValidationFailed(f"unknown event_kind {self.event_kind!r}")
        if self.item_id is None:
            if self.event_kind != IMPRESSION:
                raise ValidationFailed(f"{self.event_kind} events need an item_id")
        elif not isinstance(self.item_id, str) or not self.item_id:
            raise ValidationFailed("item_id must be a non-empty string")
        if not isinstance(self.recommender, str):
            raise ValidationFailed("recommender must be a string")
        ts = self.timestamp_ms
        if isinstance(ts, bool) or not isinstance(ts, int) or ts < 0:
            raise ValidationFailed(f"timestamp_ms must be a non-negative integer, got {ts!r}")
        if self.event_kind == ATTEMPT:
            r = self.result
            if isinstance(r, bool) or not isinstance(r, (int, float)):
                raise ValidationFailed("attempt events need a numeric result")
            if not math.isfinite(r) or not 0.0 <= r <= 1.0:
                raise ValidationFailed(f"result {r!r} outside [0, 1]")
        elif self.result is not None:
            raise ValidationFailed(f"{self.event_kind} events must not carry a result")
        return self

    def to_dict(self) -> dict:
        d = {"learner_id": self.learner_id, "item_id": self.item_id, "event_kind": self.event_kind}
        if self.result is not None:
            d["result"] = self.result
        d["recommender"] = self.recommender
        d["timestamp_ms"] = self.timestamp_ms
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "InteractionEvent":
        expected = {"learner_id", "item_id", "event_kind", "recommender", "timestamp_ms"}
        keys = set(d)
        if not expected <= keys or not keys <= expected | {"result"}:
            raise ValidationFailed(f"event fields must be exactly {sorted(expected)} plus optional result")
        result = d.get("result")
        if isinstance(result, int) and not isinstance(result, bool):
            result = float(result)
        return cls(
            learner_id=d["learner_id"],
            item_id=d["item_id"],
            event_kind=d["event_kind"],
            recommender=d["recommender"],
            timestamp_ms=d["timestamp_ms"],
            result=result,
        ).validate()


def attempt(learner_id, item_id, result, timestamp_ms, recommender=""):
    return InteractionEvent(learner_id, item_id, ATTEMPT, recommender, timestamp_ms, float(result))


def impression(learner_id, item_id, timestamp_ms, recommender=""):
    return InteractionEvent(learner_id, item_id, IMPRESSION, recommender, timestamp_ms)


def click(learner_id, item_id, timestamp_ms, recommender=""):
    return InteractionEvent(learner_id, item_id, CLICK, recommender, timestamp_ms)


@dataclass(frozen=True)
class Session:
    learner_id: str
    index: int
    start_ms: int
    end_ms: int
    events: tuple[InteractionEvent, ...]

    def __len__(self) -> int:
        return len(self.events)


def _gap_ms(gap) -> int:
    if isinstance(gap, timedelta):
        return int(gap.total_seconds() * 1000)
    return int(gap)


def sessionize(events: Sequence[InteractionEvent], gap=DEFAULT_SESSION_GAP_MS) -> list[Session]:
    """Split one learner's time-ordered events wherever the idle gap exceeds ``gap``.

    ``gap`` is in milliseconds or a :class:`datetime.timedelta`.
    """
    gap = _gap_ms(gap)
    sessions: list[Session] = []
    current: list[InteractionEvent] = []
    for ev in events:
        if current and ev.timestamp_ms - current[-1].timestamp_ms > gap:
            sessions.append(_close(current, len(sessions) + 1))
            current = []
        current.append(ev)
    if current:
        sessions.append(_close(current, len(sessions) + 1))
    return sessions


def _close(events, index):
    return Session(events[0].learner_id, index, events[0].timestamp_ms, events[-1].timestamp_ms, tuple(events))


class AttemptIndex:
    """Dense learner x item view of best attempt results at one snapshot.

    ``best`` holds the highest result per cell (0 where never attempted) and
    ``attempted`` marks the cells with at least one attempt.  Items outside
    ``item_ids`` are ignored.
    """

    def __init__(self, learner_ids: Sequence[str], item_ids: Sequence[str], best, attempted):
        self.learner_ids = list(learner_ids)
        self.item_ids = list(item_ids)
        self.row = {lid: i for i, lid in enumerate(self.learner_ids)}
        self.best = best
        self.attempted = attempted
        # rank of each learner id in sorted order, for deterministic tie-breaks
        self.id_rank = np.empty(len(self.learner_ids), dtype=np.int64)
        self.id_rank[np.argsort(np.array(self.learner_ids, dtype=object), kind="stable")] = np.arange(
            len(self.learner_ids)
        )

    @classmethod
    def build(cls, events: Iterable[InteractionEvent], item_ids: Sequence[str]) -> "AttemptIndex":
        col = {iid: j for j, iid in enumerate(item_ids)}
        rows: dict[str, int] = {}
        cells: dict[tuple[int, int], float] = {}
        for ev in events:
            if ev.event_kind != ATTEMPT or ev.item_id not in col:
                continue
            r = rows.setdefault(ev.learner_id, len(rows))
            key = (r, col[ev.item_id])
            prev = cells.get(key)
            if prev is None or ev.result > prev:
                cells[key] = ev.result
        best = np.zeros((len(rows), len(item_ids)))
        attempted = np.zeros((len(rows), len(item_ids)), dtype=bool)
        for (r, c), v in cells.items():
            best[r, c] = v
            attempted[r, c] = True
        return cls(list(rows), list(item_ids), best, attempted)


class LogSnapshot:
    """Immutable view of the first ``len(self)`` events of an :class:`EventLog`."""

    def __init__(self, log: "EventLog", length: int):
        self._log = log
        self._length = length

    def __len__(self) -> int:
        return self._length

    def __iter__(self) -> Iterator[InteractionEvent]:
        return iter(self._log._events[: self._length])

    def events(self) -> list[InteractionEvent]:
        return self._log._events[: self._length]

    def learners(self) -> list[str]:
        """Learner ids in order of first appearance."""
        return [lid for lid, offs in list(self._log._index.items()) if offs and offs[0] < self._length]

    def events_for(self, learner_id: str) -> list[InteractionEvent]:
        offsets = self._log._index.get(learner_id)
        if not offsets:
            return []
        stop = bisect.bisect_left(offsets, self._length)
        events = self._log._events
        return [events[o] for o in offsets[:stop]]

    def by_learner(self) -> dict[str, list[InteractionEvent]]:
        return {lid: self.events_for(lid) for lid in self.learners()}

    def attempt_index(self, item_ids: Sequence[str]) -> AttemptIndex:
        return self._log._attempt_index(self._length, tuple(item_ids))


class EventLog:
    """Append-only event store.

    With ``path=None`` the log lives in memory only.  ``fsync`` forces every
    append to disk before it is acknowledged.
    """

    def __init__(self, path: str | Path | None = None, *, fsync: bool = False):
        self.path = Path(path) if path is not None else None
        self.fsync = fsync
        self._lock = threading.Lock()
        self._events: list[InteractionEvent] = []
        self._index: dict[str, list[int]] = {}
        self._last_ts: dict[str, int] = {}
        self._cache: tuple | None = None
        if self.path is not None and self.path.exists():
            self._replay()

    def _replay(self) -> None:
        try:
            with open(self.path, encoding="utf-8") as f:
                lines = f.readlines()
        except OSError as exc:
            raise StorageFailure(str(exc)) from exc
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                ev = InteractionEvent.from_dict(json.loads(line))
            except (json.JSONDecodeError, ValidationFailed, TypeError) as exc:
                raise StorageFailure(f"{self.path}:{lineno}: {exc}") from exc
            self._check_order(ev)
            self._index_event(ev)

    def _check_order(self, ev: InteractionEvent) -> None:
        last = self._last_ts.get(ev.learner_id)
        if last is not None and ev.timestamp_ms < last:
            raise ValidationFailed(
                f"timestamp {ev.timestamp_ms} precedes {last} for learner {ev.learner_id!r}"
            )

    def _index_event(self, ev: InteractionEvent) -> int:
        offset = len(self._events)
        self._events.append(ev)
        self._index.setdefault(ev.learner_id, []).append(offset)
        self._last_ts[ev.learner_id] = ev.timestamp_ms
        return offset

    def __len__(self) -> int:
        return len(self._events)

    def append(self, event: InteractionEvent) -> int:
        """Validate, persist and index one event; returns its offset."""
        return self.append_many([event])[0]

    def append_many(self, events: Sequence[InteractionEvent]) -> list[int]:
        """Append a batch atomically: either every event is accepted or none is."""
        with self._lock:
            return self._append_locked(events)

    def _append_locked(self, events: Sequence[InteractionEvent]) -> list[int]:
        last: dict[str, int] = {}
        for ev in events:
            ev.validate()
            prev = last.get(ev.learner_id, self._last_ts.get(ev.learner_id))
            if prev is not None and ev.timestamp_ms < prev:
                raise ValidationFailed(
                    f"timestamp {ev.timestamp_ms} precedes {prev} for learner {ev.learner_id!r}"
                )
            last[ev.learner_id] = ev.timestamp_ms
        if self.path is not None and events:
            payload = "".join(ev.to_json() + "\n" for ev in events)
            try:
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(payload)
                    f.flush()
                    if self.fsync:
                        os.fsync(f.fileno())
            except OSError as exc:
                raise StorageFailure(str(exc)) from exc
        return [self._index_event(ev) for ev in events]

    def transaction(self):
        """Hold the writer lock; use with :meth:`append_locked` for read-then-write sequences."""
        return self._lock

    def append_locked(self, events: Sequence[InteractionEvent]) -> list[int]:
        """Like :meth:`append_many`, for callers already holding :meth:`transaction`."""
        return self._append_locked(events)

    def last_timestamp(self, learner_id: str) -> int | None:
        return self._last_ts.get(learner_id)

    def snapshot(self) -> LogSnapshot:
        return LogSnapshot(self, len(self._events))

    def events_for(self, learner_id: str) -> list[InteractionEvent]:
        return self.snapshot().events_for(learner_id)

    def learners(self) -> list[str]:
        return self.snapshot().learners()

    def index_state(self) -> dict[str, list[int]]:
        """Copy of the learner -> offsets index, for replay checks."""
        return {k: list(v) for k, v in self._index.items()}

    def _attempt_index(self, length: int, item_ids: tuple[str, ...]) -> AttemptIndex:
        key = (length, item_ids)
        cached = self._cache
        if cached is None or cached[0] != key:
            cached = (key, AttemptIndex.build(self._events[:length], item_ids))
            self._cache = cached
        return cached[1]


def read_events(path: str | Path) -> list[InteractionEvent]:
    return EventLog(path).snapshot().events()
