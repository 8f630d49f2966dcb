"""Split-test bookkeeping: group assignment, group metrics and reports.

Nothing in here knows which recommendation method a group runs.  Groups
are resolved from learner ids alone, and every metric is computed from
the same event stream whatever produced it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import asdict, dataclass, field

from .errors import ConfigError, EmptyGroup, NoImpressions
from .events import CLICK, DEFAULT_SESSION_GAP_MS, IMPRESSION, InteractionEvent, LogSnapshot, sessionize
from .mastery import PER_ITEM_MAX, outcome_mastery, total_mastery
from .outcomes import AlignmentSet, LearningModel, OutcomeForest

SURVIVORS = "survivors"
FULL_COHORT = "full"

REPORT_COLUMNS = ("Method", "Learners", "Retention", "Relevance", "Mastery")
GROWTH_COLUMNS = ("group", "session_index", "mean_mastery")


@dataclass(frozen=True)
class Group:
    label: str
    method: str
    weight: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    groups: tuple[Group, ...]
    session_gap_ms: int = DEFAULT_SESSION_GAP_MS
    salt: str = ""

    def __post_init__(self):
        if len(self.groups) < 2:
            raise ConfigError("an experiment needs at least two groups")
        labels = [g.label for g in self.groups]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate group labels in {labels}")
        if any(g.weight < 0 for g in self.groups):
            raise ConfigError("group weights must be non-negative")
        if sum(g.weight for g in self.groups) <= 0:
            raise ConfigError("group weights must have a positive sum")
        if self.session_gap_ms <= 0:
            raise ConfigError("session gap must be positive")

    @property
    def labels(self) -> list[str]:
        return [g.label for g in self.groups]

    def method_for(self, label: str) -> str:
        for g in self.groups:
            if g.label == label:
                return g.method
        raise KeyError(label)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ExperimentConfig":
        gap_ms = d.get("session_gap_ms")
        if gap_ms is None:
            gap_ms = int(float(d.get("session_gap_minutes", 30)) * 60_000)
        try:
            groups = tuple(
                Group(str(g["label"]), str(g["method"]), float(g.get("weight", 1.0))) for g in d["groups"]
            )
            return cls(str(d["id"]), groups, int(gap_ms), str(d.get("salt", "")))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad experiment config: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "id": self.experiment_id,
            "groups": [asdict(g) for g in self.groups],
            "session_gap_ms": self.session_gap_ms,
            "salt": self.salt,
        }


def _unit_hash(salt: str, learner_id: str) -> float:
    digest = hashlib.sha256(f"{salt}\x1f{learner_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


def assign_group(learner_id: str, config: ExperimentConfig) -> str:
    """Map a learner to a group label, proportionally to group weights.

    The bucket is a pure function of (salt, learner id, weights), so it is
    the same on every host and every run.
    """
    u = _unit_hash(config.salt, learner_id)
    total = sum(g.weight for g in config.groups)
    acc = 0.0
    chosen = None
    for g in config.groups:
        if g.weight <= 0:
            continue
        acc += g.weight / total
        chosen = g.label
        if u < acc:
            return g.label
    return chosen  # float round-off near u -> 1


def partition_learners(learner_ids: Iterable[str], config: ExperimentConfig) -> dict[str, list[str]]:
    groups: dict[str, list[str]] = {label: [] for label in config.labels}
    for lid in learner_ids:
        groups[assign_group(lid, config)].append(lid)
    return groups


GroupEvents = Mapping[str, Sequence[InteractionEvent]]


def _require_learners(group_events: GroupEvents, group=None) -> None:
    if not group_events:
        raise EmptyGroup(group)


def retention(group_events: GroupEvents, gap=DEFAULT_SESSION_GAP_MS, *, group=None) -> float:
    """Mean number of sessions per learner."""
    _require_learners(group_events, group)
    counts = [len(sessionize(evs, gap)) for evs in group_events.values()]
    return sum(counts) / len(counts)


def click_through_rate(events: Iterable[InteractionEvent]) -> float | None:
    """Clicks over item impressions; ``None`` when nothing was shown."""
    shown = clicked = 0
    for ev in events:
        if ev.event_kind == IMPRESSION and ev.item_id is not None:
            shown += 1
        elif ev.event_kind == CLICK:
            clicked += 1
    return clicked / shown if shown else None


def relevance(group_events: GroupEvents, *, group=None) -> float:
    """Macro-averaged CTR; learners who were never shown an item are left out."""
    _require_learners(group_events, group)
    rates = [r for r in map(click_through_rate, group_events.values()) if r is not None]
    if not rates:
        raise NoImpressions(group)
    return sum(rates) / len(rates)


def _normalized_total(events, alignments, forest, per_item) -> float:
    if len(forest) == 0:
        return 0.0
    return total_mastery(outcome_mastery(events, alignments, forest, per_item)) / len(forest)


def mastery_metric(
    group_events: GroupEvents,
    alignments: AlignmentSet,
    forest: OutcomeForest,
    *,
    normalized: bool = True,
    per_item: str = PER_ITEM_MAX,
    group=None,
) -> float:
    """Mean per-learner total mastery, divided by the outcome count unless ``normalized=False``."""
    _require_learners(group_events, group)
    if normalized:
        values = [_normalized_total(evs, alignments, forest, per_item) for evs in group_events.values()]
    else:
        values = [total_mastery(outcome_mastery(evs, alignments, forest, per_item)) for evs in group_events.values()]
    return sum(values) / len(values)


@dataclass(frozen=True)
class MasteryGrowthSeries:
    group: str
    values: tuple[float, ...]
    cohort_sizes: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.values)

    def to_dict(self) -> dict:
        return {"group": self.group, "values": list(self.values), "cohort_sizes": list(self.cohort_sizes)}


def learner_growth(
    events: Sequence[InteractionEvent],
    alignments: AlignmentSet,
    forest: OutcomeForest,
    gap=DEFAULT_SESSION_GAP_MS,
    sessions: int = 10,
    per_item: str = PER_ITEM_MAX,
) -> list[float]:
    """Normalized total mastery after each of the learner's first ``sessions`` sessions."""
    out = []
    prefix: list[InteractionEvent] = []
    for s in sessionize(events, gap)[:sessions]:
        prefix.extend(s.events)
        out.append(_normalized_total(prefix, alignments, forest, per_item))
    return out


def mastery_growth(
    group_events: GroupEvents,
    alignments: AlignmentSet,
    forest: OutcomeForest,
    gap=DEFAULT_SESSION_GAP_MS,
    sessions: int = 10,
    *,
    cohort: str = SURVIVORS,
    per_item: str = PER_ITEM_MAX,
    group: str = "",
) -> MasteryGrowthSeries:
    """Mean cumulative mastery by session index.

    With ``cohort="survivors"`` the value at index k averages the learners
    who had at least k sessions.  ``cohort="full"`` keeps every learner and
    carries each one's last value forward.
    """
    if cohort not in (SURVIVORS, FULL_COHORT):
        raise ValueError(f"unknown cohort mode {cohort!r}")
    if sessions < 1:
        raise ValueError("sessions must be at least 1")
    _require_learners(group_events, group or None)
    curves = [learner_growth(evs, alignments, forest, gap, sessions, per_item) for evs in group_events.values()]
    curves = [c for c in curves if c]
    length = max((len(c) for c in curves), default=0)
    values, sizes = [], []
    for k in range(length):
        if cohort == SURVIVORS:
            pts = [c[k] for c in curves if len(c) > k]
        else:
            pts = [c[min(k, len(c) - 1)] for c in curves]
        values.append(sum(pts) / len(pts))
        sizes.append(len(pts))
    return MasteryGrowthSeries(group, tuple(values), tuple(sizes))


@dataclass(frozen=True)
class GroupMetrics:
    group: str
    learners: int
    retention: float
    relevance: float
    mastery: float
    raw_mastery: float = 0.0

    def to_row(self) -> list:
        return [self.group, self.learners, f"{self.retention:.2f}", f"{self.relevance:.4f}", f"{self.mastery:.4f}"]


@dataclass(frozen=True)
class ExperimentReport:
    experiment_id: str
    rows: tuple[GroupMetrics, ...]
    growth: tuple[MasteryGrowthSeries, ...] = field(default=())

    def row(self, group: str) -> GroupMetrics:
        for r in self.rows:
            if r.group == group:
                return r
        raise KeyError(group)

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "columns": list(REPORT_COLUMNS),
            "rows": [asdict(r) for r in self.rows],
            "growth": [g.to_dict() for g in self.growth],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.rows:
            w.writerow(r.to_row())
        return buf.getvalue()

    def growth_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(GROWTH_COLUMNS)
        for series in self.growth:
            for k, v in enumerate(series.values, 1):
                w.writerow([series.group, k, repr(v)])
        return buf.getvalue()


def report(
    config: ExperimentConfig,
    snapshot: LogSnapshot,
    model: LearningModel,
    *,
    sessions: int = 10,
    cohort: str = SURVIVORS,
    per_item: str = PER_ITEM_MAX,
) -> ExperimentReport:
    """One metrics row and one growth series per configured group."""
    by_learner = snapshot.by_learner()
    groups = partition_learners(by_learner, config)
    rows, growth = [], []
    for label in config.labels:
        evs = {lid: by_learner[lid] for lid in groups[label]}
        if not evs:
            raise EmptyGroup(label)
        rows.append(
            GroupMetrics(
                group=label,
                learners=len(evs),
                retention=retention(evs, config.session_gap_ms, group=label),
                relevance=relevance(evs, group=label),
                mastery=mastery_metric(evs, model.alignments, model.forest, per_item=per_item, group=label),
                raw_mastery=mastery_metric(
                    evs, model.alignments, model.forest, normalized=False, per_item=per_item, group=label
                ),
            )
        )
        growth.append(
            mastery_growth(
                evs,
                model.alignments,
                model.forest,
                config.session_gap_ms,
                sessions,
                cohort=cohort,
                per_item=per_item,
                group=label,
            )
        )
    return ExperimentReport(config.experiment_id, tuple(rows), tuple(growth))
