"""Outcome mastery from interaction logs.

An outcome's score is the best result the learner obtained on any item
that verifies it; total mastery is the plain sum over outcomes.  Outcomes
without verifying items can optionally be filled in from their children.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .errors import WeightUndefined, ZeroWeightSum
from .events import ATTEMPT, InteractionEvent
from .outcomes import AlignmentSet, LearningModel, OutcomeForest

PER_ITEM_MAX = "max"
PER_ITEM_MEAN = "mean"

ROLLUP_MEAN = "mean"
ROLLUP_WEIGHTED = "weighted"


def item_results(events: Iterable[InteractionEvent], per_item: str = PER_ITEM_MAX) -> dict[str, float]:
    """Collapse repeated attempts into one result per item."""
    if per_item == PER_ITEM_MAX:
        best: dict[str, float] = {}
        for ev in events:
            if ev.event_kind == ATTEMPT and ev.item_id is not None:
                prev = best.get(ev.item_id)
                if prev is None or ev.result > prev:
                    best[ev.item_id] = ev.result
        return best
    if per_item == PER_ITEM_MEAN:
        sums: dict[str, list[float]] = {}
        for ev in events:
            if ev.event_kind == ATTEMPT and ev.item_id is not None:
                sums.setdefault(ev.item_id, []).append(ev.result)
        return {iid: sum(rs) / len(rs) for iid, rs in sums.items()}
    raise ValueError(f"unknown per-item aggregation {per_item!r}")


def scores_from_results(
    results: Mapping[str, float], alignments: AlignmentSet, forest: OutcomeForest
) -> dict[str, float]:
    scores = {}
    for oid in forest.ids:
        best_r = 0.0
        for iid in alignments.verifying_items(oid):
            r = results.get(iid)
            if r is not None and r > best_r:
                best_r = r
        scores[oid] = best_r
    return scores


def outcome_mastery(
    events: Iterable[InteractionEvent],
    alignments: AlignmentSet,
    forest: OutcomeForest,
    per_item: str = PER_ITEM_MAX,
) -> dict[str, float]:
    """Per-outcome mastery in forest load order; unverified outcomes score 0."""
    return scores_from_results(item_results(events, per_item), alignments, forest)


def total_mastery(
    scores: Mapping[str, float], forest: OutcomeForest | None = None, *, leaves_only: bool = False
) -> float:
    if leaves_only:
        if forest is None:
            raise ValueError("leaves_only needs the forest")
        return float(sum(scores[oid] for oid in forest.leaves()))
    return float(sum(scores.values()))


def rollup_mastery(
    scores: Mapping[str, float],
    forest: OutcomeForest,
    alignments: AlignmentSet,
    aggregation: str = ROLLUP_MEAN,
    weights: Mapping[str, float] | None = None,
) -> dict[str, float]:
    """Infer scores of outcomes that have children but no verifying items.

    Children are resolved first, so a chain of unverified internal nodes
    rolls up all the way from the leaves.  With ``aggregation="weighted"``
    every child involved needs an entry in ``weights``.
    """
    if aggregation not in (ROLLUP_MEAN, ROLLUP_WEIGHTED):
        raise ValueError(f"unknown roll-up aggregation {aggregation!r}")
    if aggregation == ROLLUP_WEIGHTED and weights is None:
        raise ValueError("weighted roll-up needs weights")
    out = dict(scores)
    # reverse DFS visits every child before its parent
    for oid in reversed(forest.traverse()):
        kids = forest.children(oid)
        if not kids or alignments.verifying_items(oid):
            continue
        if aggregation == ROLLUP_MEAN:
            out[oid] = sum(out[k] for k in kids) / len(kids)
            continue
        ws = []
        for k in kids:
            w = weights.get(k)
            if w is None:
                raise WeightUndefined(k)
            if w < 0:
                raise ValueError(f"negative weight for outcome {k!r}")
            ws.append(w)
        total_w = sum(ws)
        if total_w <= 0:
            raise ZeroWeightSum(oid)
        out[oid] = sum(w * out[k] for w, k in zip(ws, kids)) / total_w
    return out


@dataclass(frozen=True)
class MasteryReport:
    learner_id: str
    scores: dict[str, float]
    total: float

    @property
    def normalized(self) -> float:
        """Total divided by the number of outcomes (0 for an empty forest)."""
        return self.total / len(self.scores) if self.scores else 0.0

    def to_dict(self) -> dict:
        return {"learner_id": self.learner_id, "scores": dict(self.scores), "total": self.total}

    @classmethod
    def from_dict(cls, d: Mapping) -> "MasteryReport":
        return cls(d["learner_id"], dict(d["scores"]), float(d["total"]))


def mastery_report(
    learner_id: str,
    events: Iterable[InteractionEvent],
    model: LearningModel,
    *,
    per_item: str = PER_ITEM_MAX,
    rollup: str | None = None,
    weights: Mapping[str, float] | None = None,
    leaves_only: bool = False,
) -> MasteryReport:
    """Build a learner's report; ``rollup`` names an aggregation to fill unverified parents."""
    scores = outcome_mastery(events, model.alignments, model.forest, per_item)
    if rollup is not None:
        scores = rollup_mastery(scores, model.forest, model.alignments, rollup, weights)
    return MasteryReport(learner_id, scores, total_mastery(scores, model.forest, leaves_only=leaves_only))
