"""Pluggable recommendation methods.

Every method is a callable object with a ``label`` and a
``recommend(request, model, config)`` method returning ordered item ids.
:class:`RecommendationEngine` dispatches on the request's method label;
new methods plug in through :meth:`RecommendationEngine.register`.
"""

from __future__ import annotations

import time
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DanglingItem, EmptySequence, UnknownMethod
from .events import ATTEMPT, InteractionEvent, LogSnapshot
from .mastery import outcome_mastery
from .outcomes import PROMOTES, LearningModel

FIXED = "fixed"
CF = "cf"
KB = "kb"


@dataclass(frozen=True)
class RecommenderConfig:
    fixed_sequence: tuple[str, ...] = ()
    cf_k: int = 20
    completion_threshold: float = 0.5
    mastery_threshold: float = 1.0

    def __post_init__(self):
        if self.cf_k < 1:
            raise ConfigError("cf.k must be at least 1")
        for name in ("completion_threshold", "mastery_threshold"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")

    @classmethod
    def from_dict(cls, d: Mapping) -> "RecommenderConfig":
        """Parse ``{"fixed": {"sequence": [...]}, "cf": {"k": 20}, "thresholds": {...}}``."""
        thresholds = d.get("thresholds", {})
        return cls(
            fixed_sequence=tuple(d.get("fixed", {}).get("sequence", ())),
            cf_k=int(d.get("cf", {}).get("k", 20)),
            completion_threshold=float(thresholds.get("completion", 0.5)),
            mastery_threshold=float(thresholds.get("mastery", 1.0)),
        )

    def to_dict(self) -> dict:
        return {
            "fixed": {"sequence": list(self.fixed_sequence)},
            "cf": {"k": self.cf_k},
            "thresholds": {"completion": self.completion_threshold, "mastery": self.mastery_threshold},
        }


@dataclass(frozen=True)
class RecommendationRequest:
    learner_id: str
    n: int
    snapshot: LogSnapshot
    method: str
    now_ms: int | None = None

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")


@dataclass(frozen=True)
class RecommendationList:
    item_ids: tuple[str, ...]
    method: str
    generated_at_ms: int = field(compare=False, default=0)

    def __len__(self) -> int:
        return len(self.item_ids)

    def to_dict(self) -> dict:
        return {"items": list(self.item_ids), "method": self.method, "generated_at_ms": self.generated_at_ms}


def completed_items(events: Sequence[InteractionEvent], threshold: float) -> set[str]:
    return {
        ev.item_id
        for ev in events
        if ev.event_kind == ATTEMPT and ev.item_id is not None and ev.result >= threshold
    }


def next_in_sequence(sequence: Sequence[str], exclude: set[str], n: int) -> list[str]:
    out = []
    for iid in sequence:
        if iid in exclude or iid in out:
            continue
        out.append(iid)
        if len(out) == n:
            break
    return out


class FixedTrajectory:
    """The curated sequence, skipping what the learner already completed."""

    label = FIXED

    def recommend(self, request, model, config):
        if not config.fixed_sequence:
            raise EmptySequence("fixed trajectory needs a non-empty sequence")
        done = completed_items(request.snapshot.events_for(request.learner_id), config.completion_threshold)
        return next_in_sequence(config.fixed_sequence, done, request.n)


def cosine_similarities(target: np.ndarray, others: np.ndarray) -> np.ndarray:
    """Cosine similarity of a binary vector against each row of ``others``."""
    target = target.astype(float)
    others = others.astype(float)
    dots = others @ target
    norms = np.sqrt(others.sum(axis=1) * target.sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = np.where(norms > 0, dots / norms, 0.0)
    return sims


def popularity_ranking(completion_counts: Mapping[str, int], candidates: Sequence[str]) -> list[str]:
    return sorted(candidates, key=lambda iid: (-completion_counts.get(iid, 0), iid))


class UserKNN:
    """User-based k-nearest-neighbour collaborative filtering.

    Learners are binary vectors over the catalog (1 where any attempt was
    made) compared by cosine similarity.  A candidate item scores the sum of
    ``similarity * neighbour's best result`` over the top-k neighbours with
    positive similarity.  Learners without attempts, or without any similar
    peer, get the catalog ranked by completion count instead.
    """

    label = CF

    def recommend(self, request, model, config):
        snapshot = request.snapshot
        catalog_ids = model.catalog.ids
        index = snapshot.attempt_index(catalog_ids)
        done = completed_items(snapshot.events_for(request.learner_id), config.completion_threshold)
        candidates = [iid for iid in catalog_ids if iid not in done]
        if not candidates:
            return []
        row = index.row.get(request.learner_id)
        if row is not None:
            ranked = self._neighbour_scores(index, row, config.cf_k, set(candidates))
            if ranked is not None:
                return ranked[: request.n]
        counts = (index.best >= config.completion_threshold) & index.attempted
        completion_counts = dict(zip(index.item_ids, counts.sum(axis=0).tolist()))
        return popularity_ranking(completion_counts, candidates)[: request.n]

    @staticmethod
    def _neighbour_scores(index, row, k, candidates):
        sims = cosine_similarities(index.attempted[row], index.attempted)
        sims[row] = 0.0
        positive = np.flatnonzero(sims > 0)
        if positive.size == 0:
            return None
        # similarity descending, learner id ascending
        order = positive[np.lexsort((index.id_rank[positive], -sims[positive]))][:k]
        scores = sims[order] @ index.best[order]
        ranked = [
            (float(s), iid)
            for iid, s in zip(index.item_ids, scores)
            if s > 0 and iid in candidates
        ]
        ranked.sort(key=lambda t: (-t[0], t[1]))
        return [iid for _, iid in ranked]


class KnowledgeBased:
    """Targets the learner's weakest outcomes through promotes mappings.

    Outcomes under the mastery threshold are ranked by ascending score, ties
    in forest DFS order; their uncompleted promoting items are emitted
    outcome by outcome in catalog order.  When nothing qualifies the fixed
    sequence is used, minus items that only promote already mastered
    outcomes.
    """

    label = KB

    def recommend(self, request, model, config):
        events = request.snapshot.events_for(request.learner_id)
        done = completed_items(events, config.completion_threshold)
        scores = outcome_mastery(events, model.alignments, model.forest)
        forest, catalog, alignments = model.forest, model.catalog, model.alignments
        open_outcomes = [oid for oid, s in scores.items() if s < config.mastery_threshold]
        open_outcomes.sort(key=lambda oid: (scores[oid], forest.dfs_index(oid)))
        out: list[str] = []
        for oid in open_outcomes:
            items = sorted(alignments.promoting_items(oid), key=catalog.position)
            for iid in items:
                if iid not in done and iid not in out:
                    out.append(iid)
                    if len(out) == request.n:
                        return out
        if out:
            return out
        mastered = {oid for oid, s in scores.items() if s >= config.mastery_threshold}
        exhausted = {
            iid
            for iid in catalog.ids
            if (targets := alignments.outcomes_for(iid, PROMOTES)) and set(targets) <= mastered
        }
        if not config.fixed_sequence:
            return []
        return next_in_sequence(config.fixed_sequence, done | exhausted, request.n)


class RecommendationEngine:
    """Dispatches requests to registered methods over a shared model and config."""

    def __init__(self, model: LearningModel, config: RecommenderConfig, methods=None, clock=None):
        self.model = model
        self.config = config
        self._clock = clock or (lambda: int(time.time() * 1000))
        self._methods = {}
        for method in methods if methods is not None else (FixedTrajectory(), UserKNN(), KnowledgeBased()):
            self.register(method)
        for iid in config.fixed_sequence:
            if iid not in model.catalog:
                raise DanglingItem(iid)

    def register(self, method) -> None:
        self._methods[method.label] = method

    @property
    def methods(self) -> list[str]:
        return list(self._methods)

    def recommend(self, request: RecommendationRequest) -> RecommendationList:
        try:
            method = self._methods[request.method]
        except KeyError:
            raise UnknownMethod(request.method) from None
        items = method.recommend(request, self.model, self.config)
        stamp = request.now_ms if request.now_ms is not None else self._clock()
        return RecommendationList(tuple(items), request.method, stamp)
