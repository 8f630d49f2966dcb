"""Synthetic learners for rehearsing a split test end to end.

The behaviour model is intentionally small: each learner has an ability,
an engagement level (chance of coming back for another session) and a
click propensity.  A clicked item is attempted straight away with result
``clamp(ability - difficulty + U(-0.1, 0.1), 0, 1)``.

Sessions are simulated round by round: in round k every still-active
learner plays their k-th session against a snapshot taken at the start of
the round, so peer-based methods see everyone's earlier sessions.
Randomness is drawn from per-learner generators seeded from
``(seed, learner_id)``; the output depends on nothing else.
"""

from __future__ import annotations

import hashlib
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .events import CLICK, IMPRESSION, EventLog, InteractionEvent, attempt
from .experiment import ExperimentConfig, assign_group
from .recommenders import RecommendationEngine, RecommendationRequest

# 2024-01-01T00:00:00Z
BASE_TIMESTAMP_MS = 1_704_067_200_000
SESSION_SPACING_MS = 24 * 60 * 60 * 1000
EVENT_SPACING_MS = 60 * 1000
LEARNER_OFFSET_MS = 1000

DEFAULT_DIFFICULTY = 0.5
NOISE = 0.1


@dataclass(frozen=True)
class LearnerProfile:
    learner_id: str
    ability: float
    engagement: float
    click_propensity: float

    def __post_init__(self):
        for name in ("ability", "engagement", "click_propensity"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v!r} outside [0, 1]")


@dataclass(frozen=True)
class SimulationConfig:
    learners: int = 6000
    max_sessions: int = 10
    n: int = 3
    seed: int = 42
    difficulty: Mapping[str, float] = field(default_factory=dict)
    experiment_id: str | None = None

    def __post_init__(self):
        if self.learners < 0:
            raise ConfigError("learner count must be non-negative")
        if self.max_sessions < 1 or self.n < 1:
            raise ConfigError("max_sessions and n must be at least 1")
        for iid, d in self.difficulty.items():
            if not 0.0 <= d <= 1.0:
                raise ConfigError(f"difficulty of {iid!r} outside [0, 1]")

    def difficulty_of(self, item_id: str) -> float:
        return self.difficulty.get(item_id, DEFAULT_DIFFICULTY)

    @classmethod
    def from_dict(cls, d: Mapping) -> "SimulationConfig":
        return cls(
            learners=int(d.get("learners", 6000)),
            max_sessions=int(d.get("max_sessions", 10)),
            n=int(d.get("n", 3)),
            seed=int(d.get("seed", 42)),
            difficulty={str(k): float(v) for k, v in d.get("difficulty", {}).items()},
            experiment_id=d.get("experiment"),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "SimulationConfig":
        from .config import read_config_file

        return cls.from_dict(read_config_file(path))


def generate_population(config: SimulationConfig) -> list[LearnerProfile]:
    rng = np.random.default_rng(config.seed)
    traits = rng.uniform(0.0, 1.0, size=(config.learners, 3))
    width = max(5, len(str(config.learners)))
    return [
        LearnerProfile(f"learner-{i + 1:0{width}d}", float(a), float(e), float(c))
        for i, (a, e, c) in enumerate(traits)
    ]


def learner_rng(seed: int, learner_id: str) -> np.random.Generator:
    key = int.from_bytes(hashlib.sha256(learner_id.encode("utf-8")).digest()[:8], "big")
    return np.random.default_rng(np.random.SeedSequence([seed, key]))


def attempt_result(ability: float, difficulty: float, noise: float) -> float:
    return min(1.0, max(0.0, ability - difficulty + noise))


def simulate(
    config: SimulationConfig,
    engine: RecommendationEngine,
    log: EventLog,
    experiment: ExperimentConfig,
    population: list[LearnerProfile] | None = None,
) -> EventLog:
    """Play every learner's sessions through ``engine`` and append them to ``log``."""
    if population is None:
        population = generate_population(config)
    rngs = {p.learner_id: learner_rng(config.seed, p.learner_id) for p in population}
    methods = {p.learner_id: experiment.method_for(assign_group(p.learner_id, experiment)) for p in population}
    active = list(enumerate(population))
    for session in range(config.max_sessions):
        snapshot = log.snapshot()
        still_active = []
        for slot, profile in active:
            lid = profile.learner_id
            rng = rngs[lid]
            method = methods[lid]
            start = BASE_TIMESTAMP_MS + session * SESSION_SPACING_MS + slot * LEARNER_OFFSET_MS
            recs = engine.recommend(RecommendationRequest(lid, config.n, snapshot, method, now_ms=start))
            events = _play_session(profile, recs.item_ids, method, start, rng, config)
            log.append_many(events)
            if rng.random() < profile.engagement:
                still_active.append((slot, profile))
        active = still_active
        if not active:
            break
    return log


def _play_session(profile, items, method, start, rng, config) -> list[InteractionEvent]:
    lid = profile.learner_id
    clock = iter(range(start, start + SESSION_SPACING_MS, EVENT_SPACING_MS))
    if not items:
        # the learner opened the app but there was nothing left to show
        return [InteractionEvent(lid, None, IMPRESSION, method, next(clock))]
    events = [InteractionEvent(lid, iid, IMPRESSION, method, next(clock)) for iid in items]
    for iid in items:
        clicked = rng.random() < profile.click_propensity
        noise = rng.uniform(-NOISE, NOISE)
        if not clicked:
            continue
        events.append(InteractionEvent(lid, iid, CLICK, method, next(clock)))
        result = attempt_result(profile.ability, config.difficulty_of(iid), noise)
        events.append(attempt(lid, iid, result, next(clock), method))
    return events

