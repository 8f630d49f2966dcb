from dataclasses import replace

import numpy as np
import pytest

from ober.errors import ConfigError
from ober.events import ATTEMPT, CLICK, IMPRESSION, EventLog, sessionize
from ober.experiment import report
from ober.recommenders import RecommendationEngine
from ober.simulator import (
    LearnerProfile,
    SimulationConfig,
    attempt_result,
    generate_population,
    simulate,
)


@pytest.fixture
def small(demo_config):
    return replace(demo_config.simulation, learners=300)


def run(cfg, demo_config, path=None, population=None):
    engine = RecommendationEngine(demo_config.model, demo_config.recommenders)
    return simulate(cfg, engine, EventLog(path), demo_config.simulation_experiment(), population)


class TestPopulation:
    def test_empty(self):
        assert generate_population(SimulationConfig(learners=0)) == []

    def test_deterministic(self):
        cfg = SimulationConfig(learners=50, seed=3)
        assert generate_population(cfg) == generate_population(cfg)
        assert generate_population(cfg) != generate_population(replace(cfg, seed=4))

    def test_mean_ability(self):
        pop = generate_population(SimulationConfig(learners=1000, seed=42))
        assert 0.45 <= np.mean([p.ability for p in pop]) <= 0.55
        assert len({p.learner_id for p in pop}) == 1000

    def test_ranges(self):
        with pytest.raises(ValueError):
            LearnerProfile("x", 1.5, 0.5, 0.5)
        with pytest.raises(ConfigError):
            SimulationConfig(difficulty={"a": 2.0})


class TestSimulate:
    def test_byte_identical(self, small, demo_config, tmp_path):
        run(small, demo_config, tmp_path / "a.jsonl")
        run(small, demo_config, tmp_path / "b.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_seed_matters(self, small, demo_config):
        a = run(small, demo_config).snapshot().events()
        b = run(replace(small, seed=7), demo_config).snapshot().events()
        assert a != b

    def test_result_bound_for_strong_learner(self, demo_config):
        cfg = SimulationConfig(learners=1, n=5, max_sessions=5, difficulty={i: 0.0 for i in demo_config.model.catalog.ids})
        pop = [LearnerProfile("star", 1.0, 1.0, 1.0)]
        results = [e.result for e in run(cfg, demo_config, population=pop).events_for("star") if e.event_kind == ATTEMPT]
        assert results and min(results) >= 0.9

    def test_attempt_formula(self):
        assert attempt_result(1.0, 0.0, -0.1) == pytest.approx(0.9)
        assert attempt_result(0.2, 0.5, 0.05) == 0.0
        assert attempt_result(1.0, 0.0, 0.1) == 1.0

    def test_no_clicks(self, demo_config):
        cfg = SimulationConfig(learners=3, max_sessions=3)
        pop = [LearnerProfile(f"p{i}", 0.5, 0.9, 0.0) for i in range(3)]
        kinds = {e.event_kind for e in run(cfg, demo_config, population=pop).snapshot()}
        assert kinds == {IMPRESSION}

    def test_click_follows_impression_and_attempt_follows_click(self, small, demo_config):
        log = run(small, demo_config)
        gap = demo_config.simulation_experiment().session_gap_ms
        for lid in log.learners():
            for session in sessionize(log.events_for(lid), gap):
                shown, clicked = set(), set()
                for e in session.events:
                    if e.event_kind == IMPRESSION:
                        shown.add(e.item_id)
                    elif e.event_kind == CLICK:
                        assert e.item_id in shown
                        clicked.add(e.item_id)
                    else:
                        assert e.item_id in clicked

    def test_sessions_bounded(self, small, demo_config):
        log = run(small, demo_config)
        gap = demo_config.simulation_experiment().session_gap_ms
        counts = [len(sessionize(log.events_for(l), gap)) for l in log.learners()]
        assert len(counts) == small.learners
        assert 1 <= min(counts) and max(counts) <= small.max_sessions

    def test_report_closes(self, small, demo_config):
        log = run(small, demo_config)
        rep = report(demo_config.simulation_experiment(), log.snapshot(), demo_config.model)
        assert len(rep.rows) == 3
        assert sum(r.learners for r in rep.rows) == small.learners
