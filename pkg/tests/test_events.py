import json
import threading
from datetime import timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ober.errors import StorageFailure, ValidationFailed
from ober.events import (
    ATTEMPT,
    CLICK,
    IMPRESSION,
    EventLog,
    InteractionEvent,
    attempt,
    read_events,
    sessionize,
)

from .conftest import MIN, ev, log_of


class TestValidation:
    def test_attempt_round_trip(self, tmp_path):
        path = tmp_path / "e.jsonl"
        log = EventLog(path)
        log.append(attempt("l1", "ablution_practice", 0.8, 1000))
        [back] = EventLog(path).events_for("l1")
        assert back.item_id == "ablution_practice" and back.result == 0.8

    def test_result_above_one(self):
        with pytest.raises(ValidationFailed):
            EventLog().append(ev("l1", ATTEMPT, "x", result=1.2))

    def test_impression_with_result(self):
        with pytest.raises(ValidationFailed):
            EventLog().append(ev("l1", IMPRESSION, "x", result=0.5))

    @pytest.mark.parametrize(
        "event",
        [
            ev("l1", ATTEMPT, "x"),
            ev("l1", ATTEMPT, "x", result=-0.1),
            ev("l1", ATTEMPT, "x", result=float("nan")),
            ev("l1", ATTEMPT, "x", result=True),
            ev("l1", CLICK, None),
            ev("l1", "view", "x"),
            ev("", IMPRESSION, "x"),
            ev("l1", IMPRESSION, "x", t=-5),
            ev("l1", IMPRESSION, "x", t=1.5),
        ],
    )
    def test_rejected(self, event):
        with pytest.raises(ValidationFailed):
            event.validate()

    def test_itemless_impression_allowed(self):
        ev("l1", IMPRESSION, None).validate()

    def test_timestamps_must_not_go_back_per_learner(self):
        log = log_of([ev("a", IMPRESSION, "x", t=100), ev("b", IMPRESSION, "x", t=10)])
        log.append(ev("a", IMPRESSION, "x", t=100))
        with pytest.raises(ValidationFailed):
            log.append(ev("a", IMPRESSION, "x", t=99))

    def test_batch_is_all_or_nothing(self, tmp_path):
        path = tmp_path / "e.jsonl"
        log = EventLog(path)
        with pytest.raises(ValidationFailed):
            log.append_many([ev("a", IMPRESSION, "x", t=1), ev("a", ATTEMPT, "x", t=2, result=3.0)])
        assert len(log) == 0
        assert not path.exists() or path.read_text() == ""

    def test_wire_format(self):
        d = json.loads(attempt("l", "i", 1, 5, "kb").to_json())
        assert list(d) == ["learner_id", "item_id", "event_kind", "result", "recommender", "timestamp_ms"]
        assert "result" not in json.loads(ev("l", CLICK, "i").to_json())

    def test_from_dict_rejects_unknown_fields(self):
        with pytest.raises(ValidationFailed):
            InteractionEvent.from_dict(
                {"learner_id": "l", "item_id": "i", "event_kind": "click", "recommender": "", "timestamp_ms": 1, "x": 1}
            )

    def test_from_dict_accepts_int_result(self):
        e = InteractionEvent.from_dict(
            {"learner_id": "l", "item_id": "i", "event_kind": "attempt", "result": 1, "recommender": "", "timestamp_ms": 1}
        )
        assert e.result == 1.0 and isinstance(e.result, float)


class TestQueries:
    def test_unknown_learner(self):
        assert EventLog().events_for("nobody") == []

    def test_two_events_in_order(self):
        a, b = ev("l", IMPRESSION, "x", t=1), ev("l", CLICK, "x", t=2)
        assert log_of([a, b]).events_for("l") == [a, b]

    def test_interleaved_learners_against_raw_file(self, tmp_path):
        path = tmp_path / "e.jsonl"
        events = [ev(lid, IMPRESSION, "x", t=t) for t in range(20) for lid in ("a", "b", "c") if (t + ord(lid)) % 3]
        log = log_of(events, path)
        # replay oracle: parse the raw file line by line
        raw = [json.loads(line) for line in path.read_text().splitlines()]
        for lid in ("a", "b", "c"):
            expected = [r["timestamp_ms"] for r in raw if r["learner_id"] == lid]
            assert [e.timestamp_ms for e in log.events_for(lid)] == expected

    def test_snapshot_is_a_prefix(self):
        log = log_of([ev("a", IMPRESSION, "x", t=1)])
        snap = log.snapshot()
        log.append(ev("a", CLICK, "x", t=2))
        log.append(ev("b", CLICK, "x", t=2))
        assert len(snap) == 1
        assert len(snap.events_for("a")) == 1
        assert snap.learners() == ["a"]
        assert len(log.snapshot().events_for("a")) == 2

    def test_replay_matches_incremental(self, tmp_path):
        path = tmp_path / "e.jsonl"
        events = [ev(f"l{i % 4}", ATTEMPT, f"i{i % 5}", t=i, result=(i % 11) / 10) for i in range(60)]
        live = log_of(events, path)
        replayed = EventLog(path)
        assert replayed.index_state() == live.index_state()
        assert replayed.snapshot().events() == live.snapshot().events()
        assert read_events(path) == events

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "e.jsonl"
        path.write_text('{"learner_id": "a"}\n')
        with pytest.raises(StorageFailure):
            EventLog(path)

    def test_unwritable_path(self, tmp_path):
        log = EventLog(tmp_path / "missing" / "dir" / "e.jsonl")
        with pytest.raises(StorageFailure):
            log.append(ev("a", CLICK, "x"))

    def test_concurrent_appends_are_serialized(self, tmp_path):
        path = tmp_path / "e.jsonl"
        log = EventLog(path)

        def worker(lid):
            for t in range(200):
                log.append(ev(lid, CLICK, "x", t=t))

        threads = [threading.Thread(target=worker, args=(f"w{i}",)) for i in range(4)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        assert len(log) == 800
        assert EventLog(path).index_state() == log.index_state()

    def test_attempt_index(self):
        log = log_of(
            [ev("a", ATTEMPT, "i1", t=0, result=0.3), ev("a", ATTEMPT, "i1", t=1, result=0.7), ev("b", ATTEMPT, "i2", t=0, result=0.0)]
        )
        idx = log.snapshot().attempt_index(["i1", "i2", "i3"])
        assert idx.learner_ids == ["a", "b"]
        assert idx.best.tolist() == [[0.7, 0.0, 0.0], [0.0, 0.0, 0.0]]
        assert idx.attempted.tolist() == [[True, False, False], [False, True, False]]


class TestSessionize:
    def test_gap_split(self):
        events = [ev("l", CLICK, "x", t=0), ev("l", CLICK, "x", t=600 * MIN)]
        sessions = sessionize(events, 30 * MIN)
        assert len(sessions) == 2
        assert [s.index for s in sessions] == [1, 2]

    def test_exact_gap_stays_together(self):
        events = [ev("l", CLICK, "x", t=0), ev("l", CLICK, "x", t=30 * MIN), ev("l", CLICK, "x", t=60 * MIN + 1)]
        assert [len(s) for s in sessionize(events, 30 * MIN)] == [2, 1]

    def test_single_and_empty(self):
        assert len(sessionize([ev("l", CLICK, "x")])) == 1
        assert sessionize([]) == []

    def test_timedelta_gap(self):
        events = [ev("l", CLICK, "x", t=0), ev("l", CLICK, "x", t=45 * MIN)]
        assert len(sessionize(events, timedelta(hours=1))) == 1
        assert len(sessionize(events, timedelta(minutes=30))) == 2

    @given(
        st.lists(st.integers(0, 10_000), max_size=40),
        st.integers(0, 5000),
        st.integers(0, 5000),
    )
    def test_gap_monotone_and_conserving(self, offsets, g1, g2):
        times = sorted(offsets)
        events = [ev("l", CLICK, "x", t=t) for t in times]
        small, large = sorted((g1, g2))
        s_small, s_large = sessionize(events, small), sessionize(events, large)
        assert len(s_large) <= len(s_small)
        assert sum(len(s) for s in s_small) == len(events)
        for s in s_small:
            gaps = [b.timestamp_ms - a.timestamp_ms for a, b in zip(s.events, s.events[1:])]
            assert all(g <= small for g in gaps)
        for a, b in zip(s_small, s_small[1:]):
            assert b.start_ms - a.end_ms > small
