import json

import pytest

from ober.config import bundled_config_path, load_config
from ober.events import EventLog, InteractionEvent
from ober.outcomes import LearningModel, load_alignments, load_items, load_model, load_outcomes

DATA = bundled_config_path().parent
MIN = 60_000


def read(name):
    with open(DATA / name, encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture
def listing_records():
    return read("listing_outcomes.json"), read("listing_items.json"), read("listing_alignments.json")


@pytest.fixture
def listing_model(listing_records):
    outcomes, items, alignments = listing_records
    forest = load_outcomes(outcomes)
    catalog = load_items(items)
    return LearningModel(forest, catalog, load_alignments(alignments, forest, catalog))


@pytest.fixture(scope="session")
def demo_config():
    return load_config(bundled_config_path())


@pytest.fixture(scope="session")
def demo_model(demo_config):
    return demo_config.model


def make_model(outcomes, items, alignments):
    """Build a model from compact specs: outcomes as (id, parent) pairs, items as ids."""
    forest = load_outcomes([{"id": o, "title": o, "parent_id": p} for o, p in outcomes])
    catalog = load_items([{"id": i, "title": i, "type": "exercise"} for i in items])
    recs = [
        {"outcome_id": o, "learning_item_ids": list(ids), "alignment_type": t} for o, ids, t in alignments
    ]
    return LearningModel(forest, catalog, load_alignments(recs, forest, catalog))


def ev(learner, kind, item=None, t=0, result=None, rec="test"):
    return InteractionEvent(learner, item, kind, rec, t, result)


def log_of(events, path=None):
    log = EventLog(path)
    for e in events:
        log.append(e)
    return log


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    number, title = marker.args[:2]
    prev_ok = _CRITERIA.get(number, (title, True))[1]
    _CRITERIA[number] = (title, prev_ok and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {number:>2}. {title}")
