"""Independent reference computations used by the tests.

Nothing here goes through the library's indexes; each oracle works on the
raw records.
"""

import math
import random

from ober.events import ATTEMPT, CLICK, IMPRESSION, InteractionEvent
from ober.outcomes import PROMOTES, VERIFIES

from .conftest import make_model

RESULT_GRID = [0.0, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 1.0]


def brute_force_mastery(outcome_ids, triples, events):
    """Max result over every (outcome, item, attempt) triple; 0 when none match.

    ``triples`` are raw ``(outcome_id, item_id, alignment_type)`` tuples.
    """
    out = {}
    for o in outcome_ids:
        best = 0.0
        for o2, i, t in triples:
            if o2 != o or t != VERIFIES:
                continue
            for e in events:
                if e.event_kind == ATTEMPT and e.item_id == i and e.result > best:
                    best = e.result
        out[o] = best
    return out


def random_instance(rng: random.Random, max_outcomes=10, max_items=20, max_events=50):
    """Random forest, catalog, alignments and one learner's events.

    Returns ``(model, triples, events)``.
    """
    n_o = rng.randint(1, max_outcomes)
    n_i = rng.randint(1, max_items)
    outcomes = []
    for k in range(n_o):
        parent = None if k == 0 or rng.random() < 0.3 else f"o{rng.randrange(k)}"
        outcomes.append((f"o{k}", parent))
    items = [f"i{k}" for k in range(n_i)]
    alignments, triples = [], []
    for o, _ in outcomes:
        for t in (VERIFIES, PROMOTES):
            if rng.random() < 0.6:
                ids = rng.sample(items, rng.randint(1, min(4, n_i)))
                alignments.append((o, ids, t))
                triples.extend((o, i, t) for i in ids)
    events = []
    for t in range(rng.randint(0, max_events)):
        kind = rng.choice([ATTEMPT, ATTEMPT, CLICK, IMPRESSION])
        item = rng.choice(items + ["not_in_catalog"])
        result = rng.choice(RESULT_GRID) if kind == ATTEMPT else None
        events.append(InteractionEvent("l", item, kind, "x", t, result))
    return make_model(outcomes, items, alignments), triples, events


def random_attempt(rng: random.Random, items, t):
    return InteractionEvent("l", rng.choice(items), ATTEMPT, "x", t, rng.choice(RESULT_GRID))


def cosine_binary(a: set, b: set) -> float:
    if not a or not b:
        return 0.0
    return len(a & b) / math.sqrt(len(a) * len(b))
