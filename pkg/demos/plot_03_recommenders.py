"""
Three ways to pick the next item
================================

The engine serves a fixed trajectory, a user-kNN collaborative filter and
a knowledge-based method off the same event log.
"""

from ober import EventLog, RecommendationEngine, RecommendationRequest, load_config
from ober.events import attempt

cfg = load_config()  # bundled demo course
engine = RecommendationEngine(cfg.model, cfg.recommenders)
log = EventLog()  # in memory

log.append_many([
    attempt("peer-1", "lesson_ablution", 1.0, 0),
    attempt("peer-1", "ablution_practice", 1.0, 60_000),
    attempt("peer-1", "prayer_times_quiz", 0.8, 120_000),
    attempt("peer-2", "lesson_ablution", 1.0, 0),
    attempt("peer-2", "recitation_practice", 0.7, 60_000),
    attempt("me", "lesson_ablution", 1.0, 0),
])

snap = log.snapshot()
for method in engine.methods:
    recs = engine.recommend(RecommendationRequest("me", 3, snap, method))
    print(f"{method:6s}", recs.item_ids)

# %%
# A newcomer with no history
# --------------------------
# The collaborative filter has no neighbours to go on and falls back to
# the most completed items.

print(engine.recommend(RecommendationRequest("newcomer", 3, snap, "cf")).item_ids)
