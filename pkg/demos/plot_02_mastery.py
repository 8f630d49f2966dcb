"""
Mastery from a learner's attempts
=================================

Each outcome is scored by the best result on any item that verifies it.
The learner's total is the plain sum over all outcomes.
"""

from importlib.resources import files

from ober import load_model, mastery_report
from ober.events import attempt

data = files("ober") / "data"
model = load_model(data / "demo_outcomes.json", data / "demo_items.json", data / "demo_alignments.json")

# two tries on the same exercise: only the better one counts
events = [
    attempt("amina", "ablution_practice", 0.4, 1_000),
    attempt("amina", "ablution_practice", 0.9, 2_000),
    attempt("amina", "what_nullifies_ablution", 0.6, 3_000),
]

rep = mastery_report("amina", events, model)
for oid, score in rep.scores.items():
    if score:
        print(f"{oid:22s} {score:.2f}")
print("total", rep.total, "normalized", round(rep.normalized, 4))

# %%
# Averaging repeat attempts instead
# ---------------------------------

rep_mean = mastery_report("amina", events, model, per_item="mean")
print("performing_ablution (mean of tries):", rep_mean.scores["performing_ablution"])

# %%
# Rolling children up into parents
# --------------------------------
# Parents with no verifying item of their own stay at zero by default.
# A roll-up fills them from their children, bottom up.

rolled = mastery_report("amina", events, model, rollup="mean")
print("ablution after roll-up:", rolled.scores["ablution"])
print("pray_correctly after roll-up:", round(rolled.scores["pray_correctly"], 4))
