"""
Loading an outcome model and auditing coverage
==============================================

A course is described by three JSON files: a forest of learning outcomes,
a catalog of learning items, and the alignments between them.
"""

from importlib.resources import files

from ober import audit_coverage, load_model

data = files("ober") / "data"

# the three-record excerpt: a prayer outcome tree with ablution under it
model = load_model(
    data / "listing_outcomes.json",
    data / "listing_items.json",
    data / "listing_alignments.json",
)

# outcomes in depth-first order, indented by depth
for oid in model.forest.traverse():
    depth = len(model.forest.ancestors(oid))
    print("  " * depth + oid)

# the misspelled quiz type in the source data is read as a quiz
for item in model.catalog:
    print(item.id, item.kind, item.raw_type)

# %%
# Coverage audit
# --------------
# An outcome nobody can demonstrate stays at zero mastery forever.  The
# audit lists every outcome that has no verifying item.

cov = audit_coverage(model.forest, model.alignments)
print("under-assessed:", cov.unverified_outcomes)
print("verifying items per outcome:", cov.verifying_counts)
