"""Outcome forest, item catalog and alignment mappings.

All three structures are validated eagerly when loaded and are read-only
afterwards, so they can be shared freely between threads.  Record shapes
follow the JSON files the content team maintains::

    outcomes:   {"id", "title", "description"?, "parent_id"?}
    items:      {"id", "title", "type"}
    alignments: {"outcome_id", "learning_item_ids", "alignment_type"?}
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

from .errors import (
    CycleDetected,
    DanglingItem,
    DanglingOutcome,
    DuplicateId,
    DuplicateMapping,
    MissingParent,
    ModelError,
    UnknownKind,
    UnknownOutcome,
)

VERIFIES = "verifies"
PROMOTES = "promotes"
ALIGNMENT_TYPES = (VERIFIES, PROMOTES)

EXERCISE = "exercise"
MULTIPLE_CHOICE_QUIZ = "multiple_choice_quiz"
LESSON = "lesson"
OTHER = "other"
ITEM_KINDS = (EXERCISE, MULTIPLE_CHOICE_QUIZ, LESSON)

# raw "type" string -> canonical kind
DEFAULT_KIND_ALIASES: Mapping[str, str] = MappingProxyType(
    {
        "exercise": EXERCISE,
        "multiple_choice_quiz": MULTIPLE_CHOICE_QUIZ,
        "mutlipce_choice_quiz": MULTIPLE_CHOICE_QUIZ,
        "multiple_choice": MULTIPLE_CHOICE_QUIZ,
        "quiz": MULTIPLE_CHOICE_QUIZ,
        "lesson": LESSON,
    }
)


@dataclass(frozen=True)
class Outcome:
    id: str
    title: str
    description: str | None = None
    parent_id: str | None = None

    def to_record(self) -> dict:
        rec = {"id": self.id, "title": self.title}
        if self.description is not None:
            rec["description"] = self.description
        rec["parent_id"] = self.parent_id
        return rec


@dataclass(frozen=True)
class Item:
    """A learning item.

    ``kind`` is the canonical kind (``other`` for unrecognised types) and
    ``raw_type`` keeps the string found in the source so records survive a
    load/serialize round trip untouched.
    """

    id: str
    title: str
    kind: str
    raw_type: str

    @property
    def is_other(self) -> bool:
        return self.kind == OTHER

    def to_record(self) -> dict:
        return {"id": self.id, "title": self.title, "type": self.raw_type}


@dataclass(frozen=True)
class AlignmentMapping:
    outcome_id: str
    item_ids: tuple[str, ...]
    alignment_type: str = VERIFIES

    def to_record(self) -> dict:
        return {
            "outcome_id": self.outcome_id,
            "learning_item_ids": list(self.item_ids),
            "alignment_type": self.alignment_type,
        }


def _require_str(rec: Mapping, key: str, what: str) -> str:
    value = rec.get(key)
    if not isinstance(value, str) or not value:
        raise ModelError(f"{what} record is missing a non-empty string {key!r}: {rec!r}")
    return value


class OutcomeForest:
    """The refines hierarchy of learning outcomes.

    Roots are outcomes without a parent.  Traversal is depth-first with
    roots and siblings in load order.
    """

    def __init__(self, outcomes: Iterable[Outcome]):
        by_id: dict[str, Outcome] = {}
        for o in outcomes:
            if o.id in by_id:
                raise DuplicateId("outcome", o.id)
            by_id[o.id] = o
        children: dict[str, list[str]] = {oid: [] for oid in by_id}
        roots = []
        for o in by_id.values():
            if o.parent_id is None:
                roots.append(o.id)
            elif o.parent_id not in by_id:
                raise MissingParent(o.id, o.parent_id)
            else:
                children[o.parent_id].append(o.id)
        self._by_id = by_id
        self._children = {k: tuple(v) for k, v in children.items()}
        self._roots = tuple(roots)
        self._check_acyclic()
        self._order = tuple(self._dfs())
        self._position = {oid: i for i, oid in enumerate(self._order)}

    def _check_acyclic(self) -> None:
        # every parent exists, so a cycle is exactly a parent chain that never reaches a root
        settled: set[str] = set()
        for start in self._by_id:
            path: list[str] = []
            on_path: set[str] = set()
            node: str | None = start
            while node is not None and node not in settled:
                if node in on_path:
                    cycle = path[path.index(node):] + [node]
                    raise CycleDetected(cycle)
                path.append(node)
                on_path.add(node)
                node = self._by_id[node].parent_id
            settled.update(path)

    def _dfs(self) -> Iterator[str]:
        stack = list(reversed(self._roots))
        while stack:
            oid = stack.pop()
            yield oid
            stack.extend(reversed(self._children[oid]))

    def __len__(self) -> int:
        return len(self._by_id)

    def __contains__(self, outcome_id: object) -> bool:
        return outcome_id in self._by_id

    def __iter__(self) -> Iterator[Outcome]:
        return iter(self._by_id.values())

    def __getitem__(self, outcome_id: str) -> Outcome:
        try:
            return self._by_id[outcome_id]
        except KeyError:
            raise UnknownOutcome(outcome_id) from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OutcomeForest):
            return NotImplemented
        return list(self._by_id.values()) == list(other._by_id.values())

    @property
    def ids(self) -> tuple[str, ...]:
        """Outcome ids in load order."""
        return tuple(self._by_id)

    @property
    def roots(self) -> tuple[str, ...]:
        return self._roots

    def traverse(self) -> list[str]:
        return list(self._order)

    def dfs_index(self, outcome_id: str) -> int:
        try:
            return self._position[outcome_id]
        except KeyError:
            raise UnknownOutcome(outcome_id) from None

    def children(self, outcome_id: str) -> list[str]:
        if outcome_id not in self._children:
            raise UnknownOutcome(outcome_id)
        return list(self._children[outcome_id])

    def is_leaf(self, outcome_id: str) -> bool:
        return not self.children(outcome_id)

    def leaves(self) -> list[str]:
        return [oid for oid in self._order if not self._children[oid]]

    def ancestors(self, outcome_id: str) -> list[str]:
        """Parent first, root last."""
        node = self[outcome_id].parent_id
        out = []
        while node is not None:
            out.append(node)
            node = self._by_id[node].parent_id
        return out

    def to_records(self) -> list[dict]:
        return [o.to_record() for o in self._by_id.values()]


class ItemCatalog:
    def __init__(self, items: Iterable[Item]):
        by_id: dict[str, Item] = {}
        for item in items:
            if item.id in by_id:
                raise DuplicateId("item", item.id)
            by_id[item.id] = item
        self._by_id = by_id
        self._position = {iid: i for i, iid in enumerate(by_id)}

    def __len__(self) -> int:
        return len(self._by_id)

    def __contains__(self, item_id: object) -> bool:
        return item_id in self._by_id

    def __iter__(self) -> Iterator[Item]:
        return iter(self._by_id.values())

    def __getitem__(self, item_id: str) -> Item:
        return self._by_id[item_id]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ItemCatalog):
            return NotImplemented
        return list(self._by_id.values()) == list(other._by_id.values())

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(self._by_id)

    def position(self, item_id: str) -> int:
        return self._position[item_id]

    def to_records(self) -> list[dict]:
        return [item.to_record() for item in self._by_id.values()]


class AlignmentSet:
    """Validated item-outcome links, indexed both ways.

    One item may verify or promote several outcomes.
    """

    def __init__(self, mappings: Iterable[AlignmentMapping]):
        self._mappings = tuple(mappings)
        self._by_key: dict[tuple[str, str], AlignmentMapping] = {}
        self._item_targets: dict[tuple[str, str], list[str]] = {}
        for m in self._mappings:
            key = (m.outcome_id, m.alignment_type)
            if key in self._by_key:
                raise DuplicateMapping(*key)
            self._by_key[key] = m
            for iid in m.item_ids:
                targets = self._item_targets.setdefault((iid, m.alignment_type), [])
                if m.outcome_id not in targets:
                    targets.append(m.outcome_id)

    def __len__(self) -> int:
        return len(self._mappings)

    def __iter__(self) -> Iterator[AlignmentMapping]:
        return iter(self._mappings)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AlignmentSet):
            return NotImplemented
        return self._mappings == other._mappings

    def items_for(self, outcome_id: str, alignment_type: str = VERIFIES) -> tuple[str, ...]:
        m = self._by_key.get((outcome_id, alignment_type))
        return m.item_ids if m is not None else ()

    def verifying_items(self, outcome_id: str) -> tuple[str, ...]:
        return self.items_for(outcome_id, VERIFIES)

    def promoting_items(self, outcome_id: str) -> tuple[str, ...]:
        return self.items_for(outcome_id, PROMOTES)

    def outcomes_for(self, item_id: str, alignment_type: str = VERIFIES) -> tuple[str, ...]:
        return tuple(self._item_targets.get((item_id, alignment_type), ()))

    def of_type(self, alignment_type: str) -> "AlignmentSet":
        return AlignmentSet(m for m in self._mappings if m.alignment_type == alignment_type)

    def to_records(self) -> list[dict]:
        return [m.to_record() for m in self._mappings]


@dataclass(frozen=True)
class CoverageReport:
    unverified_outcomes: list[str]
    verifying_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "unverified_outcomes": list(self.unverified_outcomes),
            "verifying_counts": dict(self.verifying_counts),
        }


@dataclass(frozen=True)
class LearningModel:
    """Forest, catalog and alignments loaded together."""

    forest: OutcomeForest
    catalog: ItemCatalog
    alignments: AlignmentSet


def load_outcomes(source: Iterable[Mapping]) -> OutcomeForest:
    outcomes = []
    for rec in source:
        oid = _require_str(rec, "id", "outcome")
        parent = rec.get("parent_id")
        if parent is not None and not isinstance(parent, str):
            raise ModelError(f"outcome {oid!r} has non-string parent_id {parent!r}")
        outcomes.append(
            Outcome(
                id=oid,
                title=rec.get("title", oid),
                description=rec.get("description"),
                parent_id=parent,
            )
        )
    return OutcomeForest(outcomes)


def load_items(
    source: Iterable[Mapping],
    *,
    strict: bool = False,
    aliases: Mapping[str, str] = DEFAULT_KIND_ALIASES,
) -> ItemCatalog:
    """Load item records, normalising their ``type`` through ``aliases``.

    Unrecognised types become kind ``other`` unless ``strict`` is set, in
    which case :class:`UnknownKind` is raised.
    """
    items = []
    for rec in source:
        iid = _require_str(rec, "id", "item")
        raw = rec.get("type", OTHER)
        if not isinstance(raw, str):
            raise ModelError(f"item {iid!r} has non-string type {raw!r}")
        kind = aliases.get(raw)
        if kind is None:
            if strict:
                raise UnknownKind(iid, raw)
            kind = OTHER
        items.append(Item(id=iid, title=rec.get("title", iid), kind=kind, raw_type=raw))
    return ItemCatalog(items)


def load_alignments(
    source: Iterable[Mapping], forest: OutcomeForest, catalog: ItemCatalog
) -> AlignmentSet:
    mappings = []
    for rec in source:
        oid = _require_str(rec, "outcome_id", "alignment")
        if oid not in forest:
            raise DanglingOutcome(oid)
        item_ids = rec.get("learning_item_ids")
        if not isinstance(item_ids, list) or not item_ids:
            raise ModelError(f"alignment for {oid!r} needs a non-empty learning_item_ids list")
        for iid in item_ids:
            if iid not in catalog:
                raise DanglingItem(iid)
        atype = rec.get("alignment_type", VERIFIES)
        if atype not in ALIGNMENT_TYPES:
            raise ModelError(f"alignment for {oid!r} has unknown alignment_type {atype!r}")
        mappings.append(AlignmentMapping(oid, tuple(dict.fromkeys(item_ids)), atype))
    return AlignmentSet(mappings)


def audit_coverage(forest: OutcomeForest, alignments: AlignmentSet) -> CoverageReport:
    counts = {oid: len(alignments.verifying_items(oid)) for oid in forest.traverse()}
    return CoverageReport(
        unverified_outcomes=[oid for oid, n in counts.items() if n == 0],
        verifying_counts=counts,
    )


def _read_json(path: Path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def load_model(
    outcomes_path: str | Path,
    items_path: str | Path,
    alignments_path: str | Path,
    *,
    strict: bool = False,
) -> LearningModel:
    forest = load_outcomes(_read_json(Path(outcomes_path)))
    catalog = load_items(_read_json(Path(items_path)), strict=strict)
    alignments = load_alignments(_read_json(Path(alignments_path)), forest, catalog)
    return LearningModel(forest, catalog, alignments)
