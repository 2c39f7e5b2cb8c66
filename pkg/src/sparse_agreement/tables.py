"""Core domain types: annotation tables, per-item counts, class distributions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import EmptyTableError


class Annotation(NamedTuple):
    item_id: str
    annotator_id: str
    label: str


@dataclass(frozen=True)
class ItemCounts:
    """Class-count vector for one item: counts[c] annotations into class c.

    This is the sufficient statistic for every agreement metric in the
    package; the total annotation count is exposed as ``n``.
    """

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.counts) < 1:
            raise ValueError("ItemCounts needs at least one class")
        if any((not isinstance(c, (int, np.integer))) or c < 0 for c in self.counts):
            raise ValueError(f"counts must be non-negative integers, got {self.counts}")
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def num_classes(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class ClassDistribution:
    """Probability vector over the label universe."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "probs", probs)
        if len(probs) < 1:
            raise ValueError("distribution needs at least one class")
        if any(p < 0.0 or p > 1.0 or not math.isfinite(p) for p in probs):
            raise ValueError(f"probabilities must lie in [0, 1], got {probs}")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, expected 1")

    @classmethod
    def uniform(cls, num_classes: int) -> ClassDistribution:
        if num_classes < 1:
            raise ValueError("num_classes must be >= 1")
        return cls(tuple(1.0 / num_classes for _ in range(num_classes)))

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> ClassDistribution:
        """Normalize non-negative weights into a distribution."""
        total = math.fsum(weights)
        if total <= 0.0:
            raise ValueError("weights must have positive total")
        return cls(tuple(w / total for w in weights))

    @property
    def num_classes(self) -> int:
        return len(self.probs)

    def __iter__(self) -> Iterator[float]:
        return iter(self.probs)

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class AnnotationTable:
    """Long-format sparse annotation dataset.

    Records are (item_id, annotator_id, label) triples with no duplicate
    (item, annotator) pair; ``item_index`` and ``annotator_index`` assign
    dense indices in order of first appearance, ``label_universe`` fixes
    the class order.
    """

    records: tuple[Annotation, ...]
    label_universe: tuple[str, ...]
    item_index: dict[str, int]
    annotator_index: dict[str, int]

    @classmethod
    def from_records(
        cls,
        records: Iterable[tuple[str, str, str]],
        label_universe: Sequence[str] | None = None,
    ) -> AnnotationTable:
        """Build a table, deriving indices and (unless given) the label set.

        The derived label universe is sorted for determinism; an explicit
        one keeps its order and may include classes never used.
        """
        recs = tuple(Annotation(*r) for r in records)
        if not recs and label_universe is None:
            # A table may become empty through annotation removal, but only
            # if the label universe survives; ingestion rejects empty input.
            raise EmptyTableError("annotation table has no records")
        seen: set[tuple[str, str]] = set()
        item_index: dict[str, int] = {}
        annotator_index: dict[str, int] = {}
        labels_seen: set[str] = set()
        for rec in recs:
            key = (rec.item_id, rec.annotator_id)
            if key in seen:
                raise ValueError(f"duplicate annotation for item={rec.item_id!r} annotator={rec.annotator_id!r}")
            seen.add(key)
            item_index.setdefault(rec.item_id, len(item_index))
            annotator_index.setdefault(rec.annotator_id, len(annotator_index))
            labels_seen.add(rec.label)
        if label_universe is None:
            universe = tuple(sorted(labels_seen))
        else:
            universe = tuple(label_universe)
            if len(set(universe)) != len(universe):
                raise ValueError("label_universe contains duplicates")
            missing = labels_seen - set(universe)
            if missing:
                raise ValueError(f"labels not in declared universe: {sorted(missing)}")
        return cls(recs, universe, item_index, annotator_index)

    @property
    def num_items(self) -> int:
        return len(self.item_index)

    @property
    def num_annotators(self) -> int:
        return len(self.annotator_index)

    @property
    def num_classes(self) -> int:
        return len(self.label_universe)

    @property
    def num_annotations(self) -> int:
        return len(self.records)

    @cached_property
    def item_ids(self) -> tuple[str, ...]:
        ids = [""] * self.num_items
        for item_id, idx in self.item_index.items():
            ids[idx] = item_id
        return tuple(ids)

    @cached_property
    def label_index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.label_universe)}

    @cached_property
    def dense_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(item_idx, label_idx) int32 arrays aligned with ``records``."""
        lab = self.label_index
        item_idx = np.fromiter(
            (self.item_index[r.item_id] for r in self.records), dtype=np.int32, count=len(self.records)
        )
        label_idx = np.fromiter(
            (lab[r.label] for r in self.records), dtype=np.int32, count=len(self.records)
        )
        return item_idx, label_idx

    @cached_property
    def count_matrix(self) -> np.ndarray:
        """(num_items, num_classes) int64 matrix of n_ic."""
        item_idx, label_idx = self.dense_arrays
        flat = item_idx.astype(np.int64) * self.num_classes + label_idx
        return np.bincount(flat, minlength=self.num_items * self.num_classes).reshape(
            self.num_items, self.num_classes
        )

    def item_counts(self) -> tuple[ItemCounts, ...]:
        """Per-item count vectors in dense item order."""
        return tuple(ItemCounts(tuple(int(c) for c in row)) for row in self.count_matrix)

    def subset(self, keep: Sequence[int] | np.ndarray) -> AnnotationTable:
        """New table holding the record positions in ``keep`` (order preserved).

        Items, annotators, and the label universe keep their identity: indices
        are re-derived from the surviving records, the universe is inherited.
        """
        keep_arr = np.asarray(keep)
        if keep_arr.dtype == bool:
            keep_arr = np.flatnonzero(keep_arr)
        recs = [self.records[int(i)] for i in keep_arr]
        return AnnotationTable.from_records(recs, label_universe=self.label_universe)
