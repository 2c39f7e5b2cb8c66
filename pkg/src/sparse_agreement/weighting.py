"""Item-weighting schemes for the sparse agreement estimator.

Six schemes: four direct functions of the annotation count (flat,
annotations, annotations_m1, edge) and two inverse-variance weightings
backed by the closed forms in ``variance``. Every scheme assigns weight 0
to items with fewer than 2 annotations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import DegenerateCurveError, InvalidClassCountError
from .tables import ClassDistribution, ItemCounts
from .variance import item_variance_classdist, item_variance_uniform

SIMPLE_SCHEME_KINDS = ("flat", "annotations", "annotations_m1", "edge")
SCHEME_KINDS = SIMPLE_SCHEME_KINDS + ("inv_var", "inv_var_class")

# Degenerate distributions can make the closed-form variance exactly zero;
# a finite cap keeps the weighted mean defined instead of letting one item
# swallow the estimate.
ZERO_VARIANCE_WEIGHT_CAP = 1e12


@dataclass(frozen=True)
class WeightScheme:
    """Named weighting rule, plus the context the inverse-variance kinds need."""

    kind: str
    class_dist: ClassDistribution | None = None
    num_classes: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme {self.kind!r}; expected one of {SCHEME_KINDS}")
        if self.kind == "inv_var":
            if self.num_classes is None:
                raise InvalidClassCountError("inv_var needs num_classes")
            if self.num_classes < 2:
                raise InvalidClassCountError(f"inv_var needs >= 2 classes, got {self.num_classes}")
        if self.kind == "inv_var_class" and self.class_dist is None:
            raise ValueError("inv_var_class needs a class distribution")

    @property
    def name(self) -> str:
        return self.kind


@dataclass(frozen=True)
class WeightVector:
    """Non-negative per-item weights aligned with an item sequence."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if any(v < 0.0 or not math.isfinite(v) for v in vals):
            raise ValueError("weights must be finite and non-negative")

    def __iter__(self) -> Iterator[float]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]


def simple_weight(scheme: WeightScheme, counts: ItemCounts) -> float:
    """Weight of one item under a count-based scheme (0 whenever n < 2)."""
    if scheme.kind not in SIMPLE_SCHEME_KINDS:
        raise ValueError(f"{scheme.kind!r} is not a simple scheme")
    return weight_for_n(scheme, counts.n)


def weight_for_n(
    scheme: WeightScheme,
    n: int,
    zero_variance_weight: float = ZERO_VARIANCE_WEIGHT_CAP,
) -> float:
    """Raw weight of an item with ``n`` annotations under any scheme."""
    if n < 2:
        return 0.0
    if scheme.kind == "flat":
        return 1.0
    if scheme.kind == "annotations":
        return float(n)
    if scheme.kind == "annotations_m1":
        return float(n - 1)
    if scheme.kind == "edge":
        return n * (n - 1) / 2.0
    if scheme.kind == "inv_var":
        assert scheme.num_classes is not None
        result = item_variance_uniform(n, scheme.num_classes)
    else:
        assert scheme.class_dist is not None
        result = item_variance_classdist(n, scheme.class_dist)
    if result.is_infinite:
        return 0.0
    if result.variance == 0.0:
        return zero_variance_weight
    return 1.0 / result.variance


def compute_weights(
    scheme: WeightScheme,
    items: Sequence[ItemCounts],
    zero_variance_weight: float = ZERO_VARIANCE_WEIGHT_CAP,
) -> WeightVector:
    """Realize a scheme over an item sequence.

    An all-zero vector is legal here (e.g. every item below 2 annotations);
    ``spa`` is the place that rejects it.
    """
    return WeightVector(tuple(weight_for_n(scheme, it.n, zero_variance_weight) for it in items))


def weight_curve(
    scheme: WeightScheme, n_range: tuple[int, int]
) -> list[tuple[int, float]]:
    """(n, weight / max weight) pairs over an inclusive annotation-count range."""
    lo, hi = n_range
    if lo < 1 or hi < lo:
        raise ValueError(f"invalid range {n_range}")
    raw = [(n, weight_for_n(scheme, n)) for n in range(lo, hi + 1)]
    top = max(w for _, w in raw)
    if top <= 0.0:
        raise DegenerateCurveError(f"all {scheme.kind} weights in {n_range} are zero")
    return [(n, w / top) for n, w in raw]
