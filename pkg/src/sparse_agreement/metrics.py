"""Agreement metrics over per-item class counts.

Every function here is a pure function of immutable inputs. Items with
fewer than 2 annotations cannot form an annotation pair, so their agreement
is undefined; the sparse estimator excludes them via zero weights.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

from .errors import (
    ChanceDegenerateError,
    EmptyTableError,
    FullAnnotationViolation,
    NoComputableItemsError,
    UndefinedAgreementError,
)
from .tables import ClassDistribution, ItemCounts


def edge_count(counts: ItemCounts) -> int:
    """Number of agreeing annotation pairs: sum of n_c(n_c - 1)/2 per class."""
    return sum(c * (c - 1) for c in counts.counts) // 2


def item_agreement(counts: ItemCounts) -> float:
    """Probability that two distinct annotators of this item agree.

    Equals the same-class pair count over all n(n-1)/2 possible pairs.
    Raises UndefinedAgreementError when n < 2 (no pair exists).
    """
    n = counts.n
    if n < 2:
        raise UndefinedAgreementError(f"item agreement undefined for n={n} annotations")
    pair_sum = sum(c * (c - 1) for c in counts.counts)
    return pair_sum / (n * (n - 1))


def joint_pa(items: Sequence[ItemCounts]) -> float:
    """Unweighted mean item agreement; requires a fully annotated table.

    All items must share one annotation depth n >= 2. For unequal depths
    use ``spa`` with an explicit weighting.
    """
    if not items:
        raise EmptyTableError("no items")
    depths = {it.n for it in items}
    if len(depths) > 1:
        raise FullAnnotationViolation(
            f"items have unequal annotation counts {sorted(depths)}; use spa() for sparse tables"
        )
    (n,) = depths
    if n < 2:
        raise UndefinedAgreementError(f"agreement undefined at {n} annotations per item")
    return math.fsum(item_agreement(it) for it in items) / len(items)


def class_distribution(items: Sequence[ItemCounts]) -> ClassDistribution:
    """Empirical label distribution: class totals over the annotation total."""
    if not items:
        raise EmptyTableError("no items")
    num_classes = items[0].num_classes
    totals = [0] * num_classes
    for it in items:
        if it.num_classes != num_classes:
            raise ValueError("items disagree on the number of classes")
        for c, cnt in enumerate(it.counts):
            totals[c] += cnt
    grand = sum(totals)
    if grand == 0:
        raise EmptyTableError("table has zero annotations")
    return ClassDistribution(tuple(t / grand for t in totals))


def expected_chance_agreement(dist: ClassDistribution) -> float:
    """Agreement probability of two independent draws from ``dist``."""
    return math.fsum(p * p for p in dist.probs)


def fleiss_kappa(items: Sequence[ItemCounts]) -> float:
    """Chance-corrected joint agreement, defined for equal annotation depth only.

    The sparse analogue is deliberately not offered: the naive plug-in
    chance correction is a biased ratio estimator on sparse tables.
    """
    p_bar = joint_pa(items)
    p_e = expected_chance_agreement(class_distribution(items))
    if p_e >= 1.0:
        raise ChanceDegenerateError("all annotations share one class; kappa undefined")
    return (p_bar - p_e) / (1.0 - p_e)


def spa(items: Sequence[ItemCounts], weights: Iterable[float]) -> float:
    """Weighted mean item agreement over items with >= 2 annotations.

    ``weights`` must align with ``items``, be non-negative and finite with a
    positive total, and be zero for every item with n < 2. With all-equal
    weights on a fully annotated table this reduces to ``joint_pa``.
    """
    values = [float(w) for w in weights]
    if len(values) != len(items):
        raise ValueError(f"{len(values)} weights for {len(items)} items")
    num = []
    total = []
    for it, w in zip(items, values):
        if w < 0.0 or not math.isfinite(w):
            raise ValueError(f"invalid weight {w!r}")
        if it.n < 2:
            if w != 0.0:
                raise ValueError(f"nonzero weight {w!r} on an item with n={it.n}")
            continue
        if w == 0.0:
            continue
        num.append(w * item_agreement(it))
        total.append(w)
    if not total:
        raise NoComputableItemsError("every item has zero weight or fewer than 2 annotations")
    return math.fsum(num) / math.fsum(total)


def observed_disagreement_nominal(items: Sequence[ItemCounts]) -> float:
    """Pairwise disagreement rate with the nominal mismatch indicator.

    Computed over pairable items (n >= 2) with each item contributing n_i
    annotations' worth of mass, so that 1 - D_o equals the
    annotation-count-weighted sparse agreement.
    """
    num = []
    total = 0
    for it in items:
        if it.n < 2:
            continue
        num.append(it.n * item_agreement(it))
        total += it.n
    if total == 0:
        raise NoComputableItemsError("no item has 2 or more annotations")
    return 1.0 - math.fsum(num) / total
