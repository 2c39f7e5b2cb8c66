"""Monte Carlo harness: random annotation removal, subsampling experiments,
unbiasedness verification, and weighting-scheme variance comparison.

Trials are mutually independent: each draws its generator from a child of
one master seed sequence, so results are reproducible and invariant to
execution order. All randomness lives in this module; the per-trial
agreement arithmetic is delegated to the selected kernel backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._backend import TrialKernel
from .errors import (
    DegenerateExperimentError,
    EmptySubsampleError,
    NothingToRemoveError,
)
from .metrics import spa as exact_spa
from .tables import AnnotationTable, ClassDistribution
from .weighting import WeightScheme, compute_weights, weight_for_n

REMOVAL_KINDS = ("uniform_random", "item_biased")


@dataclass(frozen=True)
class RemovalPolicy:
    """How annotations are chosen for removal.

    ``item_biased`` exists solely to demonstrate what happens when
    missingness correlates with item agreement; every report built from it
    must be labeled bias-inducing.
    """

    kind: str = "uniform_random"
    bias: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in REMOVAL_KINDS:
            raise ValueError(f"unknown removal policy {self.kind!r}")
        if self.kind == "item_biased":
            if not self.bias:
                raise ValueError("item_biased needs a per-item bias vector")
            object.__setattr__(self, "bias", tuple(float(b) for b in self.bias))
            if any(b <= 0.0 or not math.isfinite(b) for b in self.bias):
                raise ValueError("bias multipliers must be positive and finite")
        elif self.bias is not None:
            raise ValueError("uniform_random takes no bias vector")

    @classmethod
    def uniform(cls) -> RemovalPolicy:
        return cls("uniform_random")

    @classmethod
    def item_biased(cls, bias: Sequence[float]) -> RemovalPolicy:
        return cls("item_biased", tuple(bias))

    @property
    def bias_inducing(self) -> bool:
        return self.kind == "item_biased"


@dataclass(frozen=True)
class SubsampleTarget:
    """Either a constant annotations-per-item depth or a total record count."""

    kind: str
    value: int

    def __post_init__(self) -> None:
        if self.kind not in ("per_item", "total"):
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.value < 0:
            raise ValueError("target value must be non-negative")

    @classmethod
    def per_item(cls, k: int) -> SubsampleTarget:
        return cls("per_item", k)

    @classmethod
    def total(cls, count: int) -> SubsampleTarget:
        return cls("total", count)


@dataclass(frozen=True)
class TrialConfig:
    """Reproducible experiment description; identical configs on identical
    tables yield bit-identical statistics."""

    trials: int
    seed: int
    removal: RemovalPolicy = field(default_factory=RemovalPolicy.uniform)
    target: SubsampleTarget | None = None
    scheme_set: tuple[WeightScheme, ...] = ()

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class ExperimentResult:
    scheme: str
    mean: float
    stderr: float
    reference: float
    trials_used: int
    trials_skipped: int

    @property
    def deviation(self) -> float:
        """|mean - reference| in stderr units (0 when both are zero)."""
        diff = abs(self.mean - self.reference)
        if diff == 0.0:
            return 0.0
        if self.stderr == 0.0:
            return math.inf
        return diff / self.stderr

    @property
    def within_three_stderr(self) -> bool:
        return abs(self.mean - self.reference) <= 3.0 * self.stderr


@dataclass(frozen=True)
class CurvePoint:
    annotation_count: int
    variance: float
    mean: float
    trials_used: int
    trials_skipped: int


@dataclass(frozen=True)
class VarianceCurve:
    scheme: str
    points: tuple[CurvePoint, ...]
    baseline_delta: tuple[tuple[int, float], ...] | None = None
    note: str | None = None

    @property
    def sum_under_curve(self) -> float | None:
        """Total variance-minus-flat over the grid (the comparison statistic)."""
        if self.baseline_delta is None:
            return None
        return math.fsum(d for _, d in self.baseline_delta)


def remove_one(table: AnnotationTable, rng: np.random.Generator) -> AnnotationTable:
    """Drop one uniformly chosen annotation record."""
    total = table.num_annotations
    if total == 0:
        raise NothingToRemoveError("table has no annotations")
    victim = int(rng.integers(total))
    return table.subset([i for i in range(total) if i != victim])


def subsample_to(
    table: AnnotationTable, target: SubsampleTarget, rng: np.random.Generator
) -> AnnotationTable:
    """Random subsample: exact total count, or exactly k annotations per
    retained item (items under k annotations are dropped)."""
    total = table.num_annotations
    if target.kind == "total":
        if target.value > total:
            raise EmptySubsampleError(f"cannot keep {target.value} of {total} annotations")
        keep = np.sort(rng.permutation(total)[: target.value])
        return table.subset(keep)
    k = target.value
    item_idx, _ = table.dense_arrays
    keep_parts: list[np.ndarray] = []
    for dense in range(table.num_items):
        positions = np.flatnonzero(item_idx == dense)
        if positions.size < k:
            continue
        keep_parts.append(rng.choice(positions, size=k, replace=False))
    if not keep_parts:
        raise EmptySubsampleError(f"no item has {k} annotations")
    keep = np.sort(np.concatenate(keep_parts))
    return table.subset(keep)


def synth_table(
    items: int,
    annotators: int,
    dist: ClassDistribution,
    per_annotator_skew: float | None = None,
    seed: int = 0,
) -> AnnotationTable:
    """Fully annotated synthetic table: every annotator labels every item
    with an i.i.d. draw from ``dist``.

    ``per_annotator_skew`` perturbs each annotator's distribution in logit
    space (softmax of log p + skew * noise), creating annotator
    disagreement and thereby a spread of realized item agreements.
    """
    if items < 1 or annotators < 1:
        raise ValueError("need at least one item and one annotator")
    rng = np.random.default_rng(seed)
    C = dist.num_classes
    probs = np.asarray(dist.probs)
    if per_annotator_skew:
        with np.errstate(divide="ignore"):
            logits = np.log(probs)[None, :] + per_annotator_skew * rng.standard_normal(
                (annotators, C)
            )
        shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
        per_annotator = shifted / shifted.sum(axis=1, keepdims=True)
    else:
        per_annotator = np.tile(probs, (annotators, 1))
    labels = np.empty((items, annotators), dtype=np.int64)
    for a in range(annotators):
        labels[:, a] = rng.choice(C, size=items, p=per_annotator[a])
    universe = tuple(f"c{j}" for j in range(C))
    records = [
        (f"item_{i:05d}", f"ann_{a:03d}", universe[labels[i, a]])
        for i in range(items)
        for a in range(annotators)
    ]
    return AnnotationTable.from_records(records, label_universe=universe)


def _trial_rngs(seed_source, trials: int) -> list[np.random.Generator]:
    root = (
        seed_source
        if isinstance(seed_source, np.random.SeedSequence)
        else np.random.SeedSequence(seed_source)
    )
    return [np.random.default_rng(child) for child in root.spawn(trials)]


def _weight_table(schemes: Sequence[WeightScheme], n_max: int) -> np.ndarray:
    table = np.zeros((len(schemes), n_max + 1))
    for row, scheme in enumerate(schemes):
        for n in range(2, n_max + 1):
            table[row, n] = weight_for_n(scheme, n)
    return table


def _make_kernel(table: AnnotationTable, schemes: Sequence[WeightScheme]) -> TrialKernel:
    item_idx, label_idx = table.dense_arrays
    n_max = int(table.count_matrix.sum(axis=1).max())
    return TrialKernel(
        item_idx,
        label_idx,
        table.num_items,
        table.num_classes,
        _weight_table(schemes, n_max),
    )


def _record_bias(table: AnnotationTable, policy: RemovalPolicy) -> np.ndarray | None:
    if policy.kind != "item_biased":
        return None
    assert policy.bias is not None
    if len(policy.bias) != table.num_items:
        raise ValueError(
            f"bias vector has {len(policy.bias)} entries for {table.num_items} items"
        )
    item_idx, _ = table.dense_arrays
    return np.asarray(policy.bias)[item_idx]


def _removal_mask(
    rng: np.random.Generator,
    total: int,
    removals: int,
    policy: RemovalPolicy,
    record_bias: np.ndarray | None,
) -> np.ndarray:
    kept = np.ones(total, dtype=np.uint8)
    if removals == 0:
        return kept
    if policy.kind == "uniform_random":
        removed = rng.permutation(total)[:removals]
    else:
        # Removing one record at a time with probability proportional to its
        # bias equals taking the smallest exponential/bias race times.
        keys = rng.exponential(1.0, total) / record_bias
        if removals >= total:
            removed = np.arange(total)
        else:
            removed = np.argpartition(keys, removals - 1)[:removals]
    kept[removed] = 0
    return kept


def unbiasedness_experiments(
    table: AnnotationTable,
    removals: int,
    schemes: Sequence[WeightScheme],
    cfg: TrialConfig,
) -> list[ExperimentResult]:
    """Remove ``removals`` annotations per trial and compare the Monte Carlo
    mean of the sparse agreement against the full-table value, for every
    scheme at once (the trials share their removal draws)."""
    total = table.num_annotations
    if not 0 <= removals <= total:
        raise ValueError(f"removals must lie in [0, {total}], got {removals}")
    items = table.item_counts()
    references = [exact_spa(items, compute_weights(s, items)) for s in schemes]
    if removals == 0:
        # No randomness: every trial reproduces the reference bit for bit.
        return [
            ExperimentResult(s.name, ref, 0.0, ref, cfg.trials, 0)
            for s, ref in zip(schemes, references)
        ]
    kernel = _make_kernel(table, schemes)
    record_bias = _record_bias(table, cfg.removal)
    samples = np.empty((cfg.trials, len(schemes)))
    for row, rng in enumerate(_trial_rngs(cfg.seed, cfg.trials)):
        kept = _removal_mask(rng, total, removals, cfg.removal, record_bias)
        samples[row], _, _ = kernel.spa_given_kept(kept)
    results = []
    for col, (scheme, ref) in enumerate(zip(schemes, references)):
        values = samples[:, col]
        values = values[~np.isnan(values)]
        used = int(values.size)
        if used == 0:
            raise DegenerateExperimentError(f"every trial skipped for scheme {scheme.name}")
        mean = float(values.mean())
        stderr = float(values.std(ddof=1) / math.sqrt(used)) if used > 1 else 0.0
        results.append(
            ExperimentResult(scheme.name, mean, stderr, ref, used, cfg.trials - used)
        )
    return results


def unbiasedness_experiment(
    table: AnnotationTable, removals: int, scheme: WeightScheme, cfg: TrialConfig
) -> ExperimentResult:
    return unbiasedness_experiments(table, removals, [scheme], cfg)[0]


def default_budget_grid(table: AnnotationTable, points: int = 12) -> tuple[int, ...]:
    """Log-spaced total-annotation budgets from 2 per item up to the full table."""
    total = table.num_annotations
    low = min(max(2 * table.num_items, 2), total)
    grid = np.geomspace(low, total, points)
    return tuple(sorted(set(int(round(g)) for g in grid)))


def variance_curves(
    table: AnnotationTable,
    cfg: TrialConfig,
    budgets: Sequence[int] | None = None,
) -> list[VarianceCurve]:
    """Variance of the sparse agreement over uniform subsamples at each
    annotation budget, per scheme, plus the flat-baseline deltas and the
    per-scheme sum-under-curve statistic."""
    if not cfg.scheme_set:
        raise ValueError("cfg.scheme_set must name at least one scheme")
    total = table.num_annotations
    grid = tuple(budgets) if budgets is not None else default_budget_grid(table)
    if any(b < 2 or b > total for b in grid):
        raise ValueError(f"budgets must lie in [2, {total}]")

    schemes = list(cfg.scheme_set)
    flat_row = next((i for i, s in enumerate(schemes) if s.kind == "flat"), None)
    if flat_row is None:
        schemes.append(WeightScheme("flat"))
        flat_row = len(schemes) - 1

    kernel = _make_kernel(table, schemes)
    root = np.random.SeedSequence(cfg.seed)
    per_budget: list[list[tuple[float, float, int, int] | None]] = []
    for budget in grid:
        removals = total - budget
        samples = np.empty((cfg.trials, len(schemes)))
        for row, rng in enumerate(_trial_rngs(root.spawn(1)[0], cfg.trials)):
            kept = _removal_mask(rng, total, removals, RemovalPolicy.uniform(), None)
            samples[row], _, _ = kernel.spa_given_kept(kept)
        stats = []
        for col in range(len(schemes)):
            values = samples[:, col]
            values = values[~np.isnan(values)]
            used = int(values.size)
            if used == 0:
                # a trial is uncomputable for all schemes at once, so the
                # whole gridpoint carries no data for any of them
                stats.append(None)
            else:
                variance = float(values.var(ddof=1)) if used > 1 else 0.0
                stats.append((variance, float(values.mean()), used, cfg.trials - used))
        per_budget.append(stats)

    curves = []
    for col, scheme in enumerate(cfg.scheme_set):
        points = tuple(
            CurvePoint(budget, *per_budget[b_idx][col])
            for b_idx, budget in enumerate(grid)
            if per_budget[b_idx][col] is not None
        )
        deltas = tuple(
            (budget, per_budget[b_idx][col][0] - per_budget[b_idx][flat_row][0])
            for b_idx, budget in enumerate(grid)
            if per_budget[b_idx][col] is not None
        )
        curves.append(VarianceCurve(scheme.name, points, deltas))
    return curves


def _constant_k_budgets(
    k_values: Sequence[int], eligible_counts: dict[int, int], points: int = 6
) -> tuple[int, ...]:
    lcm = 1
    for k in k_values:
        lcm = math.lcm(lcm, k)
    low = max(2 * k for k in k_values)
    high = min(k * eligible_counts[k] for k in k_values)
    if high < low:
        return ()
    grid = np.geomspace(max(low, lcm), high, points)
    budgets = sorted(set(int(round(g / lcm)) * lcm for g in grid))
    return tuple(b for b in budgets if low <= b <= high)


def constant_k_comparison(
    table: AnnotationTable,
    k_values: Sequence[int],
    cfg: TrialConfig,
    budgets: Sequence[int] | None = None,
) -> list[VarianceCurve]:
    """One variance curve per constant annotations-per-item depth k (equal
    depth needs no weights), plus the varying-depth protocol with flat
    weights. The x axis counts annotations on computable items only, so the
    curves are comparable."""
    if any(k < 2 for k in k_values):
        raise ValueError("constant-k depths must be >= 2")
    if not k_values:
        raise ValueError("need at least one k")
    total = table.num_annotations
    depths = table.count_matrix.sum(axis=1)
    eligible = {k: np.flatnonzero(depths >= k) for k in k_values}
    feasible = [k for k in k_values if eligible[k].size >= 2]
    if not feasible:
        raise EmptySubsampleError(f"no k in {list(k_values)} is achievable for 2 items")

    if budgets is None:
        grid = _constant_k_budgets(feasible, {k: eligible[k].size for k in feasible})
    else:
        grid = tuple(budgets)
    if not grid:
        raise EmptySubsampleError("no feasible annotation budgets")

    flat_only = [WeightScheme("flat")]
    kernel = _make_kernel(table, flat_only)
    item_idx, _ = table.dense_arrays
    # Static grouping for per-item subsampling: records sorted by item, and
    # each record's offset within its item group.
    group_sizes = np.bincount(item_idx, minlength=table.num_items)
    group_starts = np.concatenate(([0], np.cumsum(group_sizes)[:-1]))
    within = np.arange(total) - np.repeat(group_starts, group_sizes)

    root = np.random.SeedSequence(cfg.seed)
    curves: list[VarianceCurve] = []
    for k in k_values:
        if k not in feasible:
            curves.append(
                VarianceCurve(f"k={k}", (), None, note=f"skipped: fewer than 2 items carry {k} annotations")
            )
            continue
        pool = eligible[k]
        points = []
        for budget in grid:
            n_chosen = budget // k
            if budget % k or n_chosen < 2 or n_chosen > pool.size:
                continue
            values = []
            for rng in _trial_rngs(root.spawn(1)[0], cfg.trials):
                keys = rng.random(total)
                order = np.lexsort((keys, item_idx))
                chosen = pool[rng.choice(pool.size, size=n_chosen, replace=False)]
                chosen_mask = np.zeros(table.num_items, dtype=bool)
                chosen_mask[chosen] = True
                kept = np.zeros(total, dtype=np.uint8)
                kept[order[(within < k) & chosen_mask[item_idx[order]]]] = 1
                out, _, _ = kernel.spa_given_kept(kept)
                values.append(out[0])
            arr = np.asarray(values)
            arr = arr[~np.isnan(arr)]
            used = int(arr.size)
            variance = float(arr.var(ddof=1)) if used > 1 else 0.0
            mean = float(arr.mean()) if used else math.nan
            points.append(CurvePoint(budget, variance, mean, used, cfg.trials - used))
        note = None if points else f"skipped: no budget on the grid fits k={k}"
        curves.append(VarianceCurve(f"k={k}", tuple(points), None, note=note))

    sparse_points = []
    for budget in grid:
        if budget > total:
            continue
        values = []
        pairable_counts = []
        for rng in _trial_rngs(root.spawn(1)[0], cfg.trials):
            kept = _removal_mask(rng, total, total - budget, RemovalPolicy.uniform(), None)
            out, _, pairable = kernel.spa_given_kept(kept)
            values.append(out[0])
            pairable_counts.append(pairable)
        arr = np.asarray(values)
        keep = ~np.isnan(arr)
        arr = arr[keep]
        used = int(arr.size)
        if used == 0:
            continue
        x = int(round(np.asarray(pairable_counts)[keep].mean()))
        variance = float(arr.var(ddof=1)) if used > 1 else 0.0
        sparse_points.append(CurvePoint(x, variance, float(arr.mean()), used, cfg.trials - used))
    curves.append(VarianceCurve("sparse_flat", tuple(sparse_points), None))
    return curves
