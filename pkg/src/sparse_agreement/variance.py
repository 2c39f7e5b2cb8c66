"""Expected variance of a single item's agreement estimate.

Two closed forms are provided: one assuming nothing about the class
distribution (every label sequence equally likely) and one conditioning on
a known distribution. Both split E[P^2] into a self-pair sum (same-class
squared terms) and a cross-pair sum (distinct-class products), count label
sequences per count pattern, and subtract the squared first moment.

Terms are evaluated in log space (binomial coefficients via a
multiplicative recurrence) and converted per summand so the formulas stay
valid far beyond the range where C^n or binomials fit in a double.

``enumerate_variance`` walks every one of the C^n label sequences directly
and is the ground-truth oracle for both closed forms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import EnumerationTooLargeError, InvalidClassCountError
from .tables import ClassDistribution

ENUMERATION_GUARD = 10_000_000

# Below this the closed forms are exact up to rounding; anything more
# negative indicates a genuine defect, not cancellation noise.
_NEGATIVE_CLAMP = 1e-12


@dataclass(frozen=True)
class VarianceResult:
    """Variance (math.inf for single-annotation items) plus the moments used."""

    variance: float
    expected_agreement: float
    n: int
    num_classes: int

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.variance)


def _log_binomials(n: int) -> list[float]:
    """log C(n, k) for k = 0..n via the multiplicative recurrence."""
    out = [0.0] * (n + 1)
    acc = 0.0
    for k in range(n):
        acc += math.log(n - k) - math.log(k + 1)
        out[k + 1] = acc
    return out


def _clamp(variance: float, context: str) -> float:
    if variance >= 0.0:
        return variance
    if variance >= -_NEGATIVE_CLAMP:
        return 0.0
    raise ArithmeticError(f"{context}: variance {variance} below the rounding clamp")


@lru_cache(maxsize=None)
def item_variance_uniform(n: int, num_classes: int) -> VarianceResult:
    """Variance of one item's agreement over all C^n equally likely labelings.

    O(n^2). A single annotation carries no pair, so n == 1 maps to infinite
    variance (zero inverse-variance weight).
    """
    if num_classes < 2:
        raise InvalidClassCountError(f"need at least 2 classes, got {num_classes}")
    if n < 1:
        raise ValueError(f"need at least 1 annotation, got {n}")
    expected = 1.0 / num_classes
    if n == 1:
        return VarianceResult(math.inf, expected, n, num_classes)

    C = num_classes
    half_pairs = n * (n - 1) / 2.0
    log_norm = math.log(4.0) + 2.0 * math.log(half_pairs) + n * math.log(C)
    log_binom = _log_binomials(n)

    terms: list[float] = []
    # Self-pair sum: one class holding n_c of the n annotations.
    for nc in range(2, n + 1):
        lt = (
            log_binom[nc]
            + math.log(C)
            + (n - nc) * math.log(C - 1)
            + 2.0 * (math.log(nc) + math.log(nc - 1))
        )
        terms.append(math.exp(lt - log_norm))
    # Cross-pair sum over unordered count pairs (n0, n1), doubled when the
    # counts differ; (C-2)^0 := 1 covers the two-class case.
    log_c_pair = math.log(C) + math.log(C - 1)
    for n0 in range(2, n + 1):
        log_binom_rest = _log_binomials(n - n0)
        for n1 in range(2, min(n0, n - n0) + 1):
            exponent = n - n0 - n1
            if C == 2:
                if exponent > 0:
                    continue
                log_pow = 0.0
            else:
                log_pow = exponent * math.log(C - 2)
            lt = (
                log_binom[n0]
                + log_binom_rest[n1]
                + log_c_pair
                + log_pow
                + math.log(n0)
                + math.log(n1)
                + math.log(n0 - 1)
                + math.log(n1 - 1)
            )
            value = math.exp(lt - log_norm)
            if n0 != n1:
                value *= 2.0
            terms.append(value)

    variance = _clamp(math.fsum(terms) - expected * expected, "item_variance_uniform")
    return VarianceResult(variance, expected, n, num_classes)


@lru_cache(maxsize=None)
def item_variance_classdist(n: int, dist: ClassDistribution) -> VarianceResult:
    """Variance of one item's agreement with labels drawn i.i.d. from ``dist``.

    O(n^2 C^2); reduces to ``item_variance_uniform`` for the uniform
    distribution (maximum entropy special case).
    """
    if n < 1:
        raise ValueError(f"need at least 1 annotation, got {n}")
    expected = math.fsum(p * p for p in dist.probs)
    if n == 1:
        return VarianceResult(math.inf, expected, n, dist.num_classes)

    half_pairs = n * (n - 1) / 2.0
    log_norm = math.log(4.0) + 2.0 * math.log(half_pairs)
    log_binom = _log_binomials(n)
    rest_binom = [_log_binomials(m) for m in range(n + 1)]
    probs = dist.probs

    terms: list[float] = []
    # Self-pair sum: binomial weight on each class's count.
    for p in probs:
        if p == 0.0:
            continue
        log_p = math.log(p)
        rest = 1.0 - p
        for nc in range(2, n + 1):
            if rest <= 0.0:
                if nc != n:
                    continue
                log_rest = 0.0
            else:
                log_rest = (n - nc) * math.log(rest)
            lt = (
                log_binom[nc]
                + nc * log_p
                + log_rest
                + 2.0 * (math.log(nc) + math.log(nc - 1))
            )
            terms.append(math.exp(lt - log_norm))
    # Cross-pair sum: trinomial weight on each ordered class pair.
    for ci, p1 in enumerate(probs):
        if p1 == 0.0:
            continue
        for cj, p2 in enumerate(probs):
            if cj == ci or p2 == 0.0:
                continue
            rest = 1.0 - p1 - p2
            log_p1 = math.log(p1)
            log_p2 = math.log(p2)
            for a in range(2, n - 1):
                log_binom_rest = rest_binom[n - a]
                for b in range(2, n - a + 1):
                    exponent = n - a - b
                    if rest <= 0.0:
                        if exponent > 0:
                            continue
                        log_rest = 0.0
                    else:
                        log_rest = exponent * math.log(rest)
                    lt = (
                        log_binom[a]
                        + log_binom_rest[b]
                        + a * log_p1
                        + b * log_p2
                        + log_rest
                        + math.log(a)
                        + math.log(b)
                        + math.log(a - 1)
                        + math.log(b - 1)
                    )
                    terms.append(math.exp(lt - log_norm))

    variance = _clamp(math.fsum(terms) - expected * expected, "item_variance_classdist")
    return VarianceResult(variance, expected, n, dist.num_classes)


def enumerate_variance(n: int, dist: ClassDistribution) -> VarianceResult:
    """Exact variance by walking all C^n label sequences (validation oracle).

    Each sequence is weighted by the product of its label probabilities.
    Deliberately brute force and independent of the closed forms above.
    """
    C = dist.num_classes
    if n < 2:
        raise ValueError(f"enumeration needs n >= 2, got {n}")
    if C**n > ENUMERATION_GUARD:
        raise EnumerationTooLargeError(f"C^n = {C}^{n} exceeds the {ENUMERATION_GUARD} guard")
    probs = dist.probs
    denom = n * (n - 1)
    first: list[float] = []
    second: list[float] = []
    for seq in itertools.product(range(C), repeat=n):
        weight = 1.0
        for c in seq:
            weight *= probs[c]
        if weight == 0.0:
            continue
        agreement = sum(seq.count(c) * (seq.count(c) - 1) for c in range(C)) / denom
        first.append(weight * agreement)
        second.append(weight * agreement * agreement)
    mean = math.fsum(first)
    variance = _clamp(math.fsum(second) - mean * mean, "enumerate_variance")
    return VarianceResult(variance, mean, n, C)
