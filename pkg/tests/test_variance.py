from __future__ import annotations

import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from sparse_agreement import (
    ClassDistribution,
    EnumerationTooLargeError,
    InvalidClassCountError,
    enumerate_variance,
    item_variance_classdist,
    item_variance_uniform,
)


def exact_variance(n: int, probs: list[Fraction]) -> tuple[Fraction, Fraction]:
    """Reference oracle in exact rationals, written independently of the
    package: walk the C^n sequences with Fraction arithmetic."""
    C = len(probs)
    denom = n * (n - 1)
    mean = Fraction(0)
    mean_sq = Fraction(0)
    for seq in product(range(C), repeat=n):
        weight = Fraction(1)
        for c in seq:
            weight *= probs[c]
        agreement = Fraction(sum(seq.count(c) * (seq.count(c) - 1) for c in range(C)), denom)
        mean += weight * agreement
        mean_sq += weight * agreement * agreement
    return mean_sq - mean * mean, mean


class TestEnumerationOracle:
    def test_two_annotations_two_classes(self):
        # 4 outcomes: agree on either class with probability 1/2
        result = enumerate_variance(2, ClassDistribution.uniform(2))
        assert result.variance == pytest.approx(0.25, abs=1e-15)
        assert result.expected_agreement == pytest.approx(0.5, abs=1e-15)

    def test_two_annotations_four_classes(self):
        result = enumerate_variance(2, ClassDistribution.uniform(4))
        assert result.variance == pytest.approx(3 / 16, abs=1e-15)
        assert result.expected_agreement == pytest.approx(0.25, abs=1e-15)

    def test_degenerate_distribution(self):
        result = enumerate_variance(2, ClassDistribution((1.0,)))
        assert result.variance == 0.0
        assert result.expected_agreement == 1.0

    def test_against_exact_rational_oracle(self):
        probs = [Fraction(3, 4), Fraction(1, 4)]
        expected, mean = exact_variance(3, probs)
        result = enumerate_variance(3, ClassDistribution((0.75, 0.25)))
        assert result.variance == pytest.approx(float(expected), abs=1e-14)
        assert result.expected_agreement == pytest.approx(float(mean), abs=1e-15)

    def test_guard(self):
        with pytest.raises(EnumerationTooLargeError):
            enumerate_variance(30, ClassDistribution.uniform(3))

    def test_needs_two_annotations(self):
        with pytest.raises(ValueError):
            enumerate_variance(1, ClassDistribution.uniform(2))

    @pytest.mark.parametrize("n,C", [(3, 2), (4, 3), (2, 5)])
    def test_first_moment_matches_chance_agreement(self, n, C):
        rng = np.random.default_rng(n * 100 + C)
        dist = ClassDistribution.from_weights(rng.dirichlet(np.ones(C)))
        result = enumerate_variance(n, dist)
        assert result.expected_agreement == pytest.approx(
            math.fsum(p * p for p in dist.probs), abs=1e-12
        )


class TestUniformClosedForm:
    @pytest.mark.parametrize("C", range(2, 8))
    def test_single_pair_is_bernoulli(self, C):
        # a lone annotation pair agrees with probability 1/C
        p = 1.0 / C
        assert item_variance_uniform(2, C).variance == pytest.approx(p * (1 - p), abs=1e-15)

    @pytest.mark.parametrize("n", range(2, 7))
    @pytest.mark.parametrize("C", (2, 3, 4))
    def test_matches_enumeration(self, n, C):
        closed = item_variance_uniform(n, C)
        brute = enumerate_variance(n, ClassDistribution.uniform(C))
        assert closed.variance == pytest.approx(brute.variance, abs=1e-12)
        assert closed.expected_agreement == pytest.approx(brute.expected_agreement, abs=1e-12)

    def test_single_annotation_is_infinite(self):
        result = item_variance_uniform(1, 3)
        assert result.is_infinite
        assert math.isinf(result.variance)

    def test_class_count_validation(self):
        with pytest.raises(InvalidClassCountError):
            item_variance_uniform(4, 1)
        with pytest.raises(ValueError):
            item_variance_uniform(0, 2)

    def test_memoized(self):
        assert item_variance_uniform(5, 3) is item_variance_uniform(5, 3)

    def test_memoization_safe_under_concurrency(self):
        from concurrent.futures import ThreadPoolExecutor

        item_variance_uniform.cache_clear()
        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(lambda _: item_variance_uniform(40, 5).variance, range(64)))
        assert len(set(results)) == 1

    def test_large_n_stays_finite_and_positive(self):
        # log-space evaluation keeps the formula healthy far beyond doubles
        for n in (50, 200, 1000):
            result = item_variance_uniform(n, 3)
            assert 0.0 < result.variance < 1.0
        # variance shrinks roughly like 1/n^2
        assert item_variance_uniform(1000, 3).variance < item_variance_uniform(50, 3).variance


class TestClassDistClosedForm:
    def test_uniform_two_classes(self):
        closed = item_variance_classdist(2, ClassDistribution.uniform(2))
        assert closed.variance == pytest.approx(0.25, abs=1e-14)

    def test_degenerate_distribution(self):
        result = item_variance_classdist(2, ClassDistribution((1.0,)))
        assert result.variance == 0.0
        assert result.expected_agreement == 1.0

    def test_single_annotation_is_infinite(self):
        assert item_variance_classdist(1, ClassDistribution((0.6, 0.4))).is_infinite

    def test_skewed_hand_case(self):
        probs = [Fraction(3, 4), Fraction(1, 4)]
        expected, _ = exact_variance(3, probs)
        closed = item_variance_classdist(3, ClassDistribution((0.75, 0.25)))
        assert closed.variance == pytest.approx(float(expected), abs=1e-13)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_enumeration_on_random_distributions(self, seed):
        rng = np.random.default_rng(seed)
        C = int(rng.integers(2, 5))
        dist = ClassDistribution.from_weights(rng.dirichlet(np.ones(C)))
        for n in range(2, 6):
            closed = item_variance_classdist(n, dist)
            brute = enumerate_variance(n, dist)
            assert closed.variance == pytest.approx(brute.variance, abs=1e-10)

    @pytest.mark.parametrize("n", (2, 5, 9, 12))
    @pytest.mark.parametrize("C", (2, 4, 7))
    def test_uniform_special_case(self, n, C):
        general = item_variance_classdist(n, ClassDistribution.uniform(C))
        special = item_variance_uniform(n, C)
        assert general.variance == pytest.approx(special.variance, abs=1e-12)

    def test_zero_probability_classes_are_inert(self):
        with_zero = ClassDistribution((0.7, 0.3, 0.0))
        without = ClassDistribution((0.7, 0.3))
        for n in (2, 4, 6):
            assert item_variance_classdist(n, with_zero).variance == pytest.approx(
                item_variance_classdist(n, without).variance, abs=1e-14
            )

    @pytest.mark.parametrize("seed", range(6))
    def test_non_negative(self, seed):
        rng = np.random.default_rng(1000 + seed)
        C = int(rng.integers(2, 6))
        dist = ClassDistribution.from_weights(rng.dirichlet(np.full(C, 0.3)))
        for n in range(2, 9):
            assert item_variance_classdist(n, dist).variance >= 0.0
