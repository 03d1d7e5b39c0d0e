import itertools

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from mlgom.errors import DomainError
from mlgom.metrics import (
    MetricRecord,
    accuracy_rate,
    best_permutation,
    l2_error_at,
    max_row_l1_error,
    relative_l1_error,
    relative_l2_error,
)


def rand_stochastic(rng, N, K):
    return rng.dirichlet(np.ones(K), size=N)


class TestRelativeL1:
    def test_identical(self):
        Pi = rand_stochastic(np.random.default_rng(0), 10, 3)
        assert relative_l1_error(Pi, Pi) == 0.0

    def test_swapped_columns(self):
        Pi = rand_stochastic(np.random.default_rng(1), 10, 3)
        assert relative_l1_error(Pi[:, [2, 0, 1]], Pi) == 0.0

    def test_hand_example(self):
        assert relative_l1_error([[0.9, 0.1], [0.2, 0.8]], np.eye(2)) == pytest.approx(0.3, abs=1e-15)

    def test_bounded_by_two(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            assert relative_l1_error(rand_stochastic(rng, 8, 4), rand_stochastic(rng, 8, 4)) <= 2.0

    def test_complexity_guard(self):
        with pytest.raises(DomainError):
            relative_l1_error(np.eye(11), np.eye(11))

    def test_max_row(self):
        assert max_row_l1_error([[0.9, 0.1], [0.2, 0.8]], np.eye(2)) == pytest.approx(0.4)


class TestRelativeL2:
    def test_identical_and_permuted(self):
        Theta = np.random.default_rng(3).uniform(size=(3, 6, 3))
        assert relative_l2_error(Theta, Theta) == 0.0
        assert relative_l2_error(Theta[:, :, [1, 2, 0]], Theta) == 0.0

    def test_hand_example(self):
        assert relative_l2_error(np.diag([1.0, 2.0]), np.eye(2)) == pytest.approx(1 / np.sqrt(2), abs=1e-15)

    def test_sum_before_norm(self):
        # errors of opposite sign in two layers cancel
        Theta = np.ones((2, 2, 2))
        Theta_hat = Theta + np.array([1.0, -1.0])[:, None, None]
        assert relative_l2_error(Theta_hat, Theta) == 0.0

    def test_zero_denominator(self):
        with pytest.raises(DomainError):
            relative_l2_error(np.ones((1, 2, 2)), np.zeros((1, 2, 2)))


class TestPermutationInvariance:
    def test_shared_permutation(self):
        rng = np.random.default_rng(4)
        Pi, Pi_hat = rand_stochastic(rng, 12, 3), rand_stochastic(rng, 12, 3)
        Th, Th_hat = rng.uniform(size=(2, 5, 3)), rng.uniform(size=(2, 5, 3))
        for perm in itertools.permutations(range(3)):
            p = list(perm)
            assert relative_l1_error(Pi_hat[:, p], Pi) == pytest.approx(relative_l1_error(Pi_hat, Pi))
            assert relative_l2_error(Th_hat[:, :, p], Th) == pytest.approx(relative_l2_error(Th_hat, Th))


@pytest.mark.parametrize("seed", range(20))
def test_matches_assignment_solver(seed):
    rng = np.random.default_rng(1000 + seed)
    K = int(rng.integers(1, 4))
    Pi, Pi_hat = rand_stochastic(rng, 15, K), rand_stochastic(rng, 15, K)
    cost = np.abs(Pi_hat[:, :, None] - Pi[:, None, :]).sum(axis=0)
    rows, cols = linear_sum_assignment(cost)
    assert relative_l1_error(Pi_hat, Pi) == pytest.approx(cost[rows, cols].sum() / 15, abs=1e-12)

    Th, Th_hat = rng.uniform(size=(3, 7, K)), rng.uniform(size=(3, 7, K))
    A, B = Th_hat.sum(axis=0), Th.sum(axis=0)
    sq = ((A[:, :, None] - B[:, None, :]) ** 2).sum(axis=0)
    rows, cols = linear_sum_assignment(sq)
    expected = np.sqrt(sq[rows, cols].sum()) / np.linalg.norm(B)
    assert relative_l2_error(Th_hat, Th) == pytest.approx(expected, abs=1e-12)


def test_l2_at_fixed_permutation():
    Th = np.random.default_rng(5).uniform(size=(2, 4, 3))
    perm = best_permutation(np.eye(3)[:, [1, 2, 0]], np.eye(3))
    assert l2_error_at(Th[:, :, list(perm)], Th, perm) == 0.0


class TestAccuracyRate:
    def _recs(self, hits, total):
        return [MetricRecord(0.0, 0.0, 3 if i < hits else 2, 3) for i in range(total)]

    def test_values(self):
        assert accuracy_rate(self._recs(5, 5)) == 1.0
        assert accuracy_rate(self._recs(0, 5)) == 0.0
        assert accuracy_rate(self._recs(37, 50)) == 0.74

    def test_empty(self):
        with pytest.raises(DomainError):
            accuracy_rate([])

    def test_negative_error_rejected(self):
        with pytest.raises(DomainError):
            MetricRecord(-0.1, 0.0, 1, 1)
