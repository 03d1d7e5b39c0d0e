"""Permutation-minimized error metrics and K-selection accuracy."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError

MAX_K = 10


@dataclass
class MetricRecord:
    rel_l1: float
    rel_l2: float
    k_selected: int
    k_true: int
    method: str = "dsog"
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("rel_l1", "rel_l2"):
            v = getattr(self, name)
            if v < 0:
                raise DomainError(f"{name} must be non-negative, got {v}")


def _permutations(K: int):
    if K > MAX_K:
        raise DomainError(f"exhaustive permutation search is limited to K <= {MAX_K}, got K={K}")
    return itertools.permutations(range(K))


def _check_pair(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch: {a.shape} vs {b.shape}")


def best_permutation(Pi_hat, Pi_true) -> tuple[int, ...]:
    """Column order ``perm`` minimizing ``||Pi_hat - Pi_true[:, perm]||_1`` (first found on ties)."""
    A = np.asarray(Pi_hat, dtype=np.float64)
    B = np.asarray(Pi_true, dtype=np.float64)
    _check_pair(A, B)
    best, best_val = None, np.inf
    for perm in _permutations(A.shape[1]):
        val = np.abs(A - B[:, perm]).sum()
        if val < best_val:
            best, best_val = perm, val
    return best


def relative_l1_error(Pi_hat, Pi_true) -> float:
    """min over column permutations P of ``sum |Pi_hat - Pi_true P| / N``."""
    A = np.asarray(Pi_hat, dtype=np.float64)
    B = np.asarray(Pi_true, dtype=np.float64)
    perm = best_permutation(A, B)
    return float(np.abs(A - B[:, perm]).sum() / A.shape[0])


def max_row_l1_error(Pi_hat, Pi_true) -> float:
    """Largest per-subject l1 deviation after the best l1 alignment."""
    A = np.asarray(Pi_hat, dtype=np.float64)
    B = np.asarray(Pi_true, dtype=np.float64)
    perm = best_permutation(A, B)
    return float(np.abs(A - B[:, perm]).sum(axis=1).max())


def l2_error_at(Theta_hat, Theta_true, perm: Sequence[int]) -> float:
    """``||sum_l (Theta_hat_l - Theta_l P)||_F / ||sum_l Theta_l||_F`` for a fixed permutation."""
    A = np.asarray(Theta_hat, dtype=np.float64)
    B = np.asarray(Theta_true, dtype=np.float64)
    if A.ndim == 2:
        A, B = A[np.newaxis], B[np.newaxis]
    _check_pair(A, B)
    denom = np.linalg.norm(B.sum(axis=0))
    if denom == 0:
        raise DomainError("true item parameters sum to zero; relative error undefined")
    return float(np.linalg.norm(A.sum(axis=0) - B.sum(axis=0)[:, list(perm)]) / denom)


def relative_l2_error(Theta_hat, Theta_true) -> float:
    """Relative Frobenius error of the layer-summed item parameters, minimized over permutations."""
    A = np.asarray(Theta_hat, dtype=np.float64)
    B = np.asarray(Theta_true, dtype=np.float64)
    if A.ndim == 2:
        A, B = A[np.newaxis], B[np.newaxis]
    _check_pair(A, B)
    return min(l2_error_at(A, B, perm) for perm in _permutations(A.shape[2]))


def accuracy_rate(records: Sequence[MetricRecord]) -> float:
    """Fraction of records whose selected K equals the true K."""
    if not records:
        raise DomainError("accuracy rate of an empty record list is undefined")
    return sum(r.k_selected == r.k_true for r in records) / len(records)
