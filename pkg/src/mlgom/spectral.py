"""Aggregation matrices, truncated eigen/singular decompositions and SPA."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateInputError, DomainError
from .model import as_layers

RANK_TOL = 1e-12
SPA_TOL = 1e-12


class RankDeficiencyWarning(UserWarning):
    pass


@dataclass
class SpectralPair:
    """Leading eigenpairs: ``values`` ordered by decreasing magnitude, ``vectors`` N x K."""

    values: np.ndarray
    vectors: np.ndarray
    rank_deficient: bool = False


@dataclass
class SingularTriple:
    """Leading singular values (descending) with left and right vectors."""

    values: np.ndarray
    left: np.ndarray
    right: np.ndarray
    rank_deficient: bool = False

    @property
    def vectors(self) -> np.ndarray:
        return self.left


def debiased_sum_of_grams(R) -> np.ndarray:
    """``sum_l (R_l R_l' - D_l)`` with ``D_l = diag(sum_j R_l(i, j)^2)``.

    Each layer contributes a zero diagonal, so the result has an exactly zero
    diagonal. Layers are reduced in order.
    """
    layers = as_layers(R)
    N = layers.shape[1]
    S = np.zeros((N, N))
    idx = np.diag_indices(N)
    for Rl in layers:
        G = Rl @ Rl.T
        G[idx] -= np.einsum("ij,ij->i", Rl, Rl)
        S += G
    # Integer responses make the subtraction exact; forcing zero covers
    # non-integer inputs where BLAS and einsum round differently.
    S[idx] = 0.0
    return S


def sum_of_grams(R) -> np.ndarray:
    """``sum_l R_l R_l'`` (diagonal kept)."""
    layers = as_layers(R)
    N = layers.shape[1]
    S = np.zeros((N, N))
    for Rl in layers:
        S += Rl @ Rl.T
    return S


def sum_responses(R) -> np.ndarray:
    """Elementwise sum of the layers, N x J."""
    layers = as_layers(R)
    out = np.zeros(layers.shape[1:])
    for Rl in layers:
        out += Rl
    return out


def top_k_eigen(sym: np.ndarray, K: int) -> SpectralPair:
    """The K eigenpairs of a symmetric matrix with largest ``|eigenvalue|``.

    The input is symmetrized first. Column signs are whatever the dense solver
    returns. If ``|lambda_K|`` falls below ``1e-12 * ||sym||_F`` the result is
    flagged rank deficient and a warning is issued.
    """
    A = np.asarray(sym, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {A.shape}")
    N = A.shape[0]
    if not 1 <= K <= N:
        raise DomainError(f"K={K} must satisfy 1 <= K <= N={N}")
    A = (A + A.T) / 2.0
    w, V = np.linalg.eigh(A)
    order = np.argsort(-np.abs(w), kind="stable")[:K]
    values, vectors = w[order], V[:, order]
    fro = np.linalg.norm(A)
    deficient = bool(abs(values[-1]) <= RANK_TOL * fro)
    if deficient:
        warnings.warn(
            f"|lambda_{K}| = {abs(values[-1]):.3g} is negligible relative to ||S||_F = {fro:.3g}",
            RankDeficiencyWarning, stacklevel=2,
        )
    return SpectralPair(values, vectors, deficient)


def top_k_left_singular(rect: np.ndarray, K: int) -> SingularTriple:
    """Leading K singular triples of a rectangular matrix."""
    A = np.asarray(rect, dtype=np.float64)
    if A.ndim != 2:
        raise DomainError(f"expected a 2-d matrix, got shape {A.shape}")
    if not 1 <= K <= min(A.shape):
        raise DomainError(f"K={K} must satisfy 1 <= K <= min{A.shape}")
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    fro = np.linalg.norm(A)
    deficient = bool(s[K - 1] <= RANK_TOL * fro or fro == 0.0)
    if deficient:
        warnings.warn(
            f"sigma_{K} = {s[K - 1]:.3g} is negligible relative to ||A||_F = {fro:.3g}",
            RankDeficiencyWarning, stacklevel=2,
        )
    return SingularTriple(s[:K], U[:, :K], Vt[:K].T, deficient)


def spa(U: np.ndarray, K: Optional[int] = None) -> list[int]:
    """Successive projection algorithm.

    Repeatedly picks the row of largest Euclidean norm in the residual matrix
    (lowest index on ties) and projects every row onto the orthogonal
    complement of the picked row. Returns the K row indices in selection order.

    Raises
    ------
    DegenerateInputError
        If the residual vanishes before K rows have been picked.
    """
    X = np.array(U, dtype=np.float64)
    if X.ndim != 2:
        raise DomainError(f"expected a 2-d matrix, got shape {X.shape}")
    if K is None:
        K = X.shape[1]
    if not 1 <= K <= X.shape[0]:
        raise DomainError(f"K={K} must satisfy 1 <= K <= N={X.shape[0]}")
    scale = np.max(np.einsum("ij,ij->i", X, X), initial=0.0)
    picked = []
    for t in range(K):
        norms = np.einsum("ij,ij->i", X, X)
        idx = int(np.argmax(norms))
        # norms are squared: compare against SPA_TOL relative to the largest row norm
        if norms[idx] <= SPA_TOL**2 * scale or norms[idx] == 0.0:
            raise DegenerateInputError(
                f"residual vanished after {t} of {K} vertices; input rank is below K"
            )
        picked.append(idx)
        u = X[idx] / np.sqrt(norms[idx])
        X -= np.outer(X @ u, u)
    return picked
