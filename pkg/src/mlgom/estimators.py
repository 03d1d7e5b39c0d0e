"""GoM-DSoG and its two baselines, plus the noiseless recovery oracle.

All three estimators share one back end: take an N x K orthonormal basis with
simplex structure, find K vertex rows with SPA, express every row in vertex
coordinates, clip negatives, renormalize rows to sum to one, and regress the
item parameters on the recovered memberships.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import spectral
from .errors import DegenerateInputError, DomainError, EstimationError, VertexDegeneracyError
from .model import as_layers

COND_LIMIT = 1e10

METHODS = ("dsog", "sog", "sum")


@dataclass
class Diagnostics:
    vertex_condition: float = float("nan")
    rows_clipped: int = 0
    rows_rescued: int = 0
    rank_deficient: bool = False


@dataclass
class EstimationResult:
    """Estimated memberships (N x K) and item parameters (L x J x K)."""

    Pi_hat: np.ndarray
    Theta_hat: np.ndarray
    vertices: list[int]
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    method: str = ""
    values: Optional[np.ndarray] = None

    @property
    def K(self) -> int:
        return self.Pi_hat.shape[1]


def memberships_from_vertices(U: np.ndarray, vertices, diagnostics: Optional[Diagnostics] = None) -> np.ndarray:
    """Memberships from the simplex basis ``U`` and its vertex rows.

    Computes ``H = max(0, U @ inv(U[vertices]))`` and scales each row of H to
    unit l1 norm. A row that is entirely non-positive gets the uniform row
    ``1/K`` and is counted in ``diagnostics.rows_rescued``.
    """
    U = np.asarray(U, dtype=np.float64)
    vertices = list(vertices)
    V = U[vertices]
    if V.shape[0] != V.shape[1]:
        raise DomainError(f"need exactly K={U.shape[1]} vertices, got {len(vertices)}")
    K = V.shape[0]
    cond = float(np.linalg.cond(V))
    if diagnostics is not None:
        diagnostics.vertex_condition = cond
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise VertexDegeneracyError(f"vertex matrix condition number {cond:.3g} exceeds {COND_LIMIT:.0e}")
    # U @ inv(V) == solve(V.T, U.T).T
    H = np.linalg.solve(V.T, U.T).T
    negative = (H < 0).any(axis=1)
    H = np.maximum(H, 0.0)
    sums = H.sum(axis=1)
    dead = sums <= 0.0
    H[dead] = 1.0
    sums[dead] = K
    if diagnostics is not None:
        diagnostics.rows_clipped = int(negative.sum())
        diagnostics.rows_rescued = int(dead.sum())
    return H / sums[:, np.newaxis]


def estimate_item_params(R, Pi_hat: np.ndarray, clip: Optional[float] = None) -> np.ndarray:
    """Least-squares item parameters ``Theta_l = R_l' Pi (Pi' Pi)^{-1}`` for every layer.

    Returns an (L, J, K) array. With ``clip=M`` the estimates are clipped to
    [0, M]; by default raw values are returned.
    """
    layers = as_layers(R)
    P = np.asarray(Pi_hat, dtype=np.float64)
    if P.shape[0] != layers.shape[1]:
        raise DomainError(f"Pi_hat has {P.shape[0]} rows but responses have {layers.shape[1]} subjects")
    gram = P.T @ P
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise EstimationError(f"Pi_hat' Pi_hat is rank deficient (condition {cond:.3g})")
    # gram is symmetric: (R' P gram^{-1})' = gram^{-1} P' R
    Theta = np.stack([np.linalg.solve(gram, P.T @ Rl).T for Rl in layers])
    if clip is not None:
        Theta = np.clip(Theta, 0.0, clip)
    return Theta


def _from_basis(U, values, R, K, method, rank_deficient, clip=None) -> EstimationResult:
    diag = Diagnostics(rank_deficient=rank_deficient)
    vertices = spectral.spa(U, K)
    Pi_hat = memberships_from_vertices(U, vertices, diag)
    Theta_hat = estimate_item_params(R, Pi_hat, clip=clip)
    return EstimationResult(Pi_hat, Theta_hat, vertices, diag, method, values)


def _check_k(layers: np.ndarray, K: int):
    _, N, J = layers.shape
    if not 1 <= K <= min(N, J):
        raise DomainError(f"K={K} must satisfy 1 <= K <= min(N, J) = {min(N, J)}")


def _quiet_eigen(S, K):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spectral.RankDeficiencyWarning)
        return spectral.top_k_eigen(S, K)


def gom_dsog(R, K: int, clip: Optional[float] = None) -> EstimationResult:
    """Estimate memberships and item parameters from the debiased sum of Gram matrices."""
    layers = as_layers(R)
    _check_k(layers, K)
    eig = _quiet_eigen(spectral.debiased_sum_of_grams(layers), K)
    return _from_basis(eig.vectors, eig.values, layers, K, "dsog", eig.rank_deficient, clip)


def gom_sog(R, K: int, clip: Optional[float] = None) -> EstimationResult:
    """Like :func:`gom_dsog` but on the plain (biased) sum of Gram matrices."""
    layers = as_layers(R)
    _check_k(layers, K)
    eig = _quiet_eigen(spectral.sum_of_grams(layers), K)
    return _from_basis(eig.vectors, eig.values, layers, K, "sog", eig.rank_deficient, clip)


def gom_sum(R, K: int, clip: Optional[float] = None) -> EstimationResult:
    """Use the top-K left singular vectors of the summed response matrix."""
    layers = as_layers(R)
    _check_k(layers, K)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", spectral.RankDeficiencyWarning)
        svd = spectral.top_k_left_singular(spectral.sum_responses(layers), K)
    return _from_basis(svd.left, svd.values, layers, K, "sum", svd.rank_deficient, clip)


ESTIMATORS = {"dsog": gom_dsog, "sog": gom_sog, "sum": gom_sum}


def estimate(R, K: int, method: str = "dsog", clip: Optional[float] = None) -> EstimationResult:
    try:
        fn = ESTIMATORS[method]
    except KeyError:
        raise DomainError(f"unknown method {method!r}; choose from {', '.join(METHODS)}") from None
    return fn(R, K, clip=clip)


def ideal_recover(pop, K: int) -> EstimationResult:
    """Run the pipeline on the population tensor, where it recovers the truth exactly.

    Uses ``sum_l R_l R_l'`` of the noiseless layers (no debiasing). Raises
    :class:`~mlgom.errors.DegenerateInputError` when the aggregate has rank
    below K.
    """
    layers = as_layers(pop)
    _check_k(layers, K)
    eig = _quiet_eigen(spectral.sum_of_grams(layers), K)
    if eig.rank_deficient:
        raise DegenerateInputError("population Gram aggregate has rank below K")
    return _from_basis(eig.vectors, eig.values, layers, K, "ideal", False)
