"""Averaged fuzzy modularity and choice of the number of latent classes."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, MLGoMError
from .estimators import ESTIMATORS
from .model import as_layers

log = logging.getLogger(__name__)


@dataclass
class ModularityReport:
    per_k: dict[int, float]
    selected_k: int
    per_layer_eta: list[float]
    failed: dict[int, str] = field(default_factory=dict)
    method: str = "dsog"

    @property
    def q_at_selected(self) -> float:
        return self.per_k[self.selected_k]


def layer_totals(R) -> np.ndarray:
    """eta_l = sum of all entries of G_l = R_l R_l', per layer."""
    layers = as_layers(R)
    # sum_ij (R R')_ij = ||R' 1||^2
    col = layers.sum(axis=1)
    return np.einsum("lj,lj->l", col, col)


def averaged_fuzzy_modularity(R, Pi_k) -> float:
    """Layer-averaged fuzzy modularity of the membership matrix ``Pi_k``.

    For layer l with ``G = R_l R_l'``, degrees ``g = G 1`` and total
    ``eta = 1' g``, the layer term is
    ``(1/eta) * sum_ij (G_ij - g_i g_j / eta) <Pi_i, Pi_j>``.
    Layers with ``eta = 0`` contribute zero; the average is over all L layers.
    """
    layers = as_layers(R)
    P = np.asarray(Pi_k, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, np.newaxis]
    if P.shape[0] != layers.shape[1]:
        raise DomainError(f"membership matrix has {P.shape[0]} rows, responses have {layers.shape[1]} subjects")
    total = 0.0
    for Rl in layers:
        G = Rl @ Rl.T
        g = G.sum(axis=1)
        eta = g.sum()
        if eta == 0:
            continue
        within = np.sum(P * (G @ P))
        Pg = P.T @ g
        total += (within - Pg @ Pg / eta) / eta
    return float(total / layers.shape[0])


def select_num_classes(R, K_c: int = 8, estimator: str = "dsog") -> ModularityReport:
    """Fit ``estimator`` for every k in 1..K_c and keep the k maximizing modularity.

    A k whose fit fails is recorded with Q = -inf. Ties go to the smaller k.
    """
    layers = as_layers(R)
    _, N, J = layers.shape
    if not 1 <= K_c <= min(N, J):
        raise DomainError(f"K_c={K_c} must satisfy 1 <= K_c <= min(N, J) = {min(N, J)}")
    try:
        fit = ESTIMATORS[estimator]
    except KeyError:
        raise DomainError(f"unknown estimator {estimator!r}") from None
    per_k: dict[int, float] = {}
    failed: dict[int, str] = {}
    for k in range(1, K_c + 1):
        try:
            per_k[k] = float(averaged_fuzzy_modularity(layers, fit(layers, k).Pi_hat))
        except (MLGoMError, np.linalg.LinAlgError) as exc:
            log.warning("estimator %s failed at k=%d: %s", estimator, k, exc)
            per_k[k] = float("-inf")
            failed[k] = str(exc)
    best = max(per_k, key=lambda k: (per_k[k], -k))
    return ModularityReport(per_k, best, layer_totals(layers).tolist(), failed, estimator)
