"""Multi-layer grade-of-membership model: parameters, validation and simulation.

A response tensor is stored as an ``(L, N, J)`` integer array. Layer ``l`` is
generated as ``R_l(i, j) ~ Binomial(M, R_pop_l(i, j) / M)`` with population
matrix ``R_pop_l = Pi @ Theta_l.T`` and ``Theta_l = rho * B_l``.

Randomness comes from numpy's ``Generator`` backed by the PCG64 bit generator
(``np.random.default_rng(seed)``), so a seed fully determines a stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConfigError, DomainError, ParameterError

ROW_SUM_TOL = 1e-12
PURITY_TOL = 1e-12

SeedLike = Union[int, np.random.Generator]


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def uniform_open(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws on the open interval (0, 1).

    ``Generator.random`` samples [0, 1); exact zeros are redrawn.
    """
    u = rng.random(size)
    zeros = u == 0.0
    while zeros.any():
        u[zeros] = rng.random(int(zeros.sum()))
        zeros = u == 0.0
    return u


@dataclass
class ResponseTensor:
    """Observed responses: ``layers`` has shape (L, N, J), entries in {0..M}."""

    layers: np.ndarray
    M: int

    def __post_init__(self):
        arr = np.asarray(self.layers)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3:
            raise DomainError(f"response tensor must be 3-d (L, N, J), got shape {arr.shape}")
        if arr.size and not np.all(arr == np.round(arr)):
            raise DomainError("responses must be integers")
        arr = arr.astype(np.int64)
        if arr.size and (arr.min() < 0 or arr.max() > self.M):
            raise DomainError(f"responses must lie in [0, {self.M}]")
        self.layers = arr

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.layers.shape

    @property
    def L(self) -> int:
        return self.layers.shape[0]

    @property
    def N(self) -> int:
        return self.layers.shape[1]

    @property
    def J(self) -> int:
        return self.layers.shape[2]


def as_layers(R) -> np.ndarray:
    """Return responses (a ResponseTensor, a 2-d or 3-d array) as float64 (L, N, J)."""
    if isinstance(R, ResponseTensor):
        arr = R.layers
    else:
        arr = np.asarray(R)
    if arr.ndim == 2:
        arr = arr[np.newaxis]
    if arr.ndim != 3:
        raise DomainError(f"expected an (L, N, J) array, got shape {arr.shape}")
    return np.asarray(arr, dtype=np.float64)


@dataclass
class ModelParams:
    """Parameters of a multi-layer GoM model.

    ``B`` has shape (L, J, K); the item parameters are ``Theta_l = rho * B_l``.
    ``pure_index`` optionally records one known pure subject per class.
    """

    Pi: np.ndarray
    B: np.ndarray
    rho: float
    M: int
    pure_index: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        self.Pi = np.asarray(self.Pi, dtype=np.float64)
        B = np.asarray(self.B, dtype=np.float64)
        if B.ndim == 2:
            B = B[np.newaxis]
        self.B = B

    @property
    def N(self) -> int:
        return self.Pi.shape[0]

    @property
    def K(self) -> int:
        return self.Pi.shape[1]

    @property
    def L(self) -> int:
        return self.B.shape[0]

    @property
    def J(self) -> int:
        return self.B.shape[1]

    @property
    def Theta(self) -> np.ndarray:
        """Item parameters, shape (L, J, K)."""
        return self.rho * self.B


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_model(params: ModelParams) -> ValidationReport:
    """Check every model constraint and report all violations.

    Row and class numbers in the messages are 1-based.
    """
    return ValidationReport(_violations(params, check_rank=True))


def _violations(params: ModelParams, check_rank: bool) -> list[str]:
    out = []
    Pi, B = params.Pi, params.B
    if Pi.ndim != 2:
        return [f"Pi must be 2-d, got shape {Pi.shape}"]
    if B.ndim != 3:
        return [f"B must be 3-d (L, J, K), got shape {B.shape}"]
    N, K = Pi.shape
    L, J, KB = B.shape
    if KB != K:
        out.append(f"B has {KB} columns but Pi has {K}")
    for name, v in (("N", N), ("J", J), ("L", L), ("M", params.M)):
        if v < 1:
            out.append(f"{name} must be at least 1, got {v}")
    if K < 1 or (check_rank and K > min(N, J)):
        out.append(f"K={K} must satisfy 1 <= K <= min(N, J) = {min(N, J)}")

    sums = Pi.sum(axis=1)
    for i in np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL):
        out.append(f"row {i + 1} sums to {sums[i]:.12g}")
    for i, k in zip(*np.nonzero((Pi < 0) | (Pi > 1))):
        out.append(f"Pi[{i + 1}, {k + 1}] = {Pi[i, k]:.12g} outside [0, 1]")
    for k in range(K):
        e = np.zeros(K)
        e[k] = 1.0
        if not np.any(np.all(np.abs(Pi - e) <= PURITY_TOL, axis=1)):
            out.append(f"class {k + 1} has no pure subject")

    bad = np.argwhere((B < 0) | (B > 1))
    for l, j, k in bad[:20]:
        out.append(f"B[{l + 1}][{j + 1}, {k + 1}] = {B[l, j, k]:.12g} outside [0, 1]")
    if len(bad) > 20:
        out.append(f"... {len(bad) - 20} more B entries outside [0, 1]")
    if not (0 < params.rho <= params.M):
        out.append(f"rho={params.rho} must lie in (0, M={params.M}]")
    return out


def population_response(params: ModelParams) -> np.ndarray:
    """Noiseless response tensor ``Pi @ Theta_l.T`` for every layer, shape (L, N, J).

    Entry ranges, row sums and purity are enforced; K <= min(N, J) is not,
    since it matters for estimation only.
    """
    violations = _violations(params, check_rank=False)
    if violations:
        raise ParameterError("; ".join(violations))
    return np.einsum("ik,ljk->lij", params.Pi, params.Theta)


def response_probability(r: float, M: int, m: int) -> float:
    """P(R = m) when R ~ Binomial(M, r / M)."""
    if not (0 <= r <= M):
        raise DomainError(f"population value {r} outside [0, {M}]")
    if not (0 <= m <= M) or int(m) != m:
        raise DomainError(f"choice {m} outside {{0, ..., {M}}}")
    p = r / M
    return math.comb(M, m) * p**m * (1.0 - p) ** (M - m)


def sample_responses(pop, M: int, seed: SeedLike) -> ResponseTensor:
    """Draw a response tensor whose entries are Binomial(M, pop / M).

    Each binomial is a sum of M Bernoulli draws; draw ``t`` consumes one
    uniform per entry in C order, for t = 1..M.
    """
    pop = as_layers(pop)
    if pop.size and (pop.min() < 0 or pop.max() > M):
        raise DomainError(f"population entries must lie in [0, {M}]")
    rng = _rng(seed)
    p = pop / M
    counts = np.zeros(pop.shape, dtype=np.int64)
    for _ in range(M):
        counts += rng.random(pop.shape) < p
    return ResponseTensor(counts, M)


@dataclass(frozen=True)
class InstanceConfig:
    """Settings for one simulated instance at one experiment grid point."""

    N: int
    J: int
    K: int
    L: int
    M: int
    N0: int
    rho: float
    seed_base: int = 0


def simulate_memberships(N: int, K: int, N0: int, rng: np.random.Generator) -> np.ndarray:
    """Membership matrix with ``N0`` pure rows per class on top, the rest mixed.

    Mixed rows put ``u / (K - 1)`` on each of the first K-1 classes (u uniform
    on (0, 1)) and the remainder on class K. With K=1 every row is 1.
    """
    if N0 < 1:
        raise ConfigError(f"N0 must be at least 1, got {N0}")
    if N0 * K > N:
        raise ConfigError(f"N0*K = {N0 * K} exceeds N = {N}")
    Pi = np.zeros((N, K))
    Pi[: N0 * K] = np.repeat(np.eye(K), N0, axis=0)
    n_mixed = N - N0 * K
    if K == 1:
        Pi[N0:, 0] = 1.0
    elif n_mixed:
        head = uniform_open(rng, (n_mixed, K - 1)) / (K - 1)
        Pi[N0 * K:, : K - 1] = head
        Pi[N0 * K:, K - 1] = 1.0 - head.sum(axis=1)
    return Pi


def generate_experiment_instance(cfg: InstanceConfig, rep: int) -> tuple[ModelParams, ResponseTensor]:
    """Simulate (params, responses) for replication ``rep`` with seed ``seed_base + rep``.

    Draw order: mixed-row weights, then B (L, J, K), then the responses.
    """
    if cfg.K > min(cfg.N, cfg.J):
        raise ConfigError(f"K={cfg.K} exceeds min(N, J) = {min(cfg.N, cfg.J)}")
    if not (0 < cfg.rho <= cfg.M):
        raise ConfigError(f"rho={cfg.rho} must lie in (0, M={cfg.M}]")
    rng = np.random.default_rng(cfg.seed_base + rep)
    Pi = simulate_memberships(cfg.N, cfg.K, cfg.N0, rng)
    B = uniform_open(rng, (cfg.L, cfg.J, cfg.K))
    params = ModelParams(
        Pi=Pi, B=B, rho=float(cfg.rho), M=cfg.M,
        pure_index=tuple(k * cfg.N0 for k in range(cfg.K)),
    )
    R = sample_responses(population_response(params), cfg.M, rng)
    return params, R


def stack_layers(layers: Sequence[np.ndarray], M: int) -> ResponseTensor:
    return ResponseTensor(np.stack([np.asarray(x) for x in layers]), M)
