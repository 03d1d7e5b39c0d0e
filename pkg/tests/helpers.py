import numpy as np

from mlgom.model import ModelParams


def random_separable(seed, K, N):
    """Random (Pi, W, pure_rows) with one pure row per class at random positions."""
    rng = np.random.default_rng(seed)
    Pi = rng.dirichlet(np.ones(K), size=N)
    pure = rng.choice(N, size=K, replace=False)
    Pi[pure] = np.eye(K)
    W = rng.normal(size=(K, K))
    while np.linalg.cond(W) > 1e3:
        W = rng.normal(size=(K, K))
    return Pi, W, set(int(i) for i in pure)


def random_params(seed, K, N, J, L, M=5):
    """Random valid ModelParams with shuffled subject order."""
    Pi, _, _ = random_separable(seed, K, N)
    rng = np.random.default_rng([seed, 1])
    B = rng.uniform(size=(L, J, K))
    rho = float(rng.uniform(0.1, M))
    return ModelParams(Pi, B, rho, M)
