"""Synthetic sparse-recovery and RPCA instances in composite form."""

from dataclasses import dataclass

import numpy as np

from .prox import L0, BlockSum, RankIndicator
from .quadmodel import QuadraticModel, build_dense, build_rpca_operator

__all__ = [
    "SparseRecoveryInstance",
    "RpcaInstance",
    "Embedding",
    "gen_sparse_recovery",
    "gen_rpca",
    "to_composite",
    "nre",
    "random_start",
    "recovery_metric",
]

# mu = MU_SCALE * lambda_max(A'A); see gen_sparse_recovery
MU_SCALE = 1e-10
RPCA_MU = 2e-6


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class SparseRecoveryInstance:
    A: np.ndarray
    y: np.ndarray
    x_true: np.ndarray
    lam: float
    mu: float
    seed: object = None
    noise_std: float = 0.0

    @property
    def shape(self):
        return self.A.shape

    def describe(self):
        m, n = self.A.shape
        return {
            "family": "sparse_recovery",
            "n": n,
            "m": m,
            "sparsity": int(np.count_nonzero(self.x_true)),
            "lam": self.lam,
            "mu": self.mu,
            "noise_std": self.noise_std,
            "seed": self.seed,
        }


@dataclass(frozen=True, eq=False)
class RpcaInstance:
    M: np.ndarray
    L_true: np.ndarray
    S_true: np.ndarray
    r: int
    lam: float
    mu: float
    seed: object = None

    @property
    def shape(self):
        return self.M.shape

    def describe(self):
        m, n = self.M.shape
        return {
            "family": "rpca",
            "m": m,
            "n": n,
            "r": self.r,
            "sparse_frac": np.count_nonzero(self.S_true) / (m * n),
            "lam": self.lam,
            "mu": self.mu,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Embedding:
    """Maps between the flat solver vector and the problem's variables."""

    kind: str
    shape: tuple = ()

    @property
    def block(self):
        m, n = self.shape
        return m * n

    def split(self, x):
        if self.kind == "vector":
            return np.asarray(x)
        k = self.block
        return x[:k].reshape(self.shape), x[k:].reshape(self.shape)

    def flatten(self, *parts):
        if self.kind == "vector":
            return np.asarray(parts[0], dtype=float).ravel()
        L, S = parts
        return np.concatenate([np.ravel(L), np.ravel(S)]).astype(float)


def gen_sparse_recovery(seed, n, sparsity, lambda_scale, noise_std=0.0, mu_scale=MU_SCALE):
    """Gaussian compressed-sensing instance with ``m = n // 2`` rows.

    Nonzeros of ``x_true`` are uniform on ``[-2, -1] U [1, 2]``.
    ``lam = lambda_scale * max|A'y|`` and ``mu = mu_scale * lambda_max(A'A)``.
    """
    n = int(n)
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 <= sparsity <= n:
        raise ValueError(f"sparsity must lie in [0, {n}], got {sparsity}")
    if not 0 < lambda_scale <= 0.1:
        raise ValueError(f"lambda_scale must lie in (0, 0.1], got {lambda_scale}")
    if noise_std < 0:
        raise ValueError("noise_std must be nonnegative")
    rng = _rng(seed)
    m = n // 2
    A = rng.standard_normal((m, n))
    x_true = np.zeros(n)
    support = rng.choice(n, size=int(sparsity), replace=False)
    mags = rng.uniform(1.0, 2.0, size=support.size)
    signs = rng.choice([-1.0, 1.0], size=support.size)
    x_true[support] = signs * mags
    y = A @ x_true
    if noise_std > 0:
        y = y + noise_std * rng.standard_normal(m)
    lam = lambda_scale * float(np.max(np.abs(A.T @ y)))
    mu = mu_scale * float(np.linalg.norm(A, 2) ** 2)
    return SparseRecoveryInstance(A, y, x_true, lam, mu, seed, float(noise_std))


def gen_rpca(seed, m, r, sparse_frac, mu=RPCA_MU):
    """Square RPCA instance ``M = P W' + S``.

    ``P`` and ``W`` are ``m x r`` standard normal factors; ``S`` has
    ``floor(sparse_frac * m**2)`` entries equal to +-1 at random positions.
    """
    m, r = int(m), int(r)
    if not 1 <= r <= m:
        raise ValueError(f"r must lie in [1, {m}], got {r}")
    if not 0 <= sparse_frac <= 1:
        raise ValueError(f"sparse_frac must lie in [0, 1], got {sparse_frac}")
    rng = _rng(seed)
    P = rng.standard_normal((m, r))
    W = rng.standard_normal((m, r))
    L_true = P @ W.T
    S_true = np.zeros(m * m)
    nnz = int(np.floor(sparse_frac * m * m))
    pos = rng.choice(m * m, size=nnz, replace=False)
    S_true[pos] = rng.choice([-1.0, 1.0], size=nnz)
    S_true = S_true.reshape(m, m)
    return RpcaInstance(L_true + S_true, L_true, S_true, r, 1.0 / np.sqrt(m), float(mu), seed)


def to_composite(instance):
    """Return ``(model, h, embedding)`` for an instance."""
    if isinstance(instance, SparseRecoveryInstance):
        A, y = instance.A, instance.y
        n = A.shape[1]
        Q = A.T @ A + instance.mu * np.eye(n)
        model = build_dense(Q, -(A.T @ y), offset=0.5 * float(y @ y))
        return model, L0(instance.lam), Embedding("vector", (n,))
    if isinstance(instance, RpcaInstance):
        m, n = instance.M.shape
        op = build_rpca_operator(m, n, instance.mu)
        vecM = instance.M.ravel()
        model = QuadraticModel(op, -np.concatenate([vecM, vecM]), offset=0.5 * float(vecM @ vecM))
        k = m * n
        h = BlockSum(
            [(RankIndicator((m, n), instance.r), (0, k)), (L0(instance.lam), (k, 2 * k))],
            dim=2 * k,
        )
        return model, h, Embedding("matrix_pair", (m, n))
    raise TypeError(f"unsupported instance type {type(instance).__name__}")


def nre(x, x_true):
    """Normalized recovery error ``||x - x_true|| / ||x_true||``."""
    x_true = np.asarray(x_true, dtype=float)
    denom = np.linalg.norm(x_true)
    if denom == 0:
        raise ValueError("ground truth is zero; NRE undefined")
    return float(np.linalg.norm(np.asarray(x, dtype=float) - x_true) / denom)


def random_start(instance, rng):
    """Standard normal starting point of the instance's flat dimension."""
    rng = _rng(rng)
    if isinstance(instance, SparseRecoveryInstance):
        return rng.standard_normal(instance.A.shape[1])
    m, n = instance.M.shape
    return rng.standard_normal(2 * m * n)


def recovery_metric(instance, embedding):
    """NRE of ``x`` (sparse) or of the low-rank block ``L`` (RPCA)."""
    if isinstance(instance, SparseRecoveryInstance):
        return lambda x: nre(x, instance.x_true)
    k = embedding.block
    L_true = instance.L_true.ravel()
    return lambda x: nre(x[:k], L_true)
