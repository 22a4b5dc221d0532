"""Quadratic term ``q(x) = 1/2 x'Qx + b'x`` with a once-factored Hessian.

The Hessian is wrapped in an :class:`SpdOperator` that knows how to apply
``Q`` and ``Q^{-1}`` and carries its extreme eigenvalues.  All factorization
work happens at construction time; the solvers only ever call ``apply`` and
``solve``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

__all__ = [
    "SpdOperator",
    "DenseSpdOperator",
    "RpcaBlockOperator",
    "QuadraticModel",
    "build_dense",
    "build_rpca_operator",
]

SYMMETRY_TOL = 1e-10


class SpdOperator:
    """Symmetric positive-definite linear map with an exact inverse.

    Subclasses set ``dim``, ``lambda_max`` and ``lambda_min`` and implement
    :meth:`apply` and :meth:`solve`.
    """

    dim: int
    lambda_max: float
    lambda_min: float

    def apply(self, x):
        raise NotImplementedError

    def solve(self, x):
        """Return ``Q^{-1} x``."""
        raise NotImplementedError

    def to_dense(self):
        """Assemble the operator as an explicit matrix (small sizes only)."""
        return np.column_stack([self.apply(e) for e in np.eye(self.dim)])

    @property
    def condition_number(self):
        return self.lambda_max / self.lambda_min

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(
                f"expected a vector of length {self.dim}, got shape {x.shape}"
            )
        return x


class DenseSpdOperator(SpdOperator):
    """Dense SPD matrix held together with its Cholesky factor."""

    def __init__(self, Q):
        Q = np.array(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError(f"Q must be square, got shape {Q.shape}")
        asym = np.max(np.abs(Q - Q.T)) if Q.size else 0.0
        scale = max(1.0, np.max(np.abs(Q))) if Q.size else 1.0
        if asym > SYMMETRY_TOL * scale:
            raise ValueError(f"Q is not symmetric (max asymmetry {asym:.3e})")
        Q = 0.5 * (Q + Q.T)
        eigvals = linalg.eigvalsh(Q)
        if eigvals[0] <= 0:
            raise ValueError(
                "Q is not positive definite (smallest eigenvalue "
                f"{eigvals[0]:.3e}); add a small multiple of the identity"
            )
        self.Q = Q
        self.dim = Q.shape[0]
        self.lambda_min = float(eigvals[0])
        self.lambda_max = float(eigvals[-1])
        self._chol = linalg.cho_factor(Q, lower=True, check_finite=False)

    def apply(self, x):
        return self.Q @ self._check(x)

    def solve(self, x):
        return linalg.cho_solve(self._chol, self._check(x), check_finite=False)

    def to_dense(self):
        return self.Q.copy()


class RpcaBlockOperator(SpdOperator):
    """Hessian of ``1/2||M - L - S||_F^2 + mu/2 (||L||^2 + ||S||^2)``.

    Acts on the stacked vector ``(vec L, vec S)``.  Every (l, s) coordinate
    pair sees the same 2x2 block ``[[1+mu, 1], [1, 1+mu]]``, so both the
    action and the inverse are closed-form.
    """

    def __init__(self, m, n, mu):
        if m < 1 or n < 1:
            raise ValueError("m and n must be positive")
        if not mu > 0:
            raise ValueError(f"mu must be positive, got {mu}")
        self.m, self.n, self.mu = int(m), int(n), float(mu)
        self.block = self.m * self.n
        self.dim = 2 * self.block
        self.lambda_max = 2.0 + self.mu
        self.lambda_min = self.mu
        self._det = (1.0 + self.mu) ** 2 - 1.0

    def apply(self, x):
        x = self._check(x)
        l, s = x[: self.block], x[self.block :]
        d = 1.0 + self.mu
        return np.concatenate([d * l + s, l + d * s])

    def solve(self, x):
        x = self._check(x)
        l, s = x[: self.block], x[self.block :]
        d = 1.0 + self.mu
        return np.concatenate([d * l - s, d * s - l]) / self._det


@dataclass(frozen=True)
class QuadraticModel:
    """``q(x) = 1/2 <x, Qx> + <b, x> + offset``.

    ``offset`` is a constant that does not affect minimizers; problem
    adapters use it so that ``value`` equals the original data-fit term.
    """

    Q: SpdOperator
    b: np.ndarray
    offset: float = 0.0
    L_q: float = field(init=False)

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        if b.shape != (self.Q.dim,):
            raise ValueError(
                f"b must have length {self.Q.dim}, got shape {b.shape}"
            )
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "L_q", float(self.Q.lambda_max))

    @property
    def dim(self):
        return self.Q.dim

    def value(self, x, Qx=None):
        x = np.asarray(x, dtype=float)
        if Qx is None:
            Qx = self.Q.apply(x)
        return 0.5 * float(x @ Qx) + float(self.b @ x) + self.offset

    def gradient(self, x):
        return self.Q.apply(x) + self.b

    def newton_point(self, x=None, g=None):
        """Return ``p_N = -Q^{-1} g`` with ``g`` the gradient at ``x``.

        Pass ``g`` directly when it is already available.
        """
        if g is None:
            g = self.gradient(x)
        return -self.Q.solve(g)

    def minimizer(self):
        return -self.Q.solve(self.b)


def build_dense(Q_matrix, b, offset=0.0):
    """Build a :class:`QuadraticModel` from an explicit SPD matrix.

    Raises ``ValueError`` if ``Q_matrix`` is not symmetric or not positive
    definite.  Regularizing a singular ``Q`` is left to the caller.
    """
    return QuadraticModel(DenseSpdOperator(Q_matrix), b, offset)


def build_rpca_operator(m, n, mu):
    return RpcaBlockOperator(m, n, mu)
