"""Proximable regularizers.

Each regularizer exposes ``value(x)`` and ``prox(y, t)`` where ``prox``
returns ``argmin_x h(x) + ||x - y||^2 / (2 t)``.  The nonconvex ones
(``L0``, ``RankIndicator``) use deterministic tie-breaking so repeated runs
are bit-identical.
"""

import numpy as np

__all__ = [
    "Regularizer",
    "Zero",
    "L0",
    "L1",
    "RankIndicator",
    "BlockSum",
    "prox_zero",
    "prox_l0",
    "prox_l1",
    "prox_rank_indicator",
    "prox_block_sum",
    "truncated_svd",
]


def _check_positive(**kwargs):
    for name, val in kwargs.items():
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")


def prox_zero(y, t=1.0):
    _check_positive(t=t)
    return np.array(y, dtype=float)


def prox_l0(y, t, lam):
    """Hard threshold: keep ``y_i`` iff ``y_i**2 > 2 t lam``.

    At the tie ``y_i**2 == 2 t lam`` both 0 and ``y_i`` are minimizers;
    0 is returned.
    """
    _check_positive(t=t, lam=lam)
    y = np.asarray(y, dtype=float)
    return np.where(y * y > 2.0 * t * lam, y, 0.0)


def prox_l1(y, t, lam):
    _check_positive(t=t, lam=lam)
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.maximum(np.abs(y) - t * lam, 0.0)


def truncated_svd(Y, r):
    """Leading ``r`` singular triplets with a fixed sign convention.

    The largest-magnitude entry of each left singular vector is made
    positive (the right vector is flipped along with it).
    """
    U, s, Vt = np.linalg.svd(Y, full_matrices=False)
    U, s, Vt = U[:, :r], s[:r], Vt[:r]
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, s, Vt * signs[:, None]


def prox_rank_indicator(Y, r):
    """Projection onto matrices of rank at most ``r``."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("Y must be a matrix")
    if not 1 <= r <= min(Y.shape):
        raise ValueError(f"rank bound r={r} out of range for shape {Y.shape}")
    if r == min(Y.shape):
        return Y.copy()
    U, s, Vt = truncated_svd(Y, r)
    return (U * s) @ Vt


class Regularizer:
    """Base class: ``h(x)`` with an exact proximal map."""

    name = "regularizer"

    def value(self, x):
        raise NotImplementedError

    def prox(self, y, t):
        raise NotImplementedError

    @property
    def params(self):
        return {}

    def describe(self):
        return {"name": self.name, **self.params}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"


class Zero(Regularizer):
    name = "zero"

    def value(self, x):
        return 0.0

    def prox(self, y, t):
        return prox_zero(y, t)


class L0(Regularizer):
    """``lam * ||x||_0``."""

    name = "l0"

    def __init__(self, lam):
        _check_positive(lam=lam)
        self.lam = float(lam)

    @property
    def params(self):
        return {"lam": self.lam}

    def value(self, x):
        return self.lam * float(np.count_nonzero(x))

    def prox(self, y, t):
        return prox_l0(y, t, self.lam)


class L1(Regularizer):
    """``lam * ||x||_1``."""

    name = "l1"

    def __init__(self, lam):
        _check_positive(lam=lam)
        self.lam = float(lam)

    @property
    def params(self):
        return {"lam": self.lam}

    def value(self, x):
        return self.lam * float(np.sum(np.abs(x)))

    def prox(self, y, t):
        return prox_l1(y, t, self.lam)


class RankIndicator(Regularizer):
    """Indicator of ``rank(X) <= r`` on a flattened ``shape`` matrix.

    Vectors are reshaped in C order.  The prox ignores the step size.
    """

    name = "rank"

    def __init__(self, shape, r):
        m, n = shape
        if not 1 <= r <= min(m, n):
            raise ValueError(f"rank bound r={r} out of range for shape {shape}")
        self.shape = (int(m), int(n))
        self.r = int(r)

    @property
    def params(self):
        return {"shape": list(self.shape), "r": self.r}

    def value(self, x):
        X = np.asarray(x, dtype=float).reshape(self.shape)
        return 0.0 if np.linalg.matrix_rank(X) <= self.r else np.inf

    def prox(self, y, t=1.0):
        Y = np.asarray(y, dtype=float).reshape(self.shape)
        return prox_rank_indicator(Y, self.r).ravel()


def _as_slice(rng):
    if isinstance(rng, slice):
        return rng
    start, stop = rng
    return slice(int(start), int(stop))


class BlockSum(Regularizer):
    """Separable sum ``sum_j h_j(x[range_j])`` over a partition of indices."""

    name = "block_sum"

    def __init__(self, blocks, dim=None):
        blocks = [(h, _as_slice(rng)) for h, rng in blocks]
        if not blocks:
            raise ValueError("at least one block is required")
        ordered = sorted(blocks, key=lambda b: b[1].start)
        pos = 0
        for _, sl in ordered:
            if sl.step not in (None, 1) or sl.start != pos or sl.stop <= sl.start:
                raise ValueError("block ranges must partition [0, dim) without overlap")
            pos = sl.stop
        if dim is not None and pos != dim:
            raise ValueError(f"block ranges cover [0, {pos}) but dim is {dim}")
        self.blocks = blocks
        self.dim = pos

    @property
    def params(self):
        return {
            "blocks": [
                {**h.describe(), "range": [sl.start, sl.stop]} for h, sl in self.blocks
            ]
        }

    def _check(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim,):
            raise ValueError(f"expected length {self.dim}, got shape {y.shape}")
        return y

    def value(self, x):
        x = self._check(x)
        return float(sum(h.value(x[sl]) for h, sl in self.blocks))

    def prox(self, y, t):
        y = self._check(y)
        out = np.empty_like(y)
        for h, sl in self.blocks:
            out[sl] = h.prox(y[sl], t)
        return out


def prox_block_sum(blocks, y, t):
    y = np.asarray(y, dtype=float)
    return BlockSum(blocks, dim=y.shape[0]).prox(y, t)
