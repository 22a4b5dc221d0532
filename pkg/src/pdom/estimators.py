"""scikit-learn style wrappers around the composite solvers."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted, validate_data

from .prox import L0, L1, BlockSum, RankIndicator, truncated_svd
from .quadmodel import QuadraticModel, build_dense, build_rpca_operator
from .solvers import SOLVERS, SolverConfig

__all__ = ["SparseRecoveryRegressor", "RobustPCA"]

_PENALTIES = {"l0": L0, "l1": L1}


def _solver_config(est):
    if est.solver not in SOLVERS:
        raise ValueError(f"solver must be one of {sorted(SOLVERS)}, got {est.solver!r}")
    return SolverConfig(gamma=est.gamma, max_iter=est.max_iter, target_residual=est.tol)


def _start(init, dim, random_state):
    if init == "zeros":
        return np.zeros(dim)
    if init == "random":
        return check_random_state(random_state).standard_normal(dim)
    raise ValueError(f"init must be 'zeros' or 'random', got {init!r}")


class SparseRecoveryRegressor(RegressorMixin, BaseEstimator):
    """Penalized least squares ``0.5||Xw - y||^2 + 0.5 mu ||w||^2 + h(w)``.

    Parameters
    ----------
    lam : float, optional
        Penalty weight.  Defaults to ``lambda_scale * max|X'y|``.
    lambda_scale : float
    mu : float, optional
        Ridge term keeping the quadratic strictly convex.  Defaults to
        ``mu_scale * ||X||_2**2``.
    mu_scale : float
    penalty : {'l0', 'l1'}
    solver : {'pdom', 'pg', 'mapg'}
    gamma : float
        Step damping, in ``(0, 1)``.
    max_iter : int
    tol : float
        Stop once the subgradient residual norm falls below this.
    init : {'random', 'zeros'}
        Starting point; ``'random'`` draws a standard normal vector.
    random_state : int, RandomState or None

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    lam_, mu_ : float
        Values actually used.
    n_iter_ : int
    result_ : SolverResult
    """

    def __init__(
        self,
        lam=None,
        lambda_scale=0.01,
        mu=None,
        mu_scale=1e-10,
        penalty="l0",
        solver="pdom",
        gamma=0.98,
        max_iter=2000,
        tol=1e-5,
        init="random",
        random_state=None,
    ):
        self.lam = lam
        self.lambda_scale = lambda_scale
        self.mu = mu
        self.mu_scale = mu_scale
        self.penalty = penalty
        self.solver = solver
        self.gamma = gamma
        self.max_iter = max_iter
        self.tol = tol
        self.init = init
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True, dtype=np.float64)
        if self.penalty not in _PENALTIES:
            raise ValueError(f"penalty must be 'l0' or 'l1', got {self.penalty!r}")
        config = _solver_config(self)
        Xty = X.T @ y
        lam = self.lam if self.lam is not None else self.lambda_scale * float(np.max(np.abs(Xty)))
        if not lam > 0:
            raise ValueError("penalty weight is zero; pass lam explicitly")
        mu = self.mu if self.mu is not None else self.mu_scale * float(np.linalg.norm(X, 2) ** 2)
        n = X.shape[1]
        model = build_dense(X.T @ X + mu * np.eye(n), -Xty, offset=0.5 * float(y @ y))
        x0 = _start(self.init, n, self.random_state)
        self.result_ = SOLVERS[self.solver](model, _PENALTIES[self.penalty](lam), x0, config)
        self.coef_ = self.result_.x_final
        self.lam_, self.mu_ = float(lam), float(mu)
        self.n_iter_ = self.result_.n_iter
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False, dtype=np.float64)
        return X @ self.coef_


class RobustPCA(TransformerMixin, BaseEstimator):
    """Split ``X`` into a rank-``rank`` part plus an l0-sparse part.

    Solves ``min 0.5||L + S - X||^2 + 0.5 mu (||L||^2 + ||S||^2)
    + lam ||S||_0`` subject to ``rank(L) <= rank``.

    Parameters
    ----------
    rank : int
    lam : float, optional
        Sparsity weight; defaults to ``1 / sqrt(max(X.shape))``.
    mu : float
    solver, gamma, max_iter, tol, init, random_state
        As in :class:`SparseRecoveryRegressor`.

    Attributes
    ----------
    low_rank_, sparse_ : ndarray of shape (n_samples, n_features)
    components_ : ndarray of shape (rank, n_features)
        Leading right singular vectors of ``low_rank_``.
    """

    def __init__(
        self,
        rank=1,
        lam=None,
        mu=2e-6,
        solver="pdom",
        gamma=0.98,
        max_iter=2000,
        tol=1e-5,
        init="random",
        random_state=None,
    ):
        self.rank = rank
        self.lam = lam
        self.mu = mu
        self.solver = solver
        self.gamma = gamma
        self.max_iter = max_iter
        self.tol = tol
        self.init = init
        self.random_state = random_state

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64, ensure_min_samples=1)
        m, n = X.shape
        if not 1 <= self.rank <= min(m, n):
            raise ValueError(f"rank must lie in [1, {min(m, n)}], got {self.rank}")
        config = _solver_config(self)
        lam = self.lam if self.lam is not None else 1.0 / np.sqrt(max(m, n))
        k = m * n
        vec = X.ravel()
        model = QuadraticModel(build_rpca_operator(m, n, self.mu), -np.concatenate([vec, vec]), offset=0.5 * float(vec @ vec))
        h = BlockSum([(RankIndicator((m, n), self.rank), (0, k)), (L0(lam), (k, 2 * k))], dim=2 * k)
        x0 = _start(self.init, 2 * k, self.random_state)
        self.result_ = SOLVERS[self.solver](model, h, x0, config)
        x = self.result_.x_final
        self.low_rank_ = x[:k].reshape(m, n)
        self.sparse_ = x[k:].reshape(m, n)
        self.components_ = truncated_svd(self.low_rank_, self.rank)[2]
        self.lam_ = float(lam)
        self.n_iter_ = self.result_.n_iter
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = validate_data(self, X, reset=False, dtype=np.float64)
        return X @ self.components_.T

    def inverse_transform(self, Z):
        check_is_fitted(self, "components_")
        Z = check_array(Z, dtype=np.float64)
        return Z @ self.components_
