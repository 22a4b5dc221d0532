"""Proximal dogleg opportunistic majorization for ``min q(x) + h(x)``.

``q`` is a strictly convex quadratic and ``h`` a proximable, possibly
nonconvex, regularizer.  The package provides the solver, proximal
gradient and monotone accelerated baselines, synthetic sparse-recovery and
RPCA problems, convergence diagnostics and the ``pdom-bench`` CLI.
"""

from .diagnostics import KLExponent, PhaseCell, RateFit, aggregate_phase, kl_exponent_l0, kl_exponent_rpca, rate_fit
from .dogleg import DoglegFrame, make_frame, path_point, projected_gradient, step_size
from .estimators import RobustPCA, SparseRecoveryRegressor
from .problems import gen_rpca, gen_sparse_recovery, nre, to_composite
from .prox import L0, L1, BlockSum, RankIndicator, Regularizer, Zero
from .quadmodel import DenseSpdOperator, QuadraticModel, RpcaBlockOperator, SpdOperator, build_dense
from .solvers import SOLVERS, SolverConfig, SolverResult, mapg_solve, pdom_solve, pg_solve

__version__ = "0.1.0"

__all__ = [
    "SpdOperator",
    "DenseSpdOperator",
    "RpcaBlockOperator",
    "QuadraticModel",
    "build_dense",
    "DoglegFrame",
    "make_frame",
    "path_point",
    "step_size",
    "projected_gradient",
    "Regularizer",
    "Zero",
    "L0",
    "L1",
    "RankIndicator",
    "BlockSum",
    "SolverConfig",
    "SolverResult",
    "pdom_solve",
    "pg_solve",
    "mapg_solve",
    "SOLVERS",
    "gen_sparse_recovery",
    "gen_rpca",
    "to_composite",
    "nre",
    "KLExponent",
    "RateFit",
    "PhaseCell",
    "kl_exponent_l0",
    "kl_exponent_rpca",
    "rate_fit",
    "aggregate_phase",
    "SparseRecoveryRegressor",
    "RobustPCA",
]
