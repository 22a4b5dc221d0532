"""KL exponents, empirical rate fits and phase-transition aggregation."""

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "KLExponent",
    "RateFit",
    "PhaseCell",
    "kl_exponent_l0",
    "kl_exponent_rpca",
    "rate_fit",
    "aggregate_phase",
]

KL_BASE = 4.9
LINEAR_TREND_TOL = 0.05


class KLExponent(NamedTuple):
    """``theta = 1 - base**(-upsilon)``.

    ``theta`` rounds to exactly 1.0 once ``upsilon`` is a few dozen, so
    ``(upsilon, base)`` is the faithful representation.
    """

    theta: float
    upsilon: int
    base: float = KL_BASE

    @property
    def log_gap(self):
        """``log(1 - theta) = -upsilon * log(base)``, finite for any upsilon."""
        return -self.upsilon * math.log(self.base)


def kl_exponent_l0():
    return 0.5


def kl_exponent_rpca(m, n, r):
    """Lojasiewicz exponent of the rank-constrained RPCA objective.

    ``upsilon = m n + m (m - r) + n (m - r) - 1``.
    """
    m, n, r = int(m), int(n), int(r)
    if not 1 <= r <= min(m, n):
        raise ValueError(f"r must lie in [1, {min(m, n)}], got {r}")
    upsilon = m * n + m * (m - r) + n * (m - r) - 1
    theta = -math.expm1(-upsilon * math.log(KL_BASE))
    return KLExponent(theta=theta, upsilon=upsilon)


class RateFit(NamedTuple):
    model: str
    rate: float


def _step_norms(trace):
    if hasattr(trace, "trace"):
        trace = trace.trace
    seq = list(trace)
    if seq and hasattr(seq[0], "step_norm"):
        seq = [rec.step_norm for rec in seq]
    return np.asarray(seq, dtype=float)


def rate_fit(trace, tail_fraction=0.5):
    """Classify the tail of a step-norm sequence as linear, superlinear or sublinear.

    ``trace`` may be a :class:`~pdom.solvers.SolverResult`, a list of
    iteration records, or a plain sequence of step norms.  The successive
    log-ratios ``d_k = log(s_{k+1} / s_k)`` over the tail are regressed on
    ``k``; the fitted change across the tail, relative to ``|mean d|``,
    decides the class (within +-0.05 means constant, i.e. linear).

    Returns
    -------
    RateFit
        ``rate`` is the geometric mean contraction factor ``exp(mean d)``.
    """
    s = _step_norms(trace)
    if s.size < 10:
        raise ValueError(f"need at least 10 records, got {s.size}")
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    s = s[np.isfinite(s) & (s > 0)]
    tail = s[-max(3, int(math.ceil(tail_fraction * s.size))) :]
    if tail.size < 3:
        raise ValueError("fewer than 3 positive step norms in the tail")
    d = np.diff(np.log(tail))
    mean_d = float(np.mean(d))
    rate = math.exp(mean_d)
    if mean_d >= 0:
        return RateFit("sublinear", rate)
    if d.size < 2:
        return RateFit("linear", rate)
    k = np.arange(d.size, dtype=float)
    slope = np.polyfit(k, d, 1)[0]
    trend = slope * (d.size - 1) / abs(mean_d)
    if abs(trend) <= LINEAR_TREND_TOL:
        return RateFit("linear", rate)
    return RateFit("sublinear" if trend > 0 else "superlinear", rate)


@dataclass(frozen=True)
class PhaseCell:
    sweep_parameter: float
    trials: int
    successes: int
    threshold: float
    metric: str = "nre"

    def __post_init__(self):
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")

    @property
    def fraction(self):
        return self.successes / self.trials if self.trials else float("nan")


def aggregate_phase(results, threshold, metric="nre"):
    """Group ``(parameter, error)`` pairs into success-rate cells.

    A trial succeeds when its error is strictly below ``threshold``.  Cells
    come back sorted by parameter.
    """
    results = list(results)
    if not results:
        raise ValueError("no results to aggregate")
    counts = defaultdict(lambda: [0, 0])
    for param, err in results:
        cell = counts[param]
        cell[0] += 1
        cell[1] += int(err < threshold)
    return [
        PhaseCell(param, trials, successes, threshold, metric)
        for param, (trials, successes) in sorted(counts.items())
    ]
