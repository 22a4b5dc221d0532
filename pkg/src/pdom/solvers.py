"""PDOM and first-order baselines for ``min q(x) + h(x)``.

All three solvers share :class:`SolverConfig`, produce a list of
:class:`IterationRecord` and stop on the same residual test.  The residual
is an explicit element of the subdifferential of ``f`` at the new iterate,
built from the optimality condition of the last prox step.
"""

from dataclasses import asdict, dataclass
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from .dogleg import make_frame, path_point

__all__ = [
    "SolverConfig",
    "IterationRecord",
    "SolverResult",
    "BacktrackResult",
    "pdom_backtrack",
    "pdom_safeguard",
    "residual",
    "stop_check",
    "pdom_solve",
    "pg_solve",
    "mapg_solve",
    "SOLVERS",
]


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.

    ``tau=None`` means ``1 / L_q`` of the model being solved.
    ``target_residual`` adds a plain threshold on the residual norm on top
    of the relative/absolute rule.
    """

    tau: Optional[float] = None
    gamma: float = 0.98
    eps_abs: float = 1e-12
    eps_rel: float = 1e-12
    max_iter: int = 2000
    i_max: int = 30
    target_residual: Optional[float] = None
    majorization_rtol: float = 1e-12

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.tau is not None and not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.eps_abs < 0 or self.eps_rel < 0:
            raise ValueError("eps_abs and eps_rel must be nonnegative")
        if self.max_iter < 0 or self.i_max < 0:
            raise ValueError("max_iter and i_max must be nonnegative")
        if self.target_residual is not None and not self.target_residual > 0:
            raise ValueError("target_residual must be positive")

    def step(self, model):
        tau = 1.0 / model.L_q if self.tau is None else self.tau
        if tau > (1.0 / model.L_q) * (1 + 1e-12):
            raise ValueError(f"tau={tau} exceeds 1/L_q={1.0 / model.L_q}")
        return tau

    def replace(self, **changes):
        return SolverConfig(**{**asdict(self), **changes})


@dataclass
class IterationRecord:
    k: int
    f_value: float
    residual_norm: float
    alpha: float
    tau_alpha: float
    backtracks: int
    safeguard_taken: bool
    step_norm: float
    nre: float = float("nan")
    prox_calls: int = 0


@dataclass
class SolverResult:
    x_final: np.ndarray
    trace: List[IterationRecord]
    status: str
    solver: str = ""
    f_initial: float = float("nan")

    @property
    def n_iter(self):
        return len(self.trace)

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def prox_calls(self):
        return self.trace[-1].prox_calls if self.trace else 0

    @property
    def residual_norm(self):
        return self.trace[-1].residual_norm if self.trace else float("nan")

    def column(self, name):
        return np.array([getattr(rec, name) for rec in self.trace])


class BacktrackResult(NamedTuple):
    alpha: float
    x_next: np.ndarray
    backtracks: int
    tau_alpha: float
    g_alpha: np.ndarray
    q_next: float
    grad_next: np.ndarray
    prox_calls: int


def pdom_backtrack(model, h, frame, config, q_at_xk=None):
    """Search ``alpha in {1 + 2**-i}`` for the first majorized candidate.

    The candidate is ``prox_{gamma tau_alpha h}(x_k + gamma p(alpha))``; it
    is accepted when the unscaled surrogate ``m_alpha`` lies above ``q`` at
    that point.  After ``i_max`` rejections ``alpha = 1`` is used, where the
    surrogate majorizes ``q`` globally.
    """
    if frame.is_stationary:
        raise ValueError("pdom_backtrack requires a nonzero gradient")
    if q_at_xk is None:
        q_at_xk = model.value(frame.x_k)
    g, x_k, gamma = frame.g, frame.x_k, config.gamma
    prox_calls = 0
    for i in range(config.i_max + 2):
        fallback = i > config.i_max
        alpha = 1.0 if fallback else 1.0 + 0.5**i
        p = path_point(frame, alpha)
        gp = float(g @ p)
        if fallback:
            tau_a, g_a = frame.tau, g
        else:
            tau_a = -float(p @ p) / gp
            g_a = -p / tau_a
        x_next = h.prox(x_k + gamma * p, gamma * tau_a)
        prox_calls += 1
        d = x_next - x_k
        Qd = model.Q.apply(d)
        gd, gad, dd, dQd = float(g @ d), float(g_a @ d), float(d @ d), float(d @ Qd)
        # m_alpha - q at x_next, with x_k as origin
        gap = (gad + 0.5 * dd / tau_a) - (gd + 0.5 * dQd)
        scale = abs(gad) + 0.5 * dd / tau_a + abs(gd) + 0.5 * abs(dQd)
        if fallback or gap >= -config.majorization_rtol * scale:
            return BacktrackResult(
                alpha=alpha,
                x_next=x_next,
                backtracks=i,
                tau_alpha=tau_a,
                g_alpha=g_a,
                q_next=q_at_xk + gd + 0.5 * dQd,
                grad_next=g + Qd,
                prox_calls=prox_calls,
            )
    raise AssertionError("unreachable")  # pragma: no cover


def pg_step(model, h, x_k, tau, g=None):
    """One proximal gradient step ``prox_{tau h}(x_k - tau g)``."""
    if g is None:
        g = model.gradient(x_k)
    return h.prox(x_k - tau * g, tau)


def _increment(model, g, x_k, x):
    """Return ``(q(x) - q(x_k), grad q(x))`` computed from the displacement."""
    d = x - x_k
    Qd = model.Q.apply(d)
    return float(g @ d) + 0.5 * float(d @ Qd), g + Qd


def pdom_safeguard(model, h, x_k, x_cand, config, g=None):
    """Return the plain PG point if it beats the dogleg candidate.

    Returns ``(x, grad_q_at_x, taken)``.  Ties keep the candidate.  Both
    objective values are compared as increments over ``q(x_k)`` so the
    comparison is not swamped by rounding in ``q`` itself.
    """
    tau = config.step(model)
    if g is None:
        g = model.gradient(x_k)
    v = pg_step(model, h, x_k, tau, g)
    dq_v, grad_v = _increment(model, g, x_k, v)
    dq_c, grad_c = _increment(model, g, x_k, x_cand)
    if dq_c + h.value(x_cand) > dq_v + h.value(v):
        return v, grad_v, True
    return x_cand, grad_c, False


def residual(grad_next, g_alpha, x_k, x_next, tau_alpha, gamma=1.0):
    """Subgradient element ``(grad q(x+) - g_alpha) - (x+ - x_k) / (gamma tau_alpha)``.

    Pass ``gamma=1`` and ``tau_alpha=tau`` for a plain PG step from
    ``x_k`` (then ``g_alpha`` is the gradient at ``x_k``).
    """
    return (grad_next - g_alpha) - (x_next - x_k) / (gamma * tau_alpha)


def stop_check(residual_vec, grad_next, g_alpha, x_k, x_next, tau_alpha, gamma, config):
    """Absolute/relative residual test, plus the optional plain threshold."""
    r = float(np.linalg.norm(residual_vec))
    if config.target_residual is not None and r < config.target_residual:
        return True
    step = gamma * tau_alpha
    scale = max(
        np.linalg.norm(grad_next),
        np.linalg.norm(g_alpha),
        np.linalg.norm(x_next) / step,
        np.linalg.norm(x_k) / step,
    )
    n = np.asarray(residual_vec).size
    return r <= np.sqrt(n) * config.eps_abs + config.eps_rel * scale


def _prepare(model, h, x0, config):
    config = SolverConfig() if config is None else config
    x = np.array(x0, dtype=float)
    if x.shape != (model.dim,):
        raise ValueError(f"x0 must have length {model.dim}, got shape {x.shape}")
    return x, config, config.step(model)


def _metric(metric, x):
    return float(metric(x)) if metric is not None else float("nan")


def _finish(x, trace, status, solver, f0):
    return SolverResult(x_final=x, trace=trace, status=status, solver=solver, f_initial=f0)


def pdom_solve(model, h, x0, config=None, metric: Optional[Callable] = None, callback: Optional[Callable] = None):
    """Proximal dogleg opportunistic majorization.

    Parameters
    ----------
    model : QuadraticModel
    h : Regularizer
    x0 : array_like
        Starting point.
    config : SolverConfig, optional
    metric : callable, optional
        ``metric(x)`` is stored in each record's ``nre`` field.
    callback : callable, optional
        Called as ``callback(x_k, bt, x_next)`` after every dogleg step,
        where ``bt`` is the :class:`BacktrackResult` (its ``x_next`` is the
        candidate before the safeguard).

    Returns
    -------
    SolverResult
    """
    x, config, tau = _prepare(model, h, x0, config)
    gamma = config.gamma
    g = model.gradient(x)
    q_x = model.value(x)
    f0 = q_x + h.value(x)
    trace = []
    prox_calls = 0
    for k in range(1, config.max_iter + 1):
        if not np.any(g):
            v = h.prox(x, tau)
            prox_calls += 1
            if np.array_equal(v, x):
                return _finish(x, trace, "converged", "pdom", f0)
            x_next, grad_next = v, model.gradient(v)
            r = residual(grad_next, g, x, x_next, tau)
            alpha, tau_a, g_a, step, backtracks, taken = 1.0, tau, g, tau, 0, False
        else:
            frame = make_frame(model, x, tau, g=g)
            bt = pdom_backtrack(model, h, frame, config, q_at_xk=q_x)
            x_next, grad_next, taken = pdom_safeguard(model, h, x, bt.x_next, config, g=g)
            if callback is not None:
                callback(x, bt, x_next)
            prox_calls += bt.prox_calls + 1
            backtracks, alpha = bt.backtracks, bt.alpha
            if taken:
                tau_a, g_a, step = tau, g, tau
                r = residual(grad_next, g, x, x_next, tau)
            else:
                tau_a, g_a, step = bt.tau_alpha, bt.g_alpha, gamma * bt.tau_alpha
                r = residual(grad_next, g_a, x, x_next, bt.tau_alpha, gamma)
        q_next = model.value(x_next)
        f_next = q_next + h.value(x_next)
        step_norm = float(np.linalg.norm(x_next - x))
        trace.append(
            IterationRecord(
                k=k,
                f_value=f_next,
                residual_norm=float(np.linalg.norm(r)),
                alpha=alpha,
                tau_alpha=tau_a,
                backtracks=backtracks,
                safeguard_taken=taken,
                step_norm=step_norm,
                nre=_metric(metric, x_next),
                prox_calls=prox_calls,
            )
        )
        done = stop_check(r, grad_next, g_a, x, x_next, step, 1.0, config)
        x, g, q_x = x_next, grad_next, q_next
        if done:
            return _finish(x, trace, "converged", "pdom", f0)
        if step_norm == 0:
            return _finish(x, trace, "stalled", "pdom", f0)
    return _finish(x, trace, "max_iter", "pdom", f0)


def pg_solve(model, h, x0, config=None, metric=None):
    """Fixed-step proximal gradient ``x+ = prox_{tau h}(x - tau grad q(x))``."""
    x, config, tau = _prepare(model, h, x0, config)
    g = model.gradient(x)
    f0 = model.value(x) + h.value(x)
    trace = []
    for k in range(1, config.max_iter + 1):
        x_next = pg_step(model, h, x, tau, g)
        grad_next = model.gradient(x_next)
        f_next = model.value(x_next) + h.value(x_next)
        r = residual(grad_next, g, x, x_next, tau)
        step_norm = float(np.linalg.norm(x_next - x))
        trace.append(
            IterationRecord(
                k=k,
                f_value=f_next,
                residual_norm=float(np.linalg.norm(r)),
                alpha=1.0,
                tau_alpha=tau,
                backtracks=0,
                safeguard_taken=False,
                step_norm=step_norm,
                nre=_metric(metric, x_next),
                prox_calls=k,
            )
        )
        done = stop_check(r, grad_next, g, x, x_next, tau, 1.0, config)
        x, g = x_next, grad_next
        if done:
            return _finish(x, trace, "converged", "pg", f0)
        if step_norm == 0:
            return _finish(x, trace, "stalled", "pg", f0)
    return _finish(x, trace, "max_iter", "pg", f0)


def mapg_solve(model, h, x0, config=None, metric=None):
    """Monotone accelerated proximal gradient.

    Each iteration takes an extrapolated step from ``y`` and a plain step
    from ``x`` and keeps whichever has the lower objective (two prox calls).
    """
    x, config, tau = _prepare(model, h, x0, config)
    x_prev, z = x.copy(), x.copy()
    t_prev, t = 0.0, 1.0
    g = model.gradient(x)
    f0 = model.value(x) + h.value(x)
    trace = []
    for k in range(1, config.max_iter + 1):
        y = x + (t_prev / t) * (z - x) + ((t_prev - 1.0) / t) * (x - x_prev)
        g_y = model.gradient(y)
        z = h.prox(y - tau * g_y, tau)
        v = h.prox(x - tau * g, tau)
        f_z = model.value(z) + h.value(z)
        f_v = model.value(v) + h.value(v)
        t_prev, t = t, (np.sqrt(4.0 * t * t + 1.0) + 1.0) / 2.0
        if f_z <= f_v:
            x_next, f_next, base, g_base, taken = z, f_z, y, g_y, False
        else:
            x_next, f_next, base, g_base, taken = v, f_v, x, g, True
        grad_next = model.gradient(x_next)
        r = residual(grad_next, g_base, base, x_next, tau)
        step_norm = float(np.linalg.norm(x_next - x))
        trace.append(
            IterationRecord(
                k=k,
                f_value=f_next,
                residual_norm=float(np.linalg.norm(r)),
                alpha=1.0,
                tau_alpha=tau,
                backtracks=0,
                safeguard_taken=taken,
                step_norm=step_norm,
                nre=_metric(metric, x_next),
                prox_calls=2 * k,
            )
        )
        done = stop_check(r, grad_next, g_base, base, x_next, tau, 1.0, config)
        x_prev, x, g = x, x_next, grad_next
        if done:
            return _finish(x, trace, "converged", "mapg", f0)
    return _finish(x, trace, "max_iter", "mapg", f0)


SOLVERS = {"pdom": pdom_solve, "pg": pg_solve, "mapg": mapg_solve}
