"""Dogleg path between the gradient point and the Newton point.

For ``alpha`` in ``(0, 1]`` the path sits at the gradient point
``p_tau = -tau g``; on ``(1, 2]`` it moves linearly to the Newton point
``p_N = -Q^{-1} g``.  Every quantity here is expressed in coordinates
shifted so that the current iterate is the origin.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DoglegFrame",
    "make_frame",
    "path_point",
    "step_size",
    "projected_gradient",
    "surrogate_value",
    "line_functions",
    "majorizes_on_line",
]


@dataclass(frozen=True)
class DoglegFrame:
    """Per-iterate dogleg quantities.

    Attributes
    ----------
    x_k : ndarray
        Current iterate.
    g : ndarray
        Gradient of the quadratic at ``x_k``.
    p_tau, p_newton : ndarray
        Gradient point ``-tau g`` and Newton point ``-Q^{-1} g``.
    tau : float
        Fixed gradient step size.
    Qg : ndarray
        ``Q g``, kept so curvature along the path costs no extra products.
    """

    x_k: np.ndarray
    g: np.ndarray
    p_tau: np.ndarray
    p_newton: np.ndarray
    tau: float
    Qg: np.ndarray

    @property
    def is_stationary(self):
        """True when the gradient vanishes and no path exists."""
        return not np.any(self.g)

    def _require_gradient(self):
        if self.is_stationary:
            raise ValueError("zero gradient: the dogleg path is undefined")

    def curvature(self, alpha):
        """Return ``<p(alpha), Q p(alpha)>``."""
        p = path_point(self, alpha)
        if alpha <= 1:
            Qp = -self.tau * self.Qg
        else:
            # Q p_N = -g
            Qp = (2.0 - alpha) * (-self.tau * self.Qg) - (alpha - 1.0) * self.g
        return float(p @ Qp)


def make_frame(model, x_k, tau=None, g=None):
    """Build the dogleg frame of ``model`` at ``x_k``.

    ``tau`` defaults to ``1 / L_q``.  A stationary frame (zero gradient) is
    returned as-is; callers check :attr:`DoglegFrame.is_stationary`.
    """
    x_k = np.asarray(x_k, dtype=float)
    if tau is None:
        tau = 1.0 / model.L_q
    if not 0 < tau <= 1.0 / model.L_q * (1 + 1e-12):
        raise ValueError(f"tau must lie in (0, 1/L_q], got {tau}")
    if g is None:
        g = model.gradient(x_k)
    if not np.any(g):
        zero = np.zeros_like(g)
        return DoglegFrame(x_k, g, zero, zero, float(tau), zero)
    return DoglegFrame(
        x_k=x_k,
        g=g,
        p_tau=-tau * g,
        p_newton=model.newton_point(g=g),
        tau=float(tau),
        Qg=model.Q.apply(g),
    )


def _check_alpha(alpha):
    if not 0 < alpha <= 2:
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")


def path_point(frame, alpha):
    _check_alpha(alpha)
    if alpha <= 1:
        return frame.p_tau
    return frame.p_tau + (alpha - 1.0) * (frame.p_newton - frame.p_tau)


def step_size(frame, alpha):
    """Path step size ``tau_alpha = -||p(alpha)||^2 / <g, p(alpha)>``."""
    frame._require_gradient()
    _check_alpha(alpha)
    if alpha <= 1:
        return frame.tau
    p = path_point(frame, alpha)
    return -float(p @ p) / float(frame.g @ p)


def projected_gradient(frame, alpha):
    """Projection of ``g`` onto the direction of ``p(alpha)``."""
    frame._require_gradient()
    _check_alpha(alpha)
    if alpha <= 1:
        return frame.g
    p = path_point(frame, alpha)
    pp = float(p @ p)
    if pp == 0:
        raise ValueError("zero path vector")
    return (float(frame.g @ p) / pp) * p


def surrogate_value(frame, alpha, x, q_at_xk):
    """Evaluate ``m_alpha(x; x_k)``."""
    tau_a = step_size(frame, alpha)
    g_a = projected_gradient(frame, alpha)
    d = np.asarray(x, dtype=float) - frame.x_k
    return q_at_xk + float(g_a @ d) + float(d @ d) / (2.0 * tau_a)


def line_functions(frame, alpha):
    """Return ``(q_bar, m_bar)`` restricted to the line ``beta * p(alpha)``.

    Both are in shifted coordinates, so ``q_bar(0) = m_bar(0) = 0``.
    """
    p = path_point(frame, alpha)
    gp = float(frame.g @ p)
    pQp = frame.curvature(alpha)
    tau_a = step_size(frame, alpha)
    pp = float(p @ p)

    def q_bar(beta):
        beta = np.asarray(beta, dtype=float)
        return beta * gp + 0.5 * beta**2 * pQp

    def m_bar(beta):
        # <g_alpha, p> == <g, p>
        beta = np.asarray(beta, dtype=float)
        return beta * gp + beta**2 * pp / (2.0 * tau_a)

    return q_bar, m_bar


def majorizes_on_line(frame, alpha, beta_samples, tol=1e-10):
    """Check ``q_bar(beta) <= m_bar(beta) + tol`` at every sampled beta."""
    if not 1 < alpha <= 2:
        raise ValueError(f"alpha must lie in (1, 2], got {alpha}")
    q_bar, m_bar = line_functions(frame, alpha)
    beta = np.asarray(beta_samples, dtype=float)
    return bool(np.all(q_bar(beta) <= m_bar(beta) + tol))
