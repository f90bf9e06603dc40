"""Joint observation likelihood and the linear refinement solver.

Refinement solves

    min_{alpha, beta} ||M alpha - D beta||^2 + kappa ||beta||^2   s.t.  sum(alpha) = 1

by alternating two closed-form steps whose operators depend only on ``M``
and ``D`` and so are built once per frame.
"""

from dataclasses import dataclass, field

import numpy as np

from .particle import AffineState

SINGULAR_JITTER = 1e-8


def joint_likelihood(e_app, e_hist, mu1=0.5, mu2=0.5):
    """Fuse two error vectors through their ideal point.

    Each error is shifted by its minimum and scaled by its range; a zero range
    contributes nothing.
    """
    if mu1 < 0 or mu2 < 0 or abs(mu1 + mu2 - 1.0) > 1e-9:
        raise ValueError("mu1, mu2 must be nonnegative and sum to 1")
    e_app = np.asarray(e_app, dtype=np.float64)
    e_hist = np.asarray(e_hist, dtype=np.float64)
    if e_app.size == 0 or e_app.shape != e_hist.shape:
        raise ValueError("need two nonempty error vectors of equal length")

    def term(e):
        lo, hi = e.min(), e.max()
        if hi - lo <= 0:
            return np.zeros_like(e)
        return (e - lo) / (hi - lo)

    return np.exp(-mu1 * term(e_app) - mu2 * term(e_hist))


@dataclass
class RefineOperators:
    f_beta: np.ndarray   # (k, d)
    f_alpha: np.ndarray  # (N, d)
    g_alpha: np.ndarray  # (N,)
    jittered: bool = False


def precompute_operators(m, d, kappa):
    """Fixed per-frame solution operators for both half-steps."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    m = np.asarray(m, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    k = d.shape[1]
    if k:
        f_beta = np.linalg.solve(d.T @ d + kappa * np.eye(k), d.T)
    else:
        f_beta = np.zeros((0, m.shape[0]))
    n = m.shape[1]
    gram = m.T @ m
    jittered = False
    if np.linalg.cond(gram) > 1e12:
        gram = gram + SINGULAR_JITTER * np.eye(n)
        jittered = True
    ones = np.ones(n)
    ginv_l = np.linalg.solve(gram, ones)
    ginv_mt = np.linalg.solve(gram, m.T)
    s = ones @ ginv_l
    f_alpha = ginv_mt - np.outer(ginv_l, ones @ ginv_mt) / s
    g_alpha = ginv_l / s
    return RefineOperators(f_beta, f_alpha, g_alpha, jittered)


def objective(m, d, alpha, beta, kappa):
    r = m @ alpha - (d @ beta if d.shape[1] else 0.0)
    return float(r @ r + kappa * beta @ beta)


@dataclass
class RefineSolution:
    alpha: np.ndarray
    beta: np.ndarray
    iterations: int
    objective_trace: list = field(default_factory=list)
    alpha_history: list = field(default_factory=list)
    beta_history: list = field(default_factory=list)
    alpha_raw: np.ndarray = None
    objective_pre_clip: float = float("nan")
    objective_post_clip: float = float("nan")
    jittered: bool = False


def clip_simplex(alpha, fallback):
    a = np.maximum(alpha, 0.0)
    total = a.sum()
    if total <= 0:
        a = np.zeros_like(alpha)
        a[fallback] = 1.0
        return a
    return a / total


def refine(m, d, alpha0, kappa=0.005, max_iter=10, tol=1e-6, ops=None):
    """Alternating minimisation from ``alpha0``; returns the clipped simplex weights.

    ``m`` is ``(dim, N)`` with candidates as columns, ``d`` is ``(dim, k)``.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    m = np.asarray(m, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    alpha = np.asarray(alpha0, dtype=np.float64).copy()
    if alpha.shape != (m.shape[1],):
        raise ValueError("alpha0 length must match the number of candidates")
    alpha = alpha / alpha.sum()
    if ops is None:
        ops = precompute_operators(m, d, kappa)
    sol = RefineSolution(alpha, np.zeros(d.shape[1]), 0, jittered=ops.jittered)
    beta = sol.beta
    for it in range(max_iter):
        beta = ops.f_beta @ (m @ alpha)
        sol.objective_trace.append(objective(m, d, alpha, beta, kappa))
        y_hat = d @ beta if d.shape[1] else np.zeros(m.shape[0])
        new_alpha = ops.f_alpha @ y_hat + ops.g_alpha
        sol.objective_trace.append(objective(m, d, new_alpha, beta, kappa))
        sol.alpha_history.append(new_alpha)
        sol.beta_history.append(beta)
        delta = np.max(np.abs(new_alpha - alpha))
        alpha = new_alpha
        sol.iterations = it + 1
        if delta < tol:
            break
    sol.alpha_raw = alpha
    sol.beta = beta
    sol.objective_pre_clip = objective(m, d, alpha, beta, kappa)
    sol.alpha = clip_simplex(alpha, int(np.argmax(alpha0)))
    sol.objective_post_clip = objective(m, d, sol.alpha, beta, kappa)
    return sol


def combine_states(states, alpha):
    """Convex combination of affine parameter vectors; returns an AffineState."""
    arr = np.array([s.as_array() if isinstance(s, AffineState) else s for s in states],
                   dtype=np.float64)
    return AffineState.from_array(np.asarray(alpha, dtype=np.float64) @ arr)
