"""Log-barrier lower objective and the certified constants built on it.

For barrier weight t the lower objective is

    G_t(x, y) = g(x, y) - t * sum_i log(-h_i(x, y)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryViolation, MissingConstant
from .linalg import as_vector
from .problem import BilevelProblem, Setting, SmoothnessConstants, eval_constraints

BOUNDARY_TOL = -1e-14


@dataclass(frozen=True)
class BarrierContext:
    t: float
    prob: BilevelProblem

    def __post_init__(self):
        if not (0 < self.t <= self.prob.constants.t_max):
            raise ValueError(f"barrier weight t={self.t} outside (0, {self.prob.constants.t_max}]")


@dataclass(frozen=True)
class MarginBound:
    d: float
    m: float


def _interior_slacks(ctx: BarrierContext, x, y) -> np.ndarray:
    """Return -h(x, y) after checking every entry is strictly negative."""
    h = eval_constraints(ctx.prob, x, y)
    if h.size and np.max(h) >= BOUNDARY_TOL:
        raise BoundaryViolation(f"max constraint value {np.max(h):.3e} >= -1e-14")
    return -h


def barrier_value(ctx: BarrierContext, x, y) -> float:
    x, y = as_vector(x, "x"), as_vector(y, "y")
    s = _interior_slacks(ctx, x, y)
    return float(ctx.prob.g(x, y) - ctx.t * np.sum(np.log(s)))


def barrier_grad_y(ctx: BarrierContext, x, y) -> np.ndarray:
    x, y = as_vector(x, "x"), as_vector(y, "y")
    s = _interior_slacks(ctx, x, y)
    grad = np.asarray(ctx.prob.g_grad_y(x, y), float)
    if s.size:
        grad = grad + ctx.t * (ctx.prob.h_jac_y(x, y).T @ (1.0 / s))
    return grad


def barrier_hess_yy(ctx: BarrierContext, x, y) -> np.ndarray:
    x, y = as_vector(x, "x"), as_vector(y, "y")
    s = _interior_slacks(ctx, x, y)
    hess = np.array(ctx.prob.g_hess_yy(x, y), float)
    if s.size:
        jy = ctx.prob.h_jac_y(x, y)
        hess += ctx.t * np.einsum("i,ijk->jk", 1.0 / s, ctx.prob.h_hess_yy(x, y))
        hess += ctx.t * (jy.T * (1.0 / s**2)) @ jy
    return 0.5 * (hess + hess.T)


def barrier_hess_xy(ctx: BarrierContext, x, y) -> np.ndarray:
    """Mixed second derivative, shape (n, m)."""
    x, y = as_vector(x, "x"), as_vector(y, "y")
    s = _interior_slacks(ctx, x, y)
    hess = np.array(ctx.prob.g_hess_xy(x, y), float).reshape(ctx.prob.n, ctx.prob.m)
    if s.size:
        jx = ctx.prob.h_jac_x(x, y)
        jy = ctx.prob.h_jac_y(x, y)
        hess += ctx.t * np.einsum("i,ijk->jk", 1.0 / s, ctx.prob.h_hess_xy(x, y))
        hess += ctx.t * (jx.T * (1.0 / s**2)) @ jy
    return hess


# ---------------------------------------------------------------- constant formulas

def compute_margin(t: float, d: float, c: SmoothnessConstants) -> float:
    """Certified lower bound on -h_i at the barrier minimizer given slack d."""
    denom = 4 * c.y_radius * c.g_grad + 4 * c.y_radius * c.t_max * c.n_constraints * c.h_grad
    first = t * d * d / denom if denom > 0 else math.inf
    return min(first, d / 2)


def lipschitz_smooth_bound(t: float, m: float, c: SmoothnessConstants) -> float:
    """Gradient-Lipschitz constant of the barrier objective on the m-shrunk set."""
    k = c.n_constraints
    return c.g_hess + t * k * c.h_hess / m + t * k * c.h_grad**2 / m**2


def hessian_lipschitz_bound(t: float, m: float, c: SmoothnessConstants) -> float:
    """Hessian-Lipschitz constant of the barrier objective on the m-shrunk set."""
    k = c.n_constraints
    lh, lbh, lbbh = c.h_grad, c.h_hess, c.h_hess_lip
    return c.g_hess_lip + t * k * (lbbh / m + lbh * lh / m**2 + 2 * lh**3 / m**3 + 2 * lh * lbh / m**2)


def strong_convexity_bound(setting: Setting, t: float, c: SmoothnessConstants,
                           augmented: bool = False, rule: str = "conservative") -> float:
    """Strong convexity modulus of the barrier objective in y.

    With a norm-ball constraint appended, the ball's barrier term alone gives
    2t/R^2 (``rule='conservative'``) or 2t/R (``rule='stated'``); the result is
    the larger of that and the setting's own constant when the latter exists.
    """
    if setting == Setting.STRONGLY_CONVEX:
        base = c.g_strong
    elif c.lp_sigma > 0 and c.lp_slack_max > 0:
        base = t * c.lp_sigma / c.lp_slack_max**2
    else:
        base = 0.0
    if augmented:
        r = c.y_radius
        ball = 2 * t / r**2 if rule == "conservative" else 2 * t / r
        return max(base, ball)
    if base <= 0:
        raise MissingConstant("linear setting needs lp_sigma and lp_slack_max, or the ball augmentation")
    return base


def problem_strong_convexity(prob: BilevelProblem, t: float) -> float:
    return strong_convexity_bound(prob.setting, t, prob.constants, prob.ball_augmented, prob.ball_rule)
