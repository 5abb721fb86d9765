"""Implicit hypergradient of the barrier hyperfunction and its error constant."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .barrier import (
    BarrierContext,
    barrier_hess_xy,
    barrier_hess_yy,
    hessian_lipschitz_bound,
)
from .linalg import as_vector, solve_spd
from .lower import LowerSolution, solve_lower
from .problem import SmoothnessConstants


@dataclass
class HypergradResult:
    grad: np.ndarray
    error_bound: float
    pieces: dict = field(default_factory=dict)


def approx_hypergradient(ctx: BarrierContext, x, sol: LowerSolution) -> HypergradResult:
    """grad_x f - H_xy H_yy^{-1} grad_y f at (x, y_tilde), barrier Hessians."""
    x = as_vector(x, "x")
    y = sol.y_tilde
    fx, fy = ctx.prob.f_grad(x, y)
    fx, fy = np.asarray(fx, float), np.asarray(fy, float)
    hyy = barrier_hess_yy(ctx, x, y)
    hxy = barrier_hess_xy(ctx, x, y)
    v = solve_spd(hyy, fy)
    grad = fx - hxy @ v
    bound = sol.residual_bound * hypergradient_error_bound(ctx.t, sol.m_s, ctx.prob.constants, sol.mu)
    return HypergradResult(grad, bound, {"grad_f_x": fx, "grad_f_y": fy, "hess_xy": hxy,
                                         "hess_yy": hyy, "solve": v})


def _curvature_bracket(t: float, m: float, c: SmoothnessConstants, mu: float):
    """(bracket, P) shared by the error constant and the local smoothness estimate."""
    k = c.n_constraints
    p = c.g_hess + t * k * c.h_hess / m + t * k * c.h_grad**2 / m**2
    hlip = hessian_lipschitz_bound(t, m, c)
    bracket = c.f_hess + c.f_hess * p / mu + c.f_grad * hlip * p / mu**2 + c.f_grad * hlip / mu
    return bracket, p


def hypergradient_error_bound(t: float, m_s: float, c: SmoothnessConstants, mu: float) -> float:
    """Constant L' with |approx - exact| <= L' |y_tilde - y*_t| on the m_s-shrunk set."""
    if not (t > 0 and m_s > 0 and mu > 0):
        raise ValueError("t, m_s and mu must be positive")
    return _curvature_bracket(t, m_s, c, mu)[0]


def hyperfunction_value(ctx: BarrierContext, x, eps: float, warm=None, variant: str = "standard"):
    """f(x, y) at an eps-accurate barrier minimizer; returns (value, solution)."""
    x = as_vector(x, "x")
    sol = solve_lower(ctx, x, eps, warm=warm, variant=variant)
    return float(ctx.prob.f(x, sol.y_tilde)), sol


def fd_hyperfunction_grad(ctx: BarrierContext, x, step: float = 1e-4,
                          inner_eps: Optional[float] = None, warm=None,
                          variant: str = "standard") -> np.ndarray:
    """Central differences of the barrier hyperfunction.

    Every evaluation is an independent lower solve at accuracy ``inner_eps``
    (default ``step**3``), warm-started from ``warm`` when given.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    x = as_vector(x, "x")
    eps = step**3 if inner_eps is None else inner_eps
    upper = ctx.prob.upper_set
    out = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        if not (upper.contains(x + e, 1e-12) and upper.contains(x - e, 1e-12)):
            raise ValueError("finite-difference stencil leaves the upper set")
        hi, _ = hyperfunction_value(ctx, x + e, eps, warm, variant)
        lo, _ = hyperfunction_value(ctx, x - e, eps, warm, variant)
        out[i] = (hi - lo) / (2 * step)
    return out
