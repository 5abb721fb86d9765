"""Certified lower-level solve: margin, local constants, accelerated projected gradient."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as kern
from .barrier import (
    BarrierContext,
    barrier_grad_y,
    barrier_value,
    compute_margin,
    lipschitz_smooth_bound,
    problem_strong_convexity,
)
from .errors import BudgetExhausted
from .linalg import as_vector
from .projection import ShrunkSet, find_initial_margin, project_shrunk, structure_arrays

BUDGET_CLAMP = 10**6
VARIANTS = ("standard", "verbatim")


@dataclass
class LowerSolution:
    y_tilde: np.ndarray
    d_s: float
    m_s: float
    L_smooth: float
    mu: float
    inner_iters: int
    residual_bound: float
    budget: int = 0
    exited_early: bool = False
    start: Optional[np.ndarray] = None
    anchor: Optional[np.ndarray] = None
    resets: int = 0
    projections: int = 0
    stalled_projections: int = 0
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    eps_s: float = math.nan

    @property
    def certified(self) -> bool:
        """True when the a-posteriori distance bound meets the requested accuracy."""
        return self.residual_bound <= self.eps_s


def inner_iteration_budget(L: float, mu: float, eps: float, gap0: float) -> int:
    """ceil(sqrt(L/mu) * ln(2 gap0 / (mu eps^2))), clamped to [1, 1e6]."""
    if not (L >= mu > 0 and eps > 0 and gap0 > 0):
        raise ValueError("need L >= mu > 0, eps > 0, gap0 > 0")
    raw = math.sqrt(L / mu) * math.log(2.0 * gap0 / (mu * eps * eps))
    if not math.isfinite(raw):
        return BUDGET_CLAMP
    # shave rounding noise so exact integers (e.g. ln(e^2) = 2) are not bumped up
    j = math.ceil(raw - 1e-9 * max(1.0, abs(raw)))
    return int(min(max(j, 1), BUDGET_CLAMP))


def _python_apg(ctx, x, sset, y0, anchor, lip, mu, budget, threshold, standard, trace_len):
    """Same iteration as the compiled kernel, driven through the generic oracles."""
    q = math.sqrt(mu / lip)
    beta = (1 - q) / (1 + q)
    factor = 1 + lip / mu
    y = y0.copy()
    yprev = y0.copy()
    values = []
    resets = projections = 0
    last = math.inf
    for it in range(budget):
        if it < trace_len:
            values.append(barrier_value(ctx, x, y))
        w = y.copy() if it == 0 else y + beta * (y - yprev)
        if it > 0 and not sset.contains(w):
            w = y.copy()
            resets += 1
        grad = barrier_grad_y(ctx, x, w)
        base = w if standard else y
        ynew = base - grad / lip
        if not sset.contains(ynew):
            ynew = project_shrunk(sset, ynew, tol=1e-12, anchor=anchor)
            projections += 1
        last = float(np.linalg.norm(ynew - base))
        yprev, y = y, ynew
        if last * factor <= threshold:
            return y, it + 1, last, True, resets, projections, 0, np.array(values)
    return y, budget, last, False, resets, projections, 0, np.array(values)


def solve_lower(ctx: BarrierContext, x, eps_s: float, warm=None, variant: str = "standard",
                margin: Optional[tuple] = None, trace_len: int = 0) -> LowerSolution:
    """Approximate the barrier minimizer y*_t(x) to accuracy eps_s.

    Steps: halve d until Y_d(x) is nonempty, form the certified margin m_s,
    smoothness L and strong convexity mu, set the iteration budget J and run
    accelerated projected gradient on Y_{m_s}(x). A warm start is used when it
    lies in Y_{m_s}(x). ``margin`` may carry a precomputed ``(d, witness)``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown inner variant {variant!r}")
    if not eps_s > 0:
        raise ValueError("eps_s must be positive")
    prob = ctx.prob
    c = prob.constants
    x = as_vector(x, "x")
    d, anchor = margin if margin is not None else find_initial_margin(prob, x)
    anchor = np.asarray(anchor, float)
    m_s = compute_margin(ctx.t, d, c)
    lip = lipschitz_smooth_bound(ctx.t, m_s, c)
    mu = problem_strong_convexity(prob, ctx.t)
    lip = max(lip, mu)
    sset = ShrunkSet(prob, x, m_s)

    start = anchor
    gap0 = lip * (2 * c.y_radius) ** 2 / 2
    if warm is not None:
        warm = as_vector(warm, "warm")
        if sset.contains(warm):
            start = warm
            grad = barrier_grad_y(ctx, x, warm)
            # strong convexity: F(w) - F* <= |grad F(w)|^2 / (2 mu)
            gap0 = max(float(grad @ grad) / (2 * mu), 1e-300)
    budget = inner_iteration_budget(lip, mu, eps_s, gap0)
    threshold = eps_s / 2
    standard = variant == "standard"

    if prob.structure is not None:
        quad, lin, rows, rhs, centers, radii_sq = structure_arrays(prob, x)
        proj_sweeps = int(math.ceil(10 * max(prob.k, 1) * prob.m * math.log(1e12)))
        out = kern.accelerated_pg(quad, lin, rows, rhs, centers, radii_sq, ctx.t, m_s, lip, mu,
                                  np.ascontiguousarray(start, float), anchor, budget, threshold,
                                  standard, 1e-12, proj_sweeps, trace_len)
    else:
        out = _python_apg(ctx, x, sset, start, anchor, lip, mu, budget, threshold, standard, trace_len)
    y, iters, last, early, resets, projections, stalls, values = out

    if not early and budget >= BUDGET_CLAMP:
        raise BudgetExhausted(
            f"inner loop hit the 1e6 clamp (t={ctx.t}, m_s={m_s:.3e}, L={lip:.3e}, mu={mu:.3e})")
    # Strong convexity gives |y - y*| <= |grad F(y)| / mu for any y in the shrunk set.
    # Unlike the step length this does not round to zero once steps drop below
    # the spacing of floating-point numbers near y.
    grad = barrier_grad_y(ctx, x, np.asarray(y, float))
    residual = float(np.linalg.norm(grad)) / mu
    return LowerSolution(
        y_tilde=np.asarray(y, float), d_s=d, m_s=m_s, L_smooth=lip, mu=mu,
        inner_iters=int(iters), residual_bound=residual, budget=budget, exited_early=bool(early),
        start=np.asarray(start, float), anchor=anchor, resets=int(resets),
        projections=int(projections), stalled_projections=int(stalls), values=np.asarray(values),
        eps_s=eps_s,
    )
