"""Projected hypergradient descent on the barrier hyperfunction."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .barrier import BarrierContext, compute_margin, problem_strong_convexity
from .errors import BilevelError
from .hypergrad import _curvature_bracket, approx_hypergradient, hypergradient_error_bound
from .linalg import as_vector
from .lower import solve_lower
from .problem import Ball, Box, SmoothnessConstants, UpperSet, project_upper
from .projection import find_initial_margin

TRACE_HEADER = ("s", "t", "d_s", "m_s", "eta_s", "grad_norm", "stationarity", "phi_tilde",
                "inner_iters", "wall_ms")

CONVERGED = "Converged"
BUDGET_EXHAUSTED = "BudgetExhausted"
FAILED = "Failed"


@dataclass(frozen=True)
class OuterRow:
    s: int
    t: float
    d_s: float
    m_s: float
    eta_s: float
    grad_norm: float
    stationarity: float
    phi_tilde: float
    inner_iters: int
    wall_ms: float
    # audit fields, not serialized
    x: np.ndarray = field(repr=False, default=None)
    grad: np.ndarray = field(repr=False, default=None)
    x_next: np.ndarray = field(repr=False, default=None)
    eps_s: float = math.nan
    y_tilde: np.ndarray = field(repr=False, default=None)


def format_float(v: float) -> str:
    return repr(float(v))


@dataclass
class OuterTrace:
    rows: list = field(default_factory=list)

    def append(self, row: OuterRow) -> None:
        if self.rows and row.s <= self.rows[-1].s:
            raise ValueError("trace rows must have strictly increasing s")
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self, include_wall: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = TRACE_HEADER if include_wall else TRACE_HEADER[:-1]
        writer.writerow(header)
        for r in self.rows:
            vals = [r.s, format_float(r.t), format_float(r.d_s), format_float(r.m_s),
                    format_float(r.eta_s), format_float(r.grad_norm), format_float(r.stationarity),
                    format_float(r.phi_tilde), r.inner_iters]
            if include_wall:
                vals.append(f"{r.wall_ms:.3f}")
            writer.writerow(vals)
        return buf.getvalue()


@dataclass
class RunResult:
    x_out: np.ndarray
    best_stationarity: float
    trace: OuterTrace
    status: str
    reason: str = ""
    last_y: Optional[np.ndarray] = None
    seed: int = 0

    @property
    def eta_floor(self) -> float:
        """Smallest stepsize used (the run's empirical stepsize floor)."""
        return min((r.eta_s for r in self.trace.rows), default=math.nan)

    @property
    def status_label(self) -> str:
        return f"{self.status}({self.reason})" if self.status == FAILED else self.status


def local_phi_lipschitz(t: float, d_s: float, c: SmoothnessConstants, mu: float) -> float:
    """Smoothness of the barrier hyperfunction near x_s, using the margin at slack d_s/2."""
    m_loc = compute_margin(t, d_s / 2, c)
    bracket, p = _curvature_bracket(t, m_loc, c, mu)
    return bracket * (1 + p / mu)


def stepsize(d_s: float, grad_norm: float, L_phi_s: float, c: SmoothnessConstants) -> float:
    """min(1, d_s / (2 L_h |grad|), 1 / L_phi_s); a zero gradient drops the middle term."""
    local = math.inf if grad_norm == 0 or c.h_grad == 0 else d_s / (2 * c.h_grad * grad_norm)
    smooth = math.inf if L_phi_s <= 0 else 1.0 / L_phi_s
    return min(1.0, local, smooth)


def stationarity(x_s, x_next, eta_s: float) -> float:
    if eta_s <= 0:
        raise ValueError("eta_s must be positive")
    return float(np.linalg.norm(np.asarray(x_s) - np.asarray(x_next))) / eta_s


def gradient_mapping_norm(upper_set: UpperSet, x: np.ndarray, grad: np.ndarray, eta: float) -> float:
    """|x - P(x - eta grad)| / eta evaluated without cancellation.

    Equal to ``stationarity(x, project_upper(x - eta grad), eta)`` in exact
    arithmetic, but coordinates (or the whole step, for a ball) that stay
    inside the set contribute ``grad`` directly instead of a difference of
    nearly equal numbers that rounds to zero when eta is tiny.
    """
    trial = x - eta * grad
    if isinstance(upper_set, Box):
        # compare the move with the distance to each bound so that a tiny
        # outward step from a bound is not rounded back inside
        move = -eta * grad
        room_up = upper_set.upper - x
        room_down = upper_set.lower - x
        mapped = np.where(move > room_up, -room_up / eta,
                          np.where(move < room_down, -room_down / eta, grad))
        return float(np.linalg.norm(mapped))
    if isinstance(upper_set, Ball) and upper_set.contains(trial):
        return float(np.linalg.norm(grad))
    return stationarity(x, upper_set.project(trial), eta)


def run_bfbm(ctx: BarrierContext, x0, eps: float, max_outer: int, seed: int = 0,
             variant: str = "standard", warm_y=None) -> RunResult:
    """Projected hypergradient descent with certified stepsizes.

    Each iteration computes the slack d_s and margin m_s, sets the inner
    accuracy eps / (4 L'(m_s)), solves the lower level (warm-started from the
    previous iterate's solution), forms the approximate hypergradient, and
    steps with eta_s. Stops early once the stationarity measure is <= eps
    and returns the iterate with the smallest measure (first on ties).
    """
    prob = ctx.prob
    c = prob.constants
    x = as_vector(x0, "x0")
    if not prob.upper_set.contains(x, 1e-12):
        raise ValueError("x0 must lie in the upper feasible set")
    if not eps > 0:
        raise ValueError("eps must be positive")
    trace = OuterTrace()
    if max_outer <= 0:
        return RunResult(x.copy(), math.inf, trace, BUDGET_EXHAUSTED, last_y=warm_y, seed=seed)

    mu = problem_strong_convexity(prob, ctx.t)
    best, x_best = math.inf, x.copy()
    warm = None if warm_y is None else as_vector(warm_y, "warm_y")
    cached_x, cached_margin = None, None
    status, reason = BUDGET_EXHAUSTED, ""
    for s in range(max_outer):
        start = time.perf_counter()
        try:
            if cached_x is None or not np.array_equal(cached_x, x):
                cached_margin = find_initial_margin(prob, x)
                cached_x = x.copy()
            d_s, _ = cached_margin
            m_s = compute_margin(ctx.t, d_s, c)
            eps_s = eps / (4 * hypergradient_error_bound(ctx.t, m_s, c, mu))
            sol = solve_lower(ctx, x, eps_s, warm=warm, variant=variant, margin=cached_margin)
            hg = approx_hypergradient(ctx, x, sol)
        except BilevelError as exc:
            status, reason = FAILED, f"{exc.kind}: {exc}"
            break
        gnorm = float(np.linalg.norm(hg.grad))
        l_phi = local_phi_lipschitz(ctx.t, d_s, c, mu)
        eta = stepsize(d_s, gnorm, l_phi, c)
        x_next = project_upper(prob.upper_set, x - eta * hg.grad)
        stat = gradient_mapping_norm(prob.upper_set, x, hg.grad, eta)
        phi = float(prob.f(x, sol.y_tilde))
        trace.append(OuterRow(
            s=s, t=ctx.t, d_s=d_s, m_s=m_s, eta_s=eta, grad_norm=gnorm, stationarity=stat,
            phi_tilde=phi, inner_iters=sol.inner_iters,
            wall_ms=(time.perf_counter() - start) * 1e3,
            x=x.copy(), grad=hg.grad.copy(), x_next=x_next.copy(), eps_s=eps_s,
            y_tilde=sol.y_tilde.copy(),
        ))
        warm = sol.y_tilde
        if stat < best:
            best, x_best = stat, x.copy()
        if stat <= eps:
            status = CONVERGED
            break
        x = x_next
    return RunResult(x_best, best, trace, status, reason, last_y=warm, seed=seed)
