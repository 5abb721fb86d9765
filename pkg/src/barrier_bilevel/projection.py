"""Shrunk feasible sets Y_d(x) = {y : h_i(x, y) <= -d}: probing and projection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog, minimize

from . import _kernels as kern
from .errors import EmptySet, OracleFailure, SlaterViolation, Stalled
from .linalg import as_vector
from .problem import BilevelProblem, eval_constraints

MEMBER_TOL = 1e-12
CERT_TOL = 1e-9
SLACK_FLOOR = 1e-12
# phase-1 depth is capped here; halving starts at d = 1 so nothing deeper is needed
DEPTH_CAP = 1.0


@dataclass(frozen=True)
class ShrunkSet:
    prob: BilevelProblem
    x: np.ndarray
    margin: float

    def __post_init__(self):
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")
        object.__setattr__(self, "x", as_vector(self.x, "x"))

    def violation(self, y) -> float:
        """max_i h_i(x, y) + margin."""
        h = eval_constraints(self.prob, self.x, y)
        return float(np.max(h, initial=-np.inf)) + self.margin

    def contains(self, y) -> bool:
        return self.violation(y) <= MEMBER_TOL


def structure_arrays(prob: BilevelProblem, x: np.ndarray):
    s = prob.structure(x)
    c = np.ascontiguousarray
    return (c(s.quad, dtype=float), c(s.lin, dtype=float), c(s.rows, dtype=float),
            c(s.rhs, dtype=float), c(s.centers, dtype=float), c(s.radii_sq, dtype=float))


def _hull_center(prob: BilevelProblem) -> np.ndarray:
    lo, hi = prob.y_hull
    return 0.5 * (np.asarray(lo, float) + np.asarray(hi, float))


def _phase_one_lp(rows, rhs, margin: float, budget: int):
    """min s  s.t.  rows y - s <= rhs - margin,  s >= -DEPTH_CAP (HiGHS)."""
    k, m = rows.shape
    cost = np.zeros(m + 1)
    cost[-1] = 1.0
    a_ub = np.hstack([rows, -np.ones((k, 1))])
    bounds = [(None, None)] * m + [(-DEPTH_CAP, None)]
    res = linprog(cost, A_ub=a_ub, b_ub=rhs - margin, bounds=bounds, method="highs",
                  options={"maxiter": max(int(budget), 1) * 100})
    if res.status != 0 or res.x is None:
        return math.inf, None
    return float(res.x[-1]), np.asarray(res.x[:m], float)


def _phase_one_smooth(prob: BilevelProblem, x: np.ndarray, margin: float, budget: int):
    """min s  s.t.  h_i(x, y) + margin <= s,  s >= -DEPTH_CAP (SLSQP, convex h)."""
    m = prob.m
    y_start = _hull_center(prob)
    h0 = eval_constraints(prob, x, y_start)
    z0 = np.append(y_start, float(np.max(h0)) + margin + 1.0)

    def cons(z):
        return z[-1] - prob.h(x, z[:m]) - margin

    def cons_jac(z):
        jac = np.empty((prob.k, m + 1))
        jac[:, :m] = -prob.h_jac_y(x, z[:m])
        jac[:, m] = 1.0
        return jac

    def obj(z):
        return z[-1]

    def obj_grad(z):
        g = np.zeros(m + 1)
        g[-1] = 1.0
        return g

    bounds = [(None, None)] * m + [(-DEPTH_CAP, None)]
    res = minimize(obj, z0, jac=obj_grad, method="SLSQP", bounds=bounds,
                   constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
                   options={"maxiter": max(int(budget), 1), "ftol": 1e-14})
    z = np.asarray(res.x, float)
    if not np.all(np.isfinite(z)):
        raise OracleFailure("phase-one iterate became non-finite")
    y = z[:m]
    # report the true value of the phase-one objective at the returned point
    return float(np.max(eval_constraints(prob, x, y))) + margin, y


def phase_one(prob: BilevelProblem, x, margin: float = 0.0, budget: int = 200):
    """Minimize F(y) = max_i h_i(x, y) + margin, floored at -1.

    Returns (F_min, witness). Affine constraint sets use an exact LP;
    otherwise SLSQP on the epigraph form (convex, so the local solution is
    global).
    """
    x = as_vector(x, "x")
    if prob.k == 0:
        return -DEPTH_CAP, _hull_center(prob)
    if prob.structure is not None:
        s = prob.structure(x)
        if s.affine_only:
            val, y = _phase_one_lp(np.asarray(s.rows, float), np.asarray(s.rhs, float), margin, budget)
            if y is None:
                return math.inf, None
            return float(np.max(eval_constraints(prob, x, y))) + margin, y
    return _phase_one_smooth(prob, x, margin, budget)


def feasibility_probe(sset: ShrunkSet, budget: int = 200) -> Optional[np.ndarray]:
    """A point of the shrunk set, or None when its phase-one value is positive."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    val, y = phase_one(sset.prob, sset.x, sset.margin, budget)
    if y is None or val > CERT_TOL:
        return None
    if sset.contains(y):
        return y
    return None


def find_initial_margin(prob: BilevelProblem, x, budget: int = 200):
    """First d in 1, 1/2, 1/4, ... with Y_d(x) nonempty, plus a witness.

    One phase-one solve gives the deepest attainable slack D (capped at 1);
    Y_d is nonempty exactly when d <= D, so the halving sequence is walked
    against D and the witness is checked for membership at the chosen level.
    """
    x = as_vector(x, "x")
    val, y = phase_one(prob, x, 0.0, budget)
    depth = -val if y is not None else -math.inf
    d = 1.0
    while d >= SLACK_FLOOR:
        if depth >= d - MEMBER_TOL:
            sset = ShrunkSet(prob, x, d)
            if sset.contains(y):
                return d, y
            witness = feasibility_probe(sset, budget)
            if witness is not None:
                return d, witness
        d *= 0.5
    raise SlaterViolation(f"no point with slack >= 1e-12 at x={x.tolist()}")


def _sweep_cap(k: int, m: int, tol: float) -> int:
    return int(math.ceil(10 * max(k, 1) * max(m, 1) * math.log(1.0 / tol)))


def _penalty_projection(sset: ShrunkSet, y: np.ndarray, tol: float) -> np.ndarray:
    """Approximate projection by a quadratic-penalty sequence (smooth h)."""
    prob, x, margin = sset.prob, sset.x, sset.margin
    z = y.copy()
    rho = 10.0
    for _ in range(5):
        def value(v):
            viol = np.maximum(eval_constraints(prob, x, v) + margin, 0.0)
            return 0.5 * float((v - y) @ (v - y)) + 0.5 * rho * float(viol @ viol)

        def grad(v):
            viol = np.maximum(eval_constraints(prob, x, v) + margin, 0.0)
            return (v - y) + rho * prob.h_jac_y(x, v).T @ viol

        step = 1.0
        for _ in range(2000):
            gz = grad(z)
            gn = float(gz @ gz)
            if math.sqrt(gn) <= tol:
                break
            fz = value(z)
            while step > 1e-16:
                cand = z - step * gz
                if value(cand) <= fz - 0.5 * step * gn:
                    break
                step *= 0.5
            z = z - step * gz
            step = min(step * 2.0, 1.0)
        rho *= 10.0
    return z


def _clip_toward(sset: ShrunkSet, anchor: np.ndarray, y: np.ndarray) -> np.ndarray:
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if sset.contains(anchor + mid * (y - anchor)):
            lo = mid
        else:
            hi = mid
    return anchor + lo * (y - anchor)


def project_shrunk(sset: ShrunkSet, y, tol: float = 1e-10,
                   anchor: Optional[np.ndarray] = None) -> np.ndarray:
    """Euclidean projection onto the shrunk set.

    Affine rows and balls use Dykstra's method (stopping when a sweep moves
    the iterate less than tol/10); other constraints use a penalty scheme.
    Either result is finally pulled toward an interior anchor if it sits
    outside the set by more than 1e-12.
    """
    y = as_vector(y, "y")
    if sset.contains(y):
        return y.copy()
    prob = sset.prob
    if prob.structure is not None:
        _, _, rows, rhs, centers, radii_sq = structure_arrays(prob, sset.x)
        out = np.empty_like(y)
        cap = _sweep_cap(prob.k, prob.m, tol)
        _, ok = kern.dykstra(rows, rhs, centers, radii_sq, sset.margin, y, tol, cap, out)
        if not ok:
            if feasibility_probe(sset) is None:
                raise EmptySet(f"shrunk set with margin {sset.margin} is empty")
            raise Stalled(f"Dykstra did not reach tol={tol} in {cap} sweeps")
    else:
        out = _penalty_projection(sset, y, tol)
    if not sset.contains(out):
        if anchor is None:
            anchor = feasibility_probe(sset)
            if anchor is None:
                raise EmptySet(f"shrunk set with margin {sset.margin} is empty")
        out = _clip_toward(sset, np.asarray(anchor, float), out)
    return out
