"""Built-in problem instances and brute-force lower-level oracles."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import Infeasible, NonUniqueOptimum, ResidualTooLarge
from .linalg import as_vector
from .problem import (
    BilevelProblem,
    Box,
    Setting,
    SmoothnessConstants,
    augment_with_ball,
    eval_constraints,
    from_quadratic_affine,
)
from .projection import ShrunkSet, find_initial_margin, project_shrunk

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9


# ---------------------------------------------------------------- example1 (degenerate LP)

def example1_problem(x_lower: float = -1.0, x_upper: float = 1.0, augment_ball: bool = False,
                     ball_radius: float = 2.0, ball_rule: str = "conservative") -> BilevelProblem:
    """f = y1, g = x y1 + y2, constraints y2 >= 0, -1 <= y1 <= 1.

    The feasible set is unbounded in y2; the registered radius and slack
    bounds describe the working region y2 <= 2, which holds every barrier
    minimizer for t <= 1.
    """
    xmax = max(abs(x_lower), abs(x_upper))
    consts = SmoothnessConstants(
        f_grad=1.0, f_hess=0.0,
        g_grad=math.sqrt(2.0 + xmax**2), g_hess=1.0, g_hess_lip=0.0,
        h_grad=1.0, h_hess=0.0, h_hess_lip=0.0,
        g_strong=0.0, y_radius=math.sqrt(5.0), n_constraints=3, t_max=1.0,
        lp_sigma=1.0, lp_slack_max=2.0,
    )

    def f(x, y):
        return float(y[0])

    def f_grad(x, y):
        return np.zeros(1), np.array([1.0, 0.0])

    prob = from_quadratic_affine(
        "example1", Box([x_lower], [x_upper]), Setting.LINEAR_LP, consts, f, f_grad,
        y_hull=([-1.0, 0.0], [1.0, 2.0]),
        quad=np.zeros((2, 2)), lin0=[0.0, 1.0], lin_x=[[1.0], [0.0]],
        rows=[[0.0, -1.0], [-1.0, 0.0], [1.0, 0.0]], rhs0=[0.0, 1.0, 1.0], rhs_x=np.zeros((3, 1)),
    )
    if augment_ball:
        prob = augment_with_ball(prob, ball_radius, ball_rule)
    return prob


def example1_closed_form(t: float, x: float):
    """Barrier minimizer (y1, y2) and hyperfunction value f = y1."""
    if t <= 0:
        raise ValueError("t must be positive")
    y1 = 0.0 if x == 0 else (t - math.sqrt(t * t + x * x)) / x
    return y1, t, y1


def example1_closed_form_grad(t: float, x: float) -> float:
    """d/dx of the closed-form barrier hyperfunction."""
    if x == 0:
        return -1.0 / (2.0 * t)
    s = math.sqrt(t * t + x * x)
    return (t / (x * x)) * (t / s - 1.0)


def example1_hyperfunction(x: float) -> float:
    return -1.0 if x >= 0 else 1.0


# ---------------------------------------------------------------- toy QP

def toy_qp_problem(x_lower: float = 0.2, x_upper: float = 1.5, t_max: float = 0.2) -> BilevelProblem:
    """f = |y - 1|^2 + x^2, g = |y|^2/2, y1 + y2 <= x, |y|^2 <= 4."""
    xmax = max(abs(x_lower), abs(x_upper))
    radius = 2.0
    consts = SmoothnessConstants(
        f_grad=math.sqrt(4 * xmax**2 + 4 * (radius + math.sqrt(2.0)) ** 2), f_hess=2.0,
        g_grad=radius, g_hess=1.0, g_hess_lip=0.0,
        h_grad=max(math.sqrt(3.0), 2 * radius), h_hess=2.0, h_hess_lip=0.0,
        g_strong=1.0, y_radius=radius, n_constraints=2, t_max=t_max,
    )

    def f(x, y):
        return float((y[0] - 1) ** 2 + (y[1] - 1) ** 2 + x[0] ** 2)

    def f_grad(x, y):
        return np.array([2 * x[0]]), 2 * (y - 1)

    return from_quadratic_affine(
        "toy_qp", Box([x_lower], [x_upper]), Setting.STRONGLY_CONVEX, consts, f, f_grad,
        y_hull=([-radius, -radius], [radius, radius]),
        quad=np.eye(2), lin0=np.zeros(2), lin_x=np.zeros((2, 1)),
        rows=[[1.0, 1.0]], rhs0=[0.0], rhs_x=[[1.0]],
        centers=np.zeros((1, 2)), radii=[radius],
    )


# ---------------------------------------------------------------- price setting

def price_setting_problem(dims=(1, 1, 1), seed: int = 0, tax_upper: float = 1.0,
                          capacity: float = 1.0, t_max: float = 0.1) -> BilevelProblem:
    """Leader sets taxes T on the follower's taxable activities.

    ``dims = (taxed, untaxed, demand_rows)``. The follower picks activity
    levels (u, v) minimizing (c1 + T)'u + c2'v subject to demand rows
    A1 u + A2 v >= b0 + B T and 0 <= u, v <= capacity. The leader maximizes
    T'u, stored as f = -T'u.
    """
    dx, dy, rows_n = (int(v) for v in dims)
    rng = np.random.default_rng(seed)
    c1 = rng.uniform(0.2, 0.5, dx)
    c2 = rng.uniform(0.5, 1.0, dy)
    a1 = rng.uniform(1.0, 1.5, (rows_n, dx))
    a2 = rng.uniform(1.0, 1.5, (rows_n, dy))
    b0 = rng.uniform(0.1, 0.3, rows_n)
    bt = rng.uniform(-0.05, 0.05, (rows_n, dx))
    m = dx + dy
    cap = float(capacity)

    demand = np.hstack([a1, a2])
    rows = np.vstack([-demand, -np.eye(m), np.eye(m)])
    rhs0 = np.concatenate([-b0, np.zeros(m), np.full(m, cap)])
    rhs_x = np.vstack([-bt, np.zeros((2 * m, dx))])
    lin0 = np.concatenate([c1, c2])
    lin_x = np.vstack([np.eye(dx), np.zeros((dy, dx))])

    t_hi = np.full(dx, float(tax_upper))
    b_min = b0 + np.minimum(bt * 0.0, bt * tax_upper).sum(axis=1)
    slack_max = max(cap, float(np.max(demand.sum(axis=1) * cap - b_min)))
    sigma = float(np.linalg.eigvalsh(rows.T @ rows)[0])
    consts = SmoothnessConstants(
        f_grad=math.sqrt(dx * cap**2 + float(t_hi @ t_hi)), f_hess=1.0,
        g_grad=math.sqrt(dx * cap**2 + float(np.sum((c1 + t_hi) ** 2)) + float(c2 @ c2)),
        g_hess=1.0, g_hess_lip=0.0,
        h_grad=max(1.0, float(np.max(np.sqrt(np.sum(demand**2, axis=1) + np.sum(bt**2, axis=1))))),
        h_hess=0.0, h_hess_lip=0.0,
        g_strong=0.0, y_radius=math.sqrt(m) * cap, n_constraints=rows.shape[0], t_max=t_max,
        lp_sigma=sigma, lp_slack_max=slack_max,
    )

    def f(x, y):
        return float(-x @ y[:dx])

    def f_grad(x, y):
        gy = np.zeros(m)
        gy[:dx] = -x
        return -y[:dx].copy(), gy

    return from_quadratic_affine(
        "price", Box(np.zeros(dx), t_hi), Setting.LINEAR_LP, consts, f, f_grad,
        y_hull=(np.zeros(m), np.full(m, cap)),
        quad=np.zeros((m, m)), lin0=lin0, lin_x=lin_x, rows=rows, rhs0=rhs0, rhs_x=rhs_x,
        info={"c1": c1, "c2": c2, "a1": a1, "a2": a2, "b0": b0, "bt": bt, "dims": (dx, dy, rows_n)},
    )


# ---------------------------------------------------------------- SVM

def svm_data(n: int, dim: int, rng: np.random.Generator, separation: float = 1.5,
             noise: float = 0.25, flip: float = 0.05):
    """Two Gaussian clusters at +-separation along the diagonal, 5% label flips."""
    labels = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    direction = np.ones(dim) / math.sqrt(dim)
    z = labels[:, None] * separation * direction[None, :] + noise * rng.standard_normal((n, dim))
    flips = rng.random(n) < flip
    return z, np.where(flips, -labels, labels)


def svm_problem(n_train: int = 2, n_val: int = 4, d: int = 1, seed: int = 0, reg: float = 1e-2,
                weight_bound: float = 2.0, c_lower: float = 2.0, c_upper: float = 3.0,
                t_max: float = 0.1) -> BilevelProblem:
    """Soft-margin SVM whose per-sample slack caps c are the upper variable.

    Lower variables y = (w, b, xi); lower objective |w|^2/2 + reg(b^2 + |xi|^2)/2
    subject to l_i(z_i'w + b) >= 1 - xi_i, xi_i <= c_i and |w_j|, |b| <=
    weight_bound. Upper objective: exponential validation loss + |c|^2/2.
    """
    if n_train > 30 or d > 5:
        raise ValueError("desk-scale SVM needs n_train <= 30 and d <= 5")
    rng = np.random.default_rng(seed)
    z_tr, l_tr = svm_data(n_train, d, rng)
    z_va, l_va = svm_data(n_val, d, rng)
    n = n_train
    m = d + 1 + n
    wb = float(weight_bound)
    iw, ib, ixi = slice(0, d), d, slice(d + 1, m)

    margin_rows = np.zeros((n, m))
    margin_rows[:, iw] = -l_tr[:, None] * z_tr
    margin_rows[:, ib] = -l_tr
    margin_rows[:, ixi] = -np.eye(n)
    cap_rows = np.zeros((n, m))
    cap_rows[:, ixi] = np.eye(n)
    box_rows = np.zeros((2 * d + 2, m))
    box_rows[:d, iw] = np.eye(d)
    box_rows[d:2 * d, iw] = -np.eye(d)
    box_rows[2 * d, ib] = 1.0
    box_rows[2 * d + 1, ib] = -1.0
    rows = np.vstack([margin_rows, cap_rows, box_rows])
    rhs0 = np.concatenate([-np.ones(n), np.zeros(n), np.full(2 * d + 2, wb)])
    rhs_x = np.vstack([np.zeros((n, n)), np.eye(n), np.zeros((2 * d + 2, n))])
    quad = np.diag(np.concatenate([np.ones(d), [reg], np.full(n, reg)]))

    xi_low = 1.0 - (np.abs(z_tr).sum(axis=1) * wb + wb)
    xi_max = np.maximum(np.abs(xi_low), c_upper)
    radius = math.sqrt(d * wb**2 + wb**2 + float(xi_max @ xi_max))
    expo = np.exp(1.0 + np.abs(z_va).sum(axis=1) * wb + wb)
    feat_norm = np.sqrt(np.sum(z_va**2, axis=1) + 1.0)
    consts = SmoothnessConstants(
        f_grad=math.sqrt(n * c_upper**2 + float(expo @ feat_norm) ** 2),
        f_hess=max(1.0, float(expo @ feat_norm**2)),
        g_grad=math.sqrt(d * wb**2 + reg**2 * (wb**2 + float(xi_max @ xi_max))),
        g_hess=max(1.0, reg), g_hess_lip=0.0,
        h_grad=max(math.sqrt(2.0), float(np.max(np.sqrt(np.sum(z_tr**2, axis=1) + 2.0)))),
        h_hess=0.0, h_hess_lip=0.0,
        g_strong=min(1.0, reg), y_radius=radius, n_constraints=rows.shape[0], t_max=t_max,
    )

    def f(x, y):
        score = z_va @ y[iw] + y[ib]
        return float(np.sum(np.exp(1.0 - l_va * score)) + 0.5 * x @ x)

    def f_grad(x, y):
        e = np.exp(1.0 - l_va * (z_va @ y[iw] + y[ib]))
        gy = np.zeros(m)
        gy[iw] = -(e * l_va) @ z_va
        gy[ib] = -float(e @ l_va)
        return x.copy(), gy

    ylo = np.concatenate([np.full(d, -wb), [-wb], xi_low])
    yhi = np.concatenate([np.full(d, wb), [wb], np.full(n, c_upper)])
    return from_quadratic_affine(
        "svm", Box(np.full(n, c_lower), np.full(n, c_upper)), Setting.STRONGLY_CONVEX, consts,
        f, f_grad, y_hull=(ylo, yhi), quad=quad, lin0=np.zeros(m), lin_x=np.zeros((m, n)),
        rows=rows, rhs0=rhs0, rhs_x=rhs_x,
        info={"z_train": z_tr, "l_train": l_tr, "z_val": z_va, "l_val": l_va, "reg": reg},
    )


# ---------------------------------------------------------------- oracles

@dataclass
class KktCertificate:
    y_star: np.ndarray
    active: tuple
    lambdas: np.ndarray
    stationarity_residual: float
    complementarity: float = 0.0
    optimal_vertices: list = field(default_factory=list)
    skipped_subsets: int = 0

    @property
    def unique(self) -> bool:
        return len(self.optimal_vertices) <= 1


def kkt_multipliers(prob: BilevelProblem, x, y_star, tol: float = 1e-8) -> KktCertificate:
    """Nonnegative least-squares multipliers over the constraints active at y_star."""
    x, y = as_vector(x, "x"), as_vector(y_star, "y_star")
    h = eval_constraints(prob, x, y)
    grad = np.asarray(prob.g_grad_y(x, y), float)
    active = tuple(int(i) for i in np.flatnonzero(np.abs(h) <= 10 * tol))
    lambdas = np.zeros(prob.k)
    if active:
        jac = prob.h_jac_y(x, y)[list(active)]
        lam, _ = nnls(jac.T, -grad)
        lambdas[list(active)] = lam
    residual = float(np.linalg.norm(grad + prob.h_jac_y(x, y).T @ lambdas)) if prob.k else float(
        np.linalg.norm(grad))
    scale = max(1.0, float(np.linalg.norm(grad)))
    if residual > 1e-6 * scale:
        raise ResidualTooLarge(f"KKT residual {residual:.3e} at active set {active}")
    comp = float(np.max(np.abs(lambdas * h), initial=0.0))
    return KktCertificate(y, active, lambdas, residual, comp, [y.copy()])


def _affine_data(prob: BilevelProblem, x: np.ndarray):
    if prob.structure is None:
        raise ValueError("ActiveSet and Vertex oracles need the quadratic/affine structure")
    s = prob.structure(x)
    return s, np.asarray(s.rows, float), np.asarray(s.rhs, float)


def _balls_ok(s, y: np.ndarray, strict: bool) -> bool:
    if s.centers.shape[0] == 0:
        return True
    vals = np.sum((y[None, :] - s.centers) ** 2, axis=1) - s.radii_sq
    return bool(np.all(vals < -FEAS_TOL)) if strict else bool(np.all(vals <= FEAS_TOL))


def _active_set(prob: BilevelProblem, x: np.ndarray) -> KktCertificate:
    s, rows, rhs = _affine_data(prob, x)
    m = prob.m
    best, best_val, skipped = None, math.inf, 0
    scale = 1.0 + float(np.max(np.abs(rhs), initial=0.0))
    for size in range(0, min(m, rows.shape[0]) + 1):
        for subset in itertools.combinations(range(rows.shape[0]), size):
            a = rows[list(subset)]
            kkt = np.block([[s.quad, a.T], [a, np.zeros((size, size))]])
            if np.linalg.matrix_rank(kkt) < m + size:
                skipped += 1
                log.debug("rank-deficient active set %s skipped", subset)
                continue
            sol = np.linalg.solve(kkt, np.concatenate([-s.lin, rhs[list(subset)]]))
            y, lam = sol[:m], sol[m:]
            if np.any(lam < -1e-10) or np.any(rows @ y - rhs > FEAS_TOL * scale):
                continue
            val = 0.5 * y @ s.quad @ y + s.lin @ y
            if val < best_val - 1e-14:
                best, best_val = y, val
    if best is None:
        raise Infeasible("no KKT point found over the affine rows")
    if not _balls_ok(s, best, strict=True):
        raise Infeasible("ball constraint active at the affine optimum; ActiveSet mode excludes balls")
    cert = kkt_multipliers(prob, x, best, tol=1e-9)
    cert.skipped_subsets = skipped
    return cert


def polytope_vertices(rows: np.ndarray, rhs: np.ndarray, tol: float = FEAS_TOL):
    """Vertices of {y : rows y <= rhs} by solving every square active subsystem."""
    k, m = rows.shape
    verts = []
    scale = 1.0 + float(np.max(np.abs(rhs), initial=0.0))
    for subset in itertools.combinations(range(k), m):
        a = rows[list(subset)]
        if np.linalg.matrix_rank(a) < m:
            continue
        y = np.linalg.solve(a, rhs[list(subset)])
        if np.all(rows @ y - rhs <= tol * scale):
            if not any(np.allclose(y, v, atol=1e-10) for v in verts):
                verts.append(y)
    return verts


def _vertex(prob: BilevelProblem, x: np.ndarray) -> KktCertificate:
    s, rows, rhs = _affine_data(prob, x)
    if np.any(s.quad):
        raise ValueError("Vertex mode needs a linear lower objective")
    res = linprog(s.lin, A_ub=rows, b_ub=rhs, bounds=[(None, None)] * prob.m, method="highs")
    if res.status == 2:
        raise Infeasible("lower-level polyhedron is empty")
    if res.status == 3:
        raise Infeasible("lower-level LP is unbounded")
    verts = polytope_vertices(rows, rhs)
    if not verts:
        raise Infeasible("polyhedron has no vertices")
    vals = np.array([s.lin @ v for v in verts])
    best = float(np.min(vals))
    opt = [v for v, val in zip(verts, vals) if val <= best + 1e-9 * (1 + abs(best))]
    if not all(_balls_ok(s, v, strict=True) for v in opt):
        raise Infeasible("ball constraint active at an optimal vertex; Vertex mode excludes balls")
    y = opt[0]
    try:
        cert = kkt_multipliers(prob, x, y, tol=1e-9)
    except ResidualTooLarge:
        cert = KktCertificate(y, (), np.zeros(prob.k), math.inf)
    cert.optimal_vertices = opt
    return cert


def _grid(prob: BilevelProblem, x: np.ndarray, res: int) -> KktCertificate:
    if prob.m > 3:
        raise ValueError("Grid mode supports m <= 3")
    lo, hi = prob.y_hull
    axes = [np.linspace(lo[i], hi[i], res) for i in range(prob.m)]
    best, best_val = None, math.inf
    for point in itertools.product(*axes):
        y = np.array(point)
        if np.max(eval_constraints(prob, x, y), initial=-np.inf) > 0:
            continue
        val = prob.g(x, y)
        if val < best_val:
            best, best_val = y, val
    if best is None:
        raise Infeasible("no feasible grid point")
    # refine by projected gradient on the feasible set
    _, anchor = find_initial_margin(prob, x)
    sset = ShrunkSet(prob, x, 0.0)
    step = 1.0 / max(prob.constants.g_hess, 1e-12)
    y = best
    for _ in range(500):
        nxt = project_shrunk(sset, y - step * np.asarray(prob.g_grad_y(x, y)), tol=1e-12, anchor=anchor)
        if np.linalg.norm(nxt - y) < 1e-13:
            y = nxt
            break
        y = nxt
    try:
        return kkt_multipliers(prob, x, y, tol=1e-7)
    except ResidualTooLarge:
        return KktCertificate(y, (), np.zeros(prob.k), math.inf)


def brute_force_lower(prob: BilevelProblem, x, mode: str = "auto", res: int = 201) -> KktCertificate:
    """Exact lower-level solution by enumeration.

    ``mode``: ``active_set`` (strongly convex quadratic over affine rows),
    ``vertex`` (linear program), ``grid`` (m <= 3, refined by projected
    gradient) or ``auto``.
    """
    x = as_vector(x, "x")
    if mode == "auto":
        mode = "vertex" if prob.setting == Setting.LINEAR_LP else "active_set"
    if mode == "active_set":
        return _active_set(prob, x)
    if mode == "vertex":
        return _vertex(prob, x)
    if mode == "grid":
        return _grid(prob, x, res)
    raise ValueError(f"unknown oracle mode {mode!r}")


def brute_force_hyperfunction(prob: BilevelProblem, x, mode: str = "auto", samples: int = 100,
                              seed: int = 0) -> float:
    """f at the lower solution, minimized over the optimal face when it is not unique."""
    x = as_vector(x, "x")
    cert = brute_force_lower(prob, x, mode)
    if cert.unique:
        return float(prob.f(x, cert.y_star))
    verts = np.array(cert.optimal_vertices)
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(len(verts)), size=samples)
    candidates = np.vstack([verts, weights @ verts])
    return float(min(prob.f(x, y) for y in candidates))


def tangent_ray_cosines(prob: BilevelProblem, x):
    """Cosines between grad_y g and each extreme ray of the tangent cone at y*(x).

    Needs a unique optimal vertex. Rays come from every (m-1)-subset of the
    active rows with a one-dimensional null space.
    """
    x = as_vector(x, "x")
    cert = brute_force_lower(prob, x, "vertex")
    if not cert.unique:
        raise NonUniqueOptimum(f"{len(cert.optimal_vertices)} optimal vertices at x={x.tolist()}")
    s, rows, rhs = _affine_data(prob, x)
    y = cert.y_star
    scale = 1.0 + float(np.max(np.abs(rhs), initial=0.0))
    act = rows[np.abs(rows @ y - rhs) <= 1e-9 * scale]
    m = prob.m
    rays = []
    for subset in itertools.combinations(range(act.shape[0]), m - 1):
        a = act[list(subset)].reshape(-1, m)
        _, sv, vt = np.linalg.svd(np.vstack([a, np.zeros((1, m))]))
        rank = int(np.sum(sv > 1e-10))
        if rank != m - 1:
            continue
        direction = vt[-1]
        for sign in (1.0, -1.0):
            r = sign * direction
            if np.all(act @ r <= 1e-10) and not any(np.allclose(r, q, atol=1e-9) for q in rays):
                rays.append(r)
    grad = np.asarray(prob.g_grad_y(x, y), float)
    gn = float(np.linalg.norm(grad))
    return [float(grad @ r) / (gn * float(np.linalg.norm(r))) for r in rays]


def estimate_tau(prob: BilevelProblem, x) -> float:
    """Smallest cosine between grad_y g and a feasible direction from y*(x)."""
    cos = tangent_ray_cosines(prob, x)
    if not cos:
        raise NonUniqueOptimum("tangent cone has no extreme rays")
    return float(min(cos))


def barrier_newton(ctx, x, y0, tol: float = 1e-14, max_iter: int = 200) -> np.ndarray:
    """Barrier minimizer by damped Newton from a strictly feasible start.

    Backtracking keeps every iterate strictly feasible and accepts a step on
    Armijo decrease or on halving the gradient norm; stops when the Newton
    decrement falls below ``tol``.
    """
    from .barrier import barrier_grad_y, barrier_hess_yy, barrier_value

    x, y = as_vector(x, "x"), as_vector(y0, "y0").copy()
    prob = ctx.prob
    if np.max(eval_constraints(prob, x, y)) >= 0:
        raise ValueError("Newton start must be strictly feasible")
    for _ in range(max_iter):
        grad = barrier_grad_y(ctx, x, y)
        step = np.linalg.solve(barrier_hess_yy(ctx, x, y), -grad)
        decrement = float(-grad @ step)
        if decrement <= tol * tol:
            break
        val, a = barrier_value(ctx, x, y), 1.0
        while a > 1e-20:
            trial = y + a * step
            if np.max(eval_constraints(prob, x, trial)) < 0 and (
                    barrier_value(ctx, x, trial) <= val - 0.25 * a * decrement
                    # near the minimizer value changes drop below rounding
                    or np.linalg.norm(barrier_grad_y(ctx, x, trial)) < 0.5 * np.linalg.norm(grad)):
                break
            a *= 0.5
        if a <= 1e-20 or np.array_equal(trial, y):
            break
        y = trial
    return y


def newton_fd_grad(ctx, x, y0, step: float = 1e-4) -> np.ndarray:
    """Central differences of the barrier hyperfunction with Newton lower solves."""
    x = as_vector(x, "x")
    out = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        hi = ctx.prob.f(x + e, barrier_newton(ctx, x + e, y0))
        lo = ctx.prob.f(x - e, barrier_newton(ctx, x - e, y0))
        out[i] = (hi - lo) / (2 * step)
    return out


PROBLEMS = {
    "example1": example1_problem,
    "toy_qp": toy_qp_problem,
    "price": price_setting_problem,
    "svm": svm_problem,
}
