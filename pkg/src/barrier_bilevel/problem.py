"""Bilevel problem instances: oracles, upper feasible set, constants.

A problem is ``min_x f(x, y*(x))`` over an upper set ``X`` where ``y*(x)``
minimizes ``g(x, .)`` subject to ``h(x, y) <= 0`` (vector valued, one entry
per constraint). Constraint oracles are vectorized: ``h`` returns shape
``(k,)``, ``h_jac_y`` shape ``(k, m)``, ``h_hess_yy`` shape ``(k, m, m)`` and
``h_hess_xy`` shape ``(k, n, m)``. Mixed second derivatives are stored
x-major, so ``g_hess_xy`` has shape ``(n, m)``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import DimensionMismatch, MissingConstant, NoInteriorPoint, OracleFailure
from .linalg import as_vector


class Setting(str, enum.Enum):
    STRONGLY_CONVEX = "strongly_convex"
    LINEAR_LP = "linear_lp"


@dataclass(frozen=True)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower, "lower")
        hi = as_vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise DimensionMismatch("box bounds differ in length")
        if np.any(lo > hi):
            raise ValueError("box requires lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def hull(self):
        return self.lower, self.upper

    def contains(self, x, tol: float = 0.0) -> bool:
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, "center"))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def hull(self):
        return self.center - self.radius, self.center + self.radius

    def contains(self, x, tol: float = 0.0) -> bool:
        return float(np.linalg.norm(x - self.center)) <= self.radius + tol

    def project(self, x: np.ndarray) -> np.ndarray:
        diff = x - self.center
        dist = float(np.linalg.norm(diff))
        if dist <= self.radius:
            return x.copy()
        scale = self.radius / dist
        out = self.center + diff * scale
        # rounding can leave the result just outside; shrink until it is in
        while np.linalg.norm(out - self.center) > self.radius:
            scale = np.nextafter(scale, 0.0)
            out = self.center + diff * scale
        return out


UpperSet = Union[Box, Ball]


def project_upper(upper_set: UpperSet, x) -> np.ndarray:
    """Euclidean projection onto the upper feasible set."""
    x = as_vector(x, "x")
    if x.shape[0] != upper_set.dim:
        raise DimensionMismatch(f"x has length {x.shape[0]}, set has dimension {upper_set.dim}")
    return upper_set.project(x)


@dataclass(frozen=True)
class SmoothnessConstants:
    """Registry of bounds assumed known for a problem.

    Naming: ``*_grad`` bounds the gradient norm of a function over
    ``(x, y)``, ``*_hess`` is the Lipschitz constant of that gradient and
    ``*_hess_lip`` the Lipschitz constant of the Hessian. ``lp_sigma`` is the
    smallest eigenvalue of the sum of constraint-gradient outer products and
    ``lp_slack_max`` bounds ``-h_i`` over the feasible set (linear setting).
    """

    f_grad: float
    f_hess: float
    g_grad: float
    g_hess: float
    g_hess_lip: float
    h_grad: float
    h_hess: float
    h_hess_lip: float
    g_strong: float
    y_radius: float
    n_constraints: int
    t_max: float
    lp_sigma: float = 0.0
    lp_slack_max: float = 0.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"constant {f.name} must be finite and nonnegative, got {v}")
        if self.y_radius <= 0 or self.t_max <= 0:
            raise ValueError("y_radius and t_max must be positive")
        if int(self.n_constraints) != self.n_constraints or self.n_constraints < 0:
            raise ValueError("n_constraints must be a nonnegative integer")

    def replace(self, **changes) -> "SmoothnessConstants":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class LowerStructure:
    """Lower-level data at a fixed x for the fast inner kernels.

    g(y) = 0.5 y'Qy + lin'y (+ terms constant in y); constraints are the
    affine rows ``rows @ y - rhs <= 0`` followed by the balls
    ``|y - centers[j]|^2 - radii_sq[j] <= 0``, in that order.
    """

    quad: np.ndarray
    lin: np.ndarray
    rows: np.ndarray
    rhs: np.ndarray
    centers: np.ndarray
    radii_sq: np.ndarray

    @property
    def affine_only(self) -> bool:
        return self.centers.shape[0] == 0


@dataclass(frozen=True)
class BilevelProblem:
    name: str
    n: int
    m: int
    upper_set: UpperSet
    setting: Setting
    constants: SmoothnessConstants
    f: Callable
    f_grad: Callable
    g: Callable
    g_grad_y: Callable
    g_hess_yy: Callable
    g_hess_xy: Callable
    h: Callable
    h_jac_x: Callable
    h_jac_y: Callable
    h_hess_yy: Callable
    h_hess_xy: Callable
    y_hull: tuple
    structure: Optional[Callable] = None
    ball_augmented: bool = False
    ball_rule: str = "conservative"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.upper_set.dim != self.n:
            raise DimensionMismatch("upper set dimension differs from n")
        if self.setting == Setting.STRONGLY_CONVEX and self.constants.g_strong <= 0:
            raise MissingConstant("strongly convex setting needs g_strong > 0")
        if self.ball_rule not in ("conservative", "stated"):
            raise ValueError("ball_rule must be 'conservative' or 'stated'")

    @property
    def k(self) -> int:
        return self.constants.n_constraints

    def replace(self, **changes) -> "BilevelProblem":
        return dataclasses.replace(self, **changes)


def eval_constraints(prob: BilevelProblem, x, y) -> np.ndarray:
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    if x.shape[0] != prob.n or y.shape[0] != prob.m:
        raise DimensionMismatch(f"expected x in R^{prob.n}, y in R^{prob.m}")
    vals = np.asarray(prob.h(x, y), dtype=float).reshape(-1)
    if not np.all(np.isfinite(vals)):
        raise OracleFailure("constraint oracle returned a non-finite value")
    return vals


def from_quadratic_affine(
    name: str,
    upper_set: UpperSet,
    setting: Setting,
    constants: SmoothnessConstants,
    f: Callable,
    f_grad: Callable,
    y_hull,
    quad,
    lin0,
    lin_x,
    rows,
    rhs0,
    rhs_x,
    centers=None,
    radii=None,
    info: Optional[dict] = None,
) -> BilevelProblem:
    """Build a problem whose lower level is a quadratic over affine rows and balls.

    g(x, y) = 0.5 y'Qy + (lin0 + lin_x x)'y, affine rows ``rows y - (rhs0 +
    rhs_x x) <= 0`` and balls ``|y - c_j|^2 <= r_j^2``.
    """
    quad = np.asarray(quad, float)
    lin0 = np.asarray(lin0, float)
    lin_x = np.asarray(lin_x, float).reshape(quad.shape[0], upper_set.dim)
    rows = np.asarray(rows, float).reshape(-1, quad.shape[0])
    rhs0 = np.asarray(rhs0, float).reshape(-1)
    m = quad.shape[0]
    n = upper_set.dim
    rhs_x = np.asarray(rhs_x, float).reshape(rows.shape[0], n)
    centers = np.zeros((0, m)) if centers is None else np.asarray(centers, float).reshape(-1, m)
    radii_sq = np.zeros(0) if radii is None else np.asarray(radii, float).reshape(-1) ** 2
    ka, kb = rows.shape[0], centers.shape[0]
    if ka + kb != constants.n_constraints:
        raise DimensionMismatch("constraint count differs from constants.n_constraints")

    def lin(x):
        return lin0 + lin_x @ x

    def rhs(x):
        return rhs0 + rhs_x @ x

    def g(x, y):
        return float(0.5 * y @ quad @ y + lin(x) @ y)

    def g_grad_y(x, y):
        return quad @ y + lin(x)

    def g_hess_yy(x, y):
        return quad.copy()

    def g_hess_xy(x, y):
        return lin_x.T.copy()

    def h(x, y):
        diff = y[None, :] - centers
        return np.concatenate([rows @ y - rhs(x), np.sum(diff * diff, axis=1) - radii_sq])

    def h_jac_x(x, y):
        return np.vstack([-rhs_x, np.zeros((kb, n))])

    def h_jac_y(x, y):
        return np.vstack([rows, 2.0 * (y[None, :] - centers)])

    hess_yy = np.zeros((ka + kb, m, m))
    hess_yy[ka:] = 2.0 * np.eye(m)

    def h_hess_yy(x, y):
        return hess_yy.copy()

    def h_hess_xy(x, y):
        return np.zeros((ka + kb, n, m))

    def structure(x):
        return LowerStructure(quad, lin(x), rows, rhs(x), centers, radii_sq)

    return BilevelProblem(
        name=name, n=n, m=m, upper_set=upper_set, setting=setting, constants=constants,
        f=f, f_grad=f_grad, g=g, g_grad_y=g_grad_y, g_hess_yy=g_hess_yy, g_hess_xy=g_hess_xy,
        h=h, h_jac_x=h_jac_x, h_jac_y=h_jac_y, h_hess_yy=h_hess_yy, h_hess_xy=h_hess_xy,
        y_hull=(np.asarray(y_hull[0], float), np.asarray(y_hull[1], float)),
        structure=structure, info=dict(info or {}),
    )


def augment_with_ball(prob: BilevelProblem, radius: Optional[float] = None,
                      rule: str = "conservative") -> BilevelProblem:
    """Append the constraint ``|y|^2 <= radius^2`` and update the constants."""
    r = float(prob.constants.y_radius if radius is None else radius)
    if r <= 0:
        raise ValueError("ball radius must be positive")
    m, n = prob.m, prob.n
    c = prob.constants
    consts = c.replace(
        n_constraints=c.n_constraints + 1,
        h_grad=max(c.h_grad, 2.0 * r),
        h_hess=max(c.h_hess, 2.0),
        y_radius=min(c.y_radius, r),
    )
    base = prob

    def h(x, y):
        return np.append(base.h(x, y), float(y @ y) - r * r)

    def h_jac_x(x, y):
        return np.vstack([base.h_jac_x(x, y), np.zeros((1, n))])

    def h_jac_y(x, y):
        return np.vstack([base.h_jac_y(x, y), 2.0 * y[None, :]])

    def h_hess_yy(x, y):
        return np.concatenate([base.h_hess_yy(x, y), 2.0 * np.eye(m)[None]], axis=0)

    def h_hess_xy(x, y):
        return np.concatenate([base.h_hess_xy(x, y), np.zeros((1, n, m))], axis=0)

    structure = None
    if base.structure is not None:
        def structure(x):
            s = base.structure(x)
            return LowerStructure(
                s.quad, s.lin, s.rows, s.rhs,
                np.vstack([s.centers, np.zeros((1, m))]),
                np.append(s.radii_sq, r * r),
            )

    lo, hi = prob.y_hull
    return prob.replace(
        name=prob.name, constants=consts, h=h, h_jac_x=h_jac_x, h_jac_y=h_jac_y,
        h_hess_yy=h_hess_yy, h_hess_xy=h_hess_xy, structure=structure,
        y_hull=(np.maximum(lo, -r), np.minimum(hi, r)),
        ball_augmented=True, ball_rule=rule,
    )


# ---------------------------------------------------------------- derivative audit

@dataclass
class ConsistencyReport:
    errors: dict
    flagged: list
    samples: int
    threshold: float

    @property
    def ok(self) -> bool:
        return not self.flagged


def sample_interior(prob: BilevelProblem, count: int, rng: np.random.Generator,
                    slack: float = 0.1, max_tries: Optional[int] = None):
    """Rejection-sample (x, y) with x in X and max_i h_i(x, y) <= -slack."""
    xlo, xhi = prob.upper_set.hull()
    ylo, yhi = prob.y_hull
    tries = max_tries or 2000 * max(count, 1)
    out = []
    for _ in range(tries):
        x = rng.uniform(xlo, xhi)
        if not prob.upper_set.contains(x):
            continue
        y = rng.uniform(ylo, yhi)
        if np.max(eval_constraints(prob, x, y), initial=-np.inf) <= -slack:
            out.append((x, y))
            if len(out) == count:
                return out
    raise NoInteriorPoint(f"found {len(out)} of {count} interior samples for {prob.name}")


def _central_diff(fun, z: np.ndarray, step: float) -> np.ndarray:
    """Central differences of ``fun`` (any array output) along each coordinate of z.

    Result has the coordinate axis first.
    """
    cols = []
    for i in range(z.shape[0]):
        e = np.zeros_like(z)
        e[i] = step
        cols.append((np.asarray(fun(z + e), float) - np.asarray(fun(z - e), float)) / (2 * step))
    return np.array(cols)


def derivative_errors(prob: BilevelProblem, x: np.ndarray, y: np.ndarray, step: float) -> dict:
    """Relative error of every analytic derivative oracle at one point."""
    gx, gy = prob.f_grad(x, y)
    pairs = {
        "grad_f_x": (gx, _central_diff(lambda z: prob.f(z, y), x, step)),
        "grad_f_y": (gy, _central_diff(lambda z: prob.f(x, z), y, step)),
        "grad_g_y": (prob.g_grad_y(x, y), _central_diff(lambda z: prob.g(x, z), y, step)),
        "hess_g_yy": (prob.g_hess_yy(x, y), _central_diff(lambda z: prob.g_grad_y(x, z), y, step).T),
        "hess_g_xy": (prob.g_hess_xy(x, y), _central_diff(lambda z: prob.g_grad_y(z, y), x, step)),
    }
    if prob.k:
        pairs.update({
            "jac_h_x": (prob.h_jac_x(x, y), _central_diff(lambda z: prob.h(z, y), x, step).T),
            "jac_h_y": (prob.h_jac_y(x, y), _central_diff(lambda z: prob.h(x, z), y, step).T),
            # d/dy_j of the (k, m) Jacobian gives (m_j, k, m_i); reorder to (k, m_i, m_j)
            "hess_h_yy": (prob.h_hess_yy(x, y),
                          np.transpose(_central_diff(lambda z: prob.h_jac_y(x, z), y, step), (1, 2, 0))),
            "hess_h_xy": (prob.h_hess_xy(x, y),
                          np.transpose(_central_diff(lambda z: prob.h_jac_y(z, y), x, step), (1, 0, 2))),
        })
    out = {}
    for name, (exact, approx) in pairs.items():
        exact = np.asarray(exact, float)
        approx = np.asarray(approx, float).reshape(exact.shape)
        if not (np.all(np.isfinite(exact)) and np.all(np.isfinite(approx))):
            raise OracleFailure(f"non-finite value while checking {name}")
        scale = max(1.0, float(np.max(np.abs(exact), initial=0.0)))
        out[name] = float(np.max(np.abs(exact - approx), initial=0.0)) / scale
    return out


def check_derivative_consistency(prob: BilevelProblem, samples: int = 20, step: float = 1e-4,
                                 seed: int = 0) -> ConsistencyReport:
    """Compare analytic derivative oracles with central differences.

    An entry is flagged when its relative error exceeds
    ``100 step^2`` plus a rounding allowance of ``1e3 * machine_eps / step``.
    """
    if not 0 < step <= 1e-2:
        raise ValueError("step must lie in (0, 1e-2]")
    rng = np.random.default_rng(seed)
    points = sample_interior(prob, samples, rng)
    worst: dict = {}
    for x, y in points:
        for name, err in derivative_errors(prob, x, y, step).items():
            worst[name] = max(worst.get(name, 0.0), err)
    threshold = 100 * step * step + 1e3 * np.finfo(float).eps / step
    flagged = sorted(name for name, err in worst.items() if err > threshold)
    return ConsistencyReport(errors=worst, flagged=flagged, samples=len(points), threshold=threshold)


def spot_check_constants(prob: BilevelProblem, samples: int = 100, seed: int = 0) -> dict:
    """Largest sampled gradient norms next to the registered bounds.

    Points are drawn from the feasible region (every h_i < 0).
    """
    rng = np.random.default_rng(seed)
    points = sample_interior(prob, samples, rng, slack=1e-9)
    c = prob.constants
    seen = {"f_grad": 0.0, "g_grad_y": 0.0, "h_grad": 0.0}
    for x, y in points:
        gx, gy = prob.f_grad(x, y)
        seen["f_grad"] = max(seen["f_grad"], float(np.hypot(np.linalg.norm(gx), np.linalg.norm(gy))))
        seen["g_grad_y"] = max(seen["g_grad_y"], float(np.linalg.norm(prob.g_grad_y(x, y))))
        if prob.k:
            jac = np.hstack([prob.h_jac_x(x, y), prob.h_jac_y(x, y)])
            seen["h_grad"] = max(seen["h_grad"], float(np.max(np.linalg.norm(jac, axis=1))))
    bounds = {"f_grad": c.f_grad, "g_grad_y": c.g_grad, "h_grad": c.h_grad}
    return {name: (seen[name], bounds[name]) for name in seen}
