"""Property suites that compare solver output with the brute-force oracles."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .barrier import BarrierContext
from .errors import BilevelError, NonUniqueOptimum, ResidualTooLarge
from .hypergrad import approx_hypergradient
from .lower import solve_lower
from .problem import BilevelProblem, Setting, check_derivative_consistency, eval_constraints, spot_check_constants
from .testbed import (
    brute_force_hyperfunction,
    brute_force_lower,
    estimate_tau,
    newton_fd_grad,
    example1_problem,
    price_setting_problem,
    svm_problem,
    toy_qp_problem,
)

SUITES = ("derivatives", "margin", "gap", "hypergrad", "value-bound", "multipliers")
HALVINGS = (0.1, 0.05, 0.025, 0.0125)


@dataclass
class Check:
    suite: str
    problem: str
    label: str
    value: float
    bound: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.bound - self.value


def summarize(suite: str, checks: list) -> dict:
    return {
        "suite": suite,
        "checks": len(checks),
        "passes": int(sum(bool(c.passed) for c in checks)),
        "worst_slack": min((c.slack for c in checks), default=math.inf),
    }


def default_problems() -> list:
    return [example1_problem(), toy_qp_problem(), price_setting_problem(), svm_problem()]


def sample_upper(prob: BilevelProblem, count: int, rng: np.random.Generator, inset: float = 0.0):
    lo, hi = prob.upper_set.hull()
    pts = []
    while len(pts) < count:
        x = rng.uniform(lo + inset, hi - inset)
        if prob.upper_set.contains(x):
            pts.append(x)
    return pts


def _t_range(prob: BilevelProblem):
    hi = min(0.1, prob.constants.t_max)
    return hi / 8, hi


def _log_uniform(rng, lo, hi):
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def _fail(suite, prob, label, exc) -> Check:
    return Check(suite, prob.name, f"{label}: {type(exc).__name__}: {exc}", math.inf, 0.0, False)


# ---------------------------------------------------------------- suites

def derivative_checks(problems: Iterable[BilevelProblem], seed: int = 0) -> list:
    out = []
    for prob in problems:
        rep = check_derivative_consistency(prob, samples=20, step=1e-4, seed=seed)
        for name, err in sorted(rep.errors.items()):
            out.append(Check("derivatives", prob.name, name, err, rep.threshold, err <= rep.threshold))
        for name, (seen, bound) in spot_check_constants(prob, 100, seed).items():
            out.append(Check("derivatives", prob.name, f"bound {name}", seen, bound, seen <= bound + 1e-12))
        if prob.setting == Setting.LINEAR_LP:
            x, y = prob.upper_set.hull()[0], 0.5 * (prob.y_hull[0] + prob.y_hull[1])
            lin = float(np.max(np.abs(prob.g_hess_yy(x, y))))
            affine = [i for i in range(prob.k) if not (prob.ball_augmented and i == prob.k - 1)]
            lin_h = float(np.max(np.abs(prob.h_hess_yy(x, y)[affine]), initial=0.0))
            out.append(Check("derivatives", prob.name, "linear hessians vanish", lin + lin_h, 0.0,
                             lin + lin_h == 0.0))
    return out


def margin_checks(problems: Iterable[BilevelProblem], samples: int = 50, seed: int = 0,
                  eps_s: float = 1e-6) -> list:
    """h_i(x, y_tilde) <= -m_s + 1e-9 at random (x, t)."""
    out = []
    for prob in problems:
        rng = np.random.default_rng(seed)
        lo, hi = _t_range(prob)
        for x in sample_upper(prob, samples, rng):
            t = _log_uniform(rng, lo, hi)
            label = f"x={np.round(x, 6).tolist()} t={t:.5g}"
            try:
                sol = solve_lower(BarrierContext(t, prob), x, eps_s)
            except BilevelError as exc:
                out.append(_fail("margin", prob, label, exc))
                continue
            worst = float(np.max(eval_constraints(prob, x, sol.y_tilde)))
            bound = -sol.m_s + 1e-9
            out.append(Check("margin", prob.name, label, worst, bound, worst <= bound))
    return out


def gap_checks(problems: Iterable[BilevelProblem], samples: int = 20, seed: int = 0,
               eps_s: float = 1e-6) -> list:
    """g(x, y_tilde) - g(x, y*) <= k t + 10 eps_s L_g."""
    out = []
    for prob in problems:
        rng = np.random.default_rng(seed + 1)
        lo, hi = _t_range(prob)
        c = prob.constants
        for x in sample_upper(prob, samples, rng):
            t = _log_uniform(rng, lo, hi)
            label = f"x={np.round(x, 6).tolist()} t={t:.5g}"
            try:
                sol = solve_lower(BarrierContext(t, prob), x, eps_s)
                cert = brute_force_lower(prob, x)
            except BilevelError as exc:
                out.append(_fail("gap", prob, label, exc))
                continue
            gap = prob.g(x, sol.y_tilde) - prob.g(x, cert.y_star)
            bound = c.n_constraints * t + 10 * eps_s * c.g_grad
            out.append(Check("gap", prob.name, label, gap, bound, gap <= bound))
    return out


def value_bound(prob: BilevelProblem, x: np.ndarray, t: float) -> float:
    """Hyperfunction-value gap bound for the problem's setting (nan if undefined)."""
    c = prob.constants
    if prob.setting == Setting.STRONGLY_CONVEX:
        return c.f_grad * math.sqrt(2 * c.n_constraints * t / c.g_strong)
    try:
        tau = estimate_tau(prob, x)
    except NonUniqueOptimum:
        return math.nan
    cert = brute_force_lower(prob, x)
    gnorm = float(np.linalg.norm(prob.g_grad_y(x, cert.y_star)))
    return c.f_grad * c.n_constraints * t / (tau * gnorm)


def value_bound_checks(problems: Iterable[BilevelProblem], points: int = 10, seed: int = 0,
                       ts: Iterable[float] = HALVINGS, eps_s: float = 1e-8) -> list:
    """|phi_t(x) - phi(x)| <= bound + L_f eps_s at probe points over a t sequence."""
    out = []
    for prob in problems:
        rng = np.random.default_rng(seed + 2)
        c = prob.constants
        for x in sample_upper(prob, points, rng):
            phi = brute_force_hyperfunction(prob, x)
            warm = None
            for t in ts:
                if t > c.t_max:
                    continue
                label = f"x={np.round(x, 6).tolist()} t={t:.5g}"
                bound = value_bound(prob, x, t)
                if math.isnan(bound):
                    continue
                try:
                    sol = solve_lower(BarrierContext(t, prob), x, eps_s, warm=warm)
                except BilevelError as exc:
                    out.append(_fail("value-bound", prob, label, exc))
                    continue
                warm = sol.y_tilde
                gap = abs(prob.f(x, sol.y_tilde) - phi)
                total = bound + c.f_grad * eps_s
                out.append(Check("value-bound", prob.name, label, gap, total, gap <= total))
    return out


def hypergrad_checks(problems: Iterable[BilevelProblem], points: int = 10, seed: int = 0,
                     step: float = 1e-4, eps_s: float = 1e-8) -> list:
    """|approx hypergradient - FD of the barrier hyperfunction| <= bound + 100 step^2 scale.

    The reference differences use Newton lower solves, independent of the
    accelerated solver under test.
    """
    out = []
    for prob in problems:
        rng = np.random.default_rng(seed + 3)
        t = min(0.1, prob.constants.t_max)
        ctx = BarrierContext(t, prob)
        for x in sample_upper(prob, points, rng, inset=2 * step):
            label = f"x={np.round(x, 6).tolist()} t={t:.5g}"
            try:
                sol = solve_lower(ctx, x, eps_s)
                hg = approx_hypergradient(ctx, x, sol)
                fd = newton_fd_grad(ctx, x, sol.y_tilde, step)
            except BilevelError as exc:
                out.append(_fail("hypergrad", prob, label, exc))
                continue
            diff = float(np.linalg.norm(hg.grad - fd))
            scale = max(1.0, float(np.linalg.norm(fd)))
            bound = hg.error_bound + 100 * step * step * scale
            out.append(Check("hypergrad", prob.name, label, diff, bound, diff <= bound))
    return out


def multiplier_gap(prob: BilevelProblem, x: np.ndarray, t: float, eps_s: float = 1e-10,
                   lambdas: Optional[np.ndarray] = None, warm=None):
    """max_i |t / (-h_i(x, y_tilde)) - lambda_i| and the lower solution used."""
    if lambdas is None:
        lambdas = brute_force_lower(prob, x).lambdas
    sol = solve_lower(BarrierContext(t, prob), x, eps_s, warm=warm)
    h = eval_constraints(prob, x, sol.y_tilde)
    return float(np.max(np.abs(t / (-h) - lambdas))), sol


def sequence_checks(suite: str, prob: BilevelProblem, label: str, values: list,
                    final_bound: Optional[float] = None) -> list:
    """Nonincreasing within 10% slack, plus an optional bound on the last value."""
    out = []
    for i in range(1, len(values)):
        lim = 1.1 * values[i - 1]
        out.append(Check(suite, prob.name, f"{label} step {i}", values[i], lim, values[i] <= lim))
    if final_bound is not None:
        out.append(Check(suite, prob.name, f"{label} final", values[-1], final_bound,
                         values[-1] < final_bound))
    return out


def multiplier_cases():
    """Instances where constraints are active with positive multipliers."""
    return [
        (example1_problem(x_lower=0.25, x_upper=1.0), np.array([0.5])),
        (toy_qp_problem(x_lower=-1.5, x_upper=-0.2), np.array([-0.5])),
        (toy_qp_problem(x_lower=-1.5, x_upper=-0.2), np.array([-1.0])),
    ]


def multiplier_checks(t0: float = 0.1, halvings: int = 4) -> list:
    out = []
    ts = [t0 / 2**i for i in range(halvings + 1)]
    for prob, x in multiplier_cases():
        lambdas = brute_force_lower(prob, x).lambdas
        gaps, warm = [], None
        for t in ts:
            gap, sol = multiplier_gap(prob, x, t, lambdas=lambdas, warm=warm)
            warm = sol.y_tilde
            gaps.append(gap)
        out += sequence_checks("multipliers", prob, f"x={x.tolist()}", gaps, 0.05)
    return out


def brute_force_grad(prob: BilevelProblem, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central differences of the brute-force hyperfunction."""
    out = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        out[i] = (brute_force_hyperfunction(prob, x + e) - brute_force_hyperfunction(prob, x - e)) / (2 * step)
    return out


def hypergrad_gap(prob: BilevelProblem, x: np.ndarray, t: float, eps_s: float = 1e-10, warm=None):
    """|approx hypergradient at t - brute-force grad phi| and the lower solution."""
    ctx = BarrierContext(t, prob)
    sol = solve_lower(ctx, x, eps_s, warm=warm)
    hg = approx_hypergradient(ctx, x, sol)
    return float(np.linalg.norm(hg.grad - brute_force_grad(prob, x))), sol


def hypergrad_convergence_checks(t0: float = 0.1, halvings: int = 4) -> list:
    prob = example1_problem(x_lower=0.25, x_upper=1.0)
    x = np.array([0.5])
    gaps, warm = [], None
    for i in range(halvings + 1):
        gap, sol = hypergrad_gap(prob, x, t0 / 2**i, warm=warm)
        warm = sol.y_tilde
        gaps.append(gap)
    checks = sequence_checks("hypergrad", prob, "convergence x=[0.5]", gaps)
    checks.append(Check("hypergrad", prob.name, "convergence last < first", gaps[-1], gaps[0],
                        gaps[-1] < gaps[0]))
    return checks


def run_suite(name: str, problems: Optional[list] = None, seed: int = 0) -> list:
    probs = default_problems() if problems is None else problems
    if name == "derivatives":
        return derivative_checks(probs, seed)
    if name == "margin":
        return margin_checks(probs, seed=seed)
    if name == "gap":
        return gap_checks(probs, seed=seed)
    if name == "hypergrad":
        checks = hypergrad_checks(probs, seed=seed)
        if problems is None or any(p.name == "example1" for p in probs):
            checks += hypergrad_convergence_checks()
        return checks
    if name == "value-bound":
        return value_bound_checks(probs, seed=seed)
    if name == "multipliers":
        return multiplier_checks()
    raise ValueError(f"unknown suite {name!r}")
