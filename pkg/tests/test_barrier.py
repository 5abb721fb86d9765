import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barrier_bilevel.barrier import (
    BarrierContext,
    barrier_grad_y,
    barrier_hess_xy,
    barrier_hess_yy,
    barrier_value,
    compute_margin,
    hessian_lipschitz_bound,
    lipschitz_smooth_bound,
    problem_strong_convexity,
    strong_convexity_bound,
)
from barrier_bilevel.errors import BoundaryViolation, MissingConstant
from barrier_bilevel.linalg import min_eig_lower_bound
from barrier_bilevel.problem import Setting, eval_constraints
from barrier_bilevel.testbed import PROBLEMS, example1_problem, toy_qp_problem
from conftest import make_constants, unconstrained_quadratic
from oracles import example1_lower_y1

MARGIN_CONSTS = make_constants(y_radius=1.0, g_grad=1.0, t_max=1.0, n_constraints=1, h_grad=1.0)


def test_no_constraints_reduce_to_g():
    prob = unconstrained_quadratic([[2.0, 0.0], [0.0, 1.0]], [[1.0], [0.5]], [0.0], [1.0, 0.0])
    ctx = BarrierContext(0.1, prob)
    x, y = np.array([0.3]), np.array([0.2, -0.4])
    assert barrier_value(ctx, x, y) == prob.g(x, y)
    np.testing.assert_array_equal(barrier_grad_y(ctx, x, y), prob.g_grad_y(x, y))
    np.testing.assert_array_equal(barrier_hess_yy(ctx, x, y), prob.g_hess_yy(x, y))
    np.testing.assert_array_equal(barrier_hess_xy(ctx, x, y), prob.g_hess_xy(x, y))


def test_example1_value():
    ctx = BarrierContext(0.1, example1_problem())
    assert barrier_value(ctx, [0.0], [0.0, 0.1]) == pytest.approx(0.1 - 0.1 * math.log(0.1), abs=1e-15)
    assert barrier_value(ctx, [0.0], [0.0, 0.1]) == pytest.approx(0.330259, abs=1e-6)


def test_boundary_rejected():
    ctx = BarrierContext(0.1, example1_problem())
    for y in ([0.0, 0.0], [1.0, 0.5], [2.0, 0.5]):
        with pytest.raises(BoundaryViolation):
            barrier_value(ctx, [0.0], y)


def test_example1_closed_form_is_stationary():
    ctx = BarrierContext(0.1, example1_problem())
    y = [example1_lower_y1(0.1, 1.0), 0.1]
    assert np.linalg.norm(barrier_grad_y(ctx, [1.0], y)) <= 1e-10


def _fd(fun, z, step):
    cols = []
    for i in range(z.shape[0]):
        e = np.zeros_like(z)
        e[i] = step
        cols.append((np.asarray(fun(z + e)) - np.asarray(fun(z - e))) / (2 * step))
    return np.array(cols)


def _interior_points(prob, count, rng, slack=0.05):
    lo, hi = prob.y_hull
    out = []
    while len(out) < count:
        x = rng.uniform(*prob.upper_set.hull())
        y = rng.uniform(lo, hi)
        if np.max(eval_constraints(prob, x, y)) <= -slack:
            out.append((x, y))
    return out


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_derivatives_match_finite_differences(name, rng):
    prob = PROBLEMS[name]()
    ctx = BarrierContext(min(0.1, prob.constants.t_max), prob)
    for x, y in _interior_points(prob, 5, rng):
        grad = barrier_grad_y(ctx, x, y)
        fd = _fd(lambda z: barrier_value(ctx, x, z), y, 1e-5)
        assert np.linalg.norm(grad - fd) <= 1e-6 * max(1.0, np.linalg.norm(grad))
        hess = barrier_hess_yy(ctx, x, y)
        fdh = _fd(lambda z: barrier_grad_y(ctx, x, z), y, 1e-5)
        assert np.max(np.abs(hess - fdh)) <= 1e-5 * max(1.0, np.max(np.abs(hess)))
        mixed = barrier_hess_xy(ctx, x, y)
        fdm = _fd(lambda z: barrier_grad_y(ctx, z, y), x, 1e-5)
        assert mixed.shape == (prob.n, prob.m)
        assert np.max(np.abs(mixed - fdm)) <= 1e-5 * max(1.0, np.max(np.abs(mixed)))


def test_example1_hessian_by_hand():
    t, y1, y2 = 0.1, 0.3, 0.4
    ctx = BarrierContext(t, example1_problem())
    expect = t * np.diag([1 / (1 + y1) ** 2 + 1 / (1 - y1) ** 2, 1 / y2**2])
    np.testing.assert_allclose(barrier_hess_yy(ctx, [0.2], [y1, y2]), expect, rtol=1e-14)


def test_margin_examples():
    assert compute_margin(0.1, 1.0, MARGIN_CONSTS) == pytest.approx(0.0125, rel=1e-14)
    assert compute_margin(0.1, 2.0, MARGIN_CONSTS) == pytest.approx(0.05, rel=1e-14)
    assert compute_margin(1.0, 8.0, MARGIN_CONSTS) == 4.0


def test_smoothness_bound_example():
    c = make_constants(g_hess=2.0, h_hess=1.0, h_grad=1.0, n_constraints=2)
    assert lipschitz_smooth_bound(0.1, 0.1, c) == pytest.approx(24.0, rel=1e-14)
    assert lipschitz_smooth_bound(1e-300, 0.1, c) == pytest.approx(2.0)
    assert lipschitz_smooth_bound(0.1, 0.05, c) > 24.0


def test_hessian_lipschitz_example():
    c = make_constants(g_hess_lip=0.0, h_hess_lip=0.0, h_hess=1.0, h_grad=1.0, n_constraints=1)
    assert hessian_lipschitz_bound(0.1, 0.5, c) == pytest.approx(2.8, rel=1e-14)
    assert hessian_lipschitz_bound(1e-300, 0.5, c.replace(g_hess_lip=3.0)) == pytest.approx(3.0)
    flat = c.replace(h_hess=0.0, h_grad=0.0, g_hess_lip=1.5)
    assert hessian_lipschitz_bound(0.1, 1e-3, flat) == 1.5


def test_strong_convexity_examples():
    sc = make_constants(g_strong=0.7)
    assert strong_convexity_bound(Setting.STRONGLY_CONVEX, 0.3, sc) == 0.7
    lp = make_constants(g_strong=0.0, lp_sigma=4.0, lp_slack_max=2.0)
    assert strong_convexity_bound(Setting.LINEAR_LP, 0.1, lp) == pytest.approx(0.1)
    bare = make_constants(g_strong=0.0, y_radius=1.0)
    assert strong_convexity_bound(Setting.LINEAR_LP, 0.1, bare, augmented=True) == pytest.approx(0.2)
    assert strong_convexity_bound(Setting.LINEAR_LP, 0.1, bare.replace(y_radius=2.0), augmented=True,
                                  rule="stated") == pytest.approx(0.1)
    with pytest.raises(MissingConstant):
        strong_convexity_bound(Setting.LINEAR_LP, 0.1, bare)


def test_t_outside_range_rejected():
    with pytest.raises(ValueError):
        BarrierContext(0.0, example1_problem())
    with pytest.raises(ValueError):
        BarrierContext(0.5, toy_qp_problem())


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-4, 1.0), st.floats(1e-4, 1.0), st.floats(1.0, 4.0), st.floats(1.0, 4.0))
def test_margin_bounded_and_monotone(t, d, tf, df):
    c = MARGIN_CONSTS
    m = compute_margin(t, d, c)
    assert 0 < m <= d / 2
    assert compute_margin(min(t * tf, 1.0), d, c) >= m
    assert compute_margin(t, d * df, c) >= m


@pytest.mark.parametrize("name", sorted(PROBLEMS))
def test_hessian_respects_strong_convexity(name, rng):
    prob = PROBLEMS[name]()
    ctx = BarrierContext(min(0.1, prob.constants.t_max), prob)
    mu = problem_strong_convexity(prob, ctx.t)
    for x, y in _interior_points(prob, 30, rng, slack=1e-6):
        assert min_eig_lower_bound(barrier_hess_yy(ctx, x, y), mu)


def _pairs_in_shrunk_set(prob, x, margin, count, rng):
    lo, hi = prob.y_hull
    pts = []
    while len(pts) < 2 * count:
        y = rng.uniform(lo, hi)
        if np.max(eval_constraints(prob, x, y)) <= -margin:
            pts.append(y)
    return list(zip(pts[::2], pts[1::2]))


@pytest.mark.parametrize("name", ["toy_qp", "example1"])
def test_gradient_and_hessian_lipschitz_on_shrunk_set(name, rng):
    prob = PROBLEMS[name]()
    t, margin = 0.1, 0.05
    ctx = BarrierContext(t, prob)
    lip = lipschitz_smooth_bound(t, margin, prob.constants)
    hlip = hessian_lipschitz_bound(t, margin, prob.constants)
    x = np.array([0.5])
    for p1, p2 in _pairs_in_shrunk_set(prob, x, margin, 100, rng):
        dist = np.linalg.norm(p1 - p2)
        dg = np.linalg.norm(barrier_grad_y(ctx, x, p1) - barrier_grad_y(ctx, x, p2))
        dh = np.linalg.norm(barrier_hess_yy(ctx, x, p1) - barrier_hess_yy(ctx, x, p2), 2)
        assert dg <= lip * dist * (1 + 1e-12)
        assert dh <= hlip * dist * (1 + 1e-12)
