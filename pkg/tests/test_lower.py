import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from barrier_bilevel.barrier import BarrierContext
from barrier_bilevel.lower import inner_iteration_budget, solve_lower
from barrier_bilevel.testbed import brute_force_lower, example1_problem, svm_problem, toy_qp_problem
from oracles import example1_lower_y1


def test_budget_unit_condition_number():
    mu, eps = 0.5, 1e-3
    assert inner_iteration_budget(mu, mu, eps, mu * eps * eps / 2 * math.e**2) == 2


def test_budget_formula_value():
    assert inner_iteration_budget(100.0, 1.0, 1e-3, 1.0) == math.ceil(10 * math.log(2e6)) == 146


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0, 1e6), st.floats(1e-8, 1e-2), st.floats(1e-3, 1e3))
def test_budget_monotone_in_eps(kappa, eps, gap0):
    a = inner_iteration_budget(kappa, 1.0, eps, gap0)
    b = inner_iteration_budget(kappa, 1.0, 2 * eps, gap0)
    assert 0 <= a - b <= math.ceil(math.sqrt(kappa) * math.log(4)) + 1


def test_example1_matches_closed_form():
    sol = solve_lower(BarrierContext(0.1, example1_problem()), [1.0], 1e-8)
    np.testing.assert_allclose(sol.y_tilde, [example1_lower_y1(0.1, 1.0), 0.1], atol=1e-7)
    np.testing.assert_allclose(sol.y_tilde, [-0.904988, 0.1], atol=1e-6)


def test_example1_at_origin():
    sol = solve_lower(BarrierContext(0.05, example1_problem()), [0.0], 1e-8)
    np.testing.assert_allclose(sol.y_tilde, [0.0, 0.05], atol=1e-7)


def test_warm_start_at_solution_exits_immediately():
    ctx = BarrierContext(0.1, example1_problem())
    y_star = np.array([example1_lower_y1(0.1, 1.0), 0.1])
    sol = solve_lower(ctx, [1.0], 1e-6, warm=y_star)
    assert sol.exited_early and sol.inner_iters <= 2


def test_certificate_and_margin():
    for prob, x in ((toy_qp_problem(), [0.7]), (example1_problem(), [-0.4])):
        sol = solve_lower(BarrierContext(0.05, prob), x, 1e-8)
        assert sol.certified
        assert np.max(prob.h(np.array(x), sol.y_tilde)) <= -sol.m_s + 1e-9


@pytest.mark.parametrize("factory", [toy_qp_problem, svm_problem])
def test_distance_to_unbarriered_solution(factory, rng):
    prob = factory()
    c = prob.constants
    eps = 1e-8
    for _ in range(5):
        x = rng.uniform(*prob.upper_set.hull())
        y_star = brute_force_lower(prob, x).y_star
        for t in (0.1, 0.025):
            sol = solve_lower(BarrierContext(t, prob), x, eps)
            assert np.linalg.norm(sol.y_tilde - y_star) <= math.sqrt(2 * c.n_constraints * t / c.g_strong) + eps


def test_objective_decreases_over_windows():
    ctx = BarrierContext(0.1, toy_qp_problem())
    sol = solve_lower(ctx, [0.6], 1e-10, trace_len=5000)
    window = math.ceil(math.sqrt(sol.L_smooth / sol.mu))
    vals = sol.values
    starts = vals[::window]
    assert len(starts) >= 2
    assert np.all(np.diff(starts) <= 1e-12)


def test_deterministic():
    ctx = BarrierContext(0.05, toy_qp_problem())
    a = solve_lower(ctx, [0.9], 1e-8)
    b = solve_lower(ctx, [0.9], 1e-8)
    assert a.y_tilde.tobytes() == b.y_tilde.tobytes() and a.inner_iters == b.inner_iters


def test_verbatim_variant_runs_and_is_slower():
    ctx = BarrierContext(0.1, toy_qp_problem())
    std = solve_lower(ctx, [0.6], 1e-6)
    verb = solve_lower(ctx, [0.6], 1e-6, variant="verbatim")
    assert std.inner_iters < verb.inner_iters
    with pytest.raises(ValueError):
        solve_lower(ctx, [0.6], 1e-6, variant="other")


def test_objective_within_accelerated_envelope():
    from barrier_bilevel.barrier import barrier_value
    from barrier_bilevel.testbed import barrier_newton

    ctx = BarrierContext(0.1, toy_qp_problem())
    x = np.array([0.6])
    sol = solve_lower(ctx, x, 1e-10, trace_len=5000)
    y_star = barrier_newton(ctx, x, sol.y_tilde)
    f_star = barrier_value(ctx, x, y_star)
    q = math.sqrt(sol.mu / sol.L_smooth)
    start = sol.values[0] - f_star + 0.5 * sol.mu * float(np.sum((sol.start - y_star) ** 2))
    for j, v in enumerate(sol.values):
        assert v - f_star <= (1 - q) ** j * start + 1e-12
