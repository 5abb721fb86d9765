import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from barrier_bilevel.problem import (
    Ball,
    Box,
    augment_with_ball,
    check_derivative_consistency,
    eval_constraints,
    spot_check_constants,
)
from barrier_bilevel.testbed import PROBLEMS, example1_problem, price_setting_problem, toy_qp_problem
from conftest import corrupt_grad_g

vec2 = st.tuples(st.floats(-10, 10), st.floats(-10, 10)).map(np.array)


def test_example1_constraints_at_origin():
    np.testing.assert_array_equal(eval_constraints(example1_problem(), [0.0], [0.0, 1.0]), [-1, -1, -1])


def test_boundary_entry_is_zero():
    h = eval_constraints(example1_problem(), [0.0], [1.0, 0.5])
    assert h[2] == 0.0


def test_toy_qp_coupled_row():
    assert eval_constraints(toy_qp_problem(), [0.5], [0.0, 0.0])[0] == -0.5


def test_example1_derivatives_consistent():
    rep = check_derivative_consistency(example1_problem(), samples=20, step=1e-4, seed=0)
    assert rep.ok
    assert max(rep.errors.values()) <= 1e-6


def test_corrupted_lower_gradient_is_flagged():
    rep = check_derivative_consistency(corrupt_grad_g(example1_problem()), 20, 1e-4, 0)
    assert "grad_g_y" in rep.flagged


def test_toy_qp_hessians_exact():
    rep = check_derivative_consistency(toy_qp_problem(), samples=20, step=1e-4, seed=0)
    for name in ("hess_g_yy", "hess_h_yy", "hess_g_xy", "hess_h_xy"):
        assert rep.errors[name] <= 1e-10


def test_box_clamp():
    np.testing.assert_array_equal(Box([-1, -1], [1, 1]).project(np.array([2.0, 0.5])), [1, 0.5])


def test_ball_radial():
    np.testing.assert_allclose(Ball([0, 0], 1.0).project(np.array([3.0, 4.0])), [0.6, 0.8])


@settings(max_examples=100, deadline=None)
@given(vec2, vec2)
def test_projection_idempotent_and_nonexpansive(a, b):
    for s in (Box([-1, -2], [1, 0.5]), Ball([0.3, -0.2], 1.5)):
        pa, pb = s.project(a), s.project(b)
        np.testing.assert_array_equal(s.project(pa), pa)
        assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-12


def test_linear_problems_have_zero_y_hessians(rng):
    for prob in (example1_problem(), price_setting_problem()):
        lo, hi = prob.y_hull
        for _ in range(20):
            x = rng.uniform(*prob.upper_set.hull())
            y = rng.uniform(lo, hi)
            assert not np.any(prob.g_hess_yy(x, y))
            assert not np.any(prob.h_hess_yy(x, y))


def test_registered_gradient_bounds_hold():
    for name, factory in PROBLEMS.items():
        for key, (seen, bound) in spot_check_constants(factory(), 100, seed=0).items():
            assert seen <= bound + 1e-12, (name, key, seen, bound)


def test_ball_augmentation_updates_constants():
    prob = augment_with_ball(example1_problem(), 2.0)
    c = prob.constants
    assert c.n_constraints == 4 and c.y_radius == 2.0 and c.h_grad == 4.0 and c.h_hess == 2.0
    assert eval_constraints(prob, [0.0], [0.0, 1.0])[-1] == -3.0
    assert check_derivative_consistency(prob, 20, 1e-4, 0).ok


def test_price_zero_tax_gives_zero_leader_objective():
    prob = price_setting_problem()
    assert prob.f(np.zeros(1), np.array([0.7, 0.3])) == 0.0
    assert math.isfinite(prob.constants.lp_sigma) and prob.constants.lp_sigma > 0
