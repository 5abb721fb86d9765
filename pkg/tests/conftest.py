import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from barrier_bilevel.problem import Box, Setting, SmoothnessConstants, from_quadratic_affine


def make_constants(**changes):
    base = dict(
        f_grad=1.0, f_hess=1.0, g_grad=1.0, g_hess=1.0, g_hess_lip=0.0,
        h_grad=1.0, h_hess=1.0, h_hess_lip=0.0, g_strong=1.0, y_radius=1.0,
        n_constraints=1, t_max=1.0,
    )
    base.update(changes)
    return SmoothnessConstants(**base)


def unconstrained_quadratic(quad, lin_x, f_lin_x, f_lin_y):
    """k = 0 problem: g = y'Qy/2 + (lin_x x)'y, f = a'x + b'y."""
    quad = np.asarray(quad, float)
    m = quad.shape[0]
    lin_x = np.asarray(lin_x, float).reshape(m, -1)
    n = lin_x.shape[1]
    a, b = np.asarray(f_lin_x, float), np.asarray(f_lin_y, float)
    consts = make_constants(n_constraints=0, g_strong=float(np.linalg.eigvalsh(quad)[0]),
                            y_radius=10.0)
    return from_quadratic_affine(
        "unconstrained", Box(-np.ones(n), np.ones(n)), Setting.STRONGLY_CONVEX, consts,
        lambda x, y: float(a @ x + b @ y), lambda x, y: (a.copy(), b.copy()),
        y_hull=(-10 * np.ones(m), 10 * np.ones(m)),
        quad=quad, lin0=np.zeros(m), lin_x=lin_x, rows=np.zeros((0, m)), rhs0=np.zeros(0),
        rhs_x=np.zeros((0, n)),
    )


def corrupt_grad_g(prob):
    """Copy of ``prob`` whose lower gradient oracle is off by 0.1 in every entry."""
    good = prob.g_grad_y
    return prob.replace(g_grad_y=lambda x, y: np.asarray(good(x, y)) + 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Records one pass/fail line per acceptance criterion, then asserts."""
    def record(number, title, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
