"""Reference values computed independently of the package under test."""

import math

import numpy as np
from scipy.optimize import brentq


def example1_lower_y1(t, x):
    """Barrier minimizer in y1 for g = x y1 + y2 on -1 <= y1 <= 1, y2 >= 0.

    Stationarity x - t/(1 + y1) + t/(1 - y1) = 0 is the quadratic
    x y1^2 - 2 t y1 - x = 0; the root inside (-1, 1) is taken.
    """
    if x == 0:
        return 0.0
    roots = np.roots([x, -2 * t, -x])
    inside = [r.real for r in roots if abs(r.imag) < 1e-14 and -1 < r.real < 1]
    assert len(inside) == 1
    return inside[0]


def example1_lower_y1_derivative(t, x):
    """d y1 / d x from implicit differentiation of x y1^2 - 2 t y1 - x = 0."""
    y = example1_lower_y1(t, x)
    return -(y * y - 1) / (2 * x * y - 2 * t)


def toy_qp_symmetric_point(t, x):
    """u with y = (u, u) minimizing |y|^2/2 - t log(x - y1 - y2) - t log(4 - |y|^2).

    The symmetric reduction gives u + t/(x - 2u) + 2tu/(4 - 2u^2) = 0,
    bracketed on (-sqrt(2), x/2) where the left side increases.
    """
    def resid(u):
        return u + t / (x - 2 * u) + 2 * t * u / (4 - 2 * u * u)

    lo = -math.sqrt(2) + 1e-15
    hi = x / 2 - 1e-15
    return brentq(resid, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def toy_qp_barrier_value(t, x):
    u = toy_qp_symmetric_point(t, x)
    return 2 * (u - 1) ** 2 + x * x


def toy_qp_barrier_derivative(t, x):
    """d/dx of 2(u - 1)^2 + x^2 with u'(x) from implicit differentiation."""
    u = toy_qp_symmetric_point(t, x)
    s = x - 2 * u
    q = 4 - 2 * u * u
    d_res_dx = -t / s**2
    d_res_du = 1 + 2 * t / s**2 + t * (2 * q + 8 * u * u) / q**2
    du = -d_res_dx / d_res_du
    return 4 * (u - 1) * du + 2 * x


def toy_qp_stationary_x(t, lo=0.2, hi=1.5):
    """Root of the barrier hyperfunction derivative on [lo, hi] by Newton.

    The second derivative comes from a central difference of the analytic
    first derivative.
    """
    x = 0.5 * (lo + hi)
    for _ in range(100):
        d1 = toy_qp_barrier_derivative(t, x)
        h = 1e-6
        d2 = (toy_qp_barrier_derivative(t, x + h) - toy_qp_barrier_derivative(t, x - h)) / (2 * h)
        step = d1 / d2
        x = min(max(x - step, lo), hi)
        if abs(step) < 1e-14:
            break
    return x


def implicit_gradient_2x2(gxy, gyy, fx, fy):
    """grad_x f - G_xy G_yy^{-1} grad_y f with a hand-written 2x2 inverse."""
    (a, b), (c, d) = gyy
    det = a * d - b * c
    inv = np.array([[d, -b], [-c, a]]) / det
    return np.asarray(fx) - np.asarray(gxy) @ (inv @ np.asarray(fy))
