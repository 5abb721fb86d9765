"""Compiled inner loops for lower levels given as quadratic + affine rows + balls.

All kernels take the lower data as ``quad, lin, rows, rhs, centers, radii_sq``
(see ``LowerStructure``) and never allocate inside their main loops.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

MEMBER_TOL = 1e-12


@njit(cache=True)
def max_violation(rows, rhs, centers, radii_sq, margin, y):
    """max_i h_i(y) + margin (negative inside the shrunk set)."""
    worst = -np.inf
    m = y.shape[0]
    for i in range(rows.shape[0]):
        v = -rhs[i] + margin
        for j in range(m):
            v += rows[i, j] * y[j]
        if v > worst:
            worst = v
    for i in range(centers.shape[0]):
        v = -radii_sq[i] + margin
        for j in range(m):
            d = y[j] - centers[i, j]
            v += d * d
        if v > worst:
            worst = v
    return worst


@njit(cache=True)
def barrier_value(quad, lin, rows, rhs, centers, radii_sq, t, y):
    m = y.shape[0]
    val = 0.0
    for i in range(m):
        acc = 0.0
        for j in range(m):
            acc += quad[i, j] * y[j]
        val += 0.5 * acc * y[i] + lin[i] * y[i]
    for i in range(rows.shape[0]):
        s = rhs[i]
        for j in range(m):
            s -= rows[i, j] * y[j]
        if s <= 0.0:
            return np.inf
        val -= t * math.log(s)
    for i in range(centers.shape[0]):
        s = radii_sq[i]
        for j in range(m):
            d = y[j] - centers[i, j]
            s -= d * d
        if s <= 0.0:
            return np.inf
        val -= t * math.log(s)
    return val


@njit(cache=True)
def barrier_grad(quad, lin, rows, rhs, centers, radii_sq, t, y, out):
    m = y.shape[0]
    for i in range(m):
        acc = lin[i]
        for j in range(m):
            acc += quad[i, j] * y[j]
        out[i] = acc
    for i in range(rows.shape[0]):
        s = rhs[i]
        for j in range(m):
            s -= rows[i, j] * y[j]
        w = t / s
        for j in range(m):
            out[j] += w * rows[i, j]
    for i in range(centers.shape[0]):
        s = radii_sq[i]
        for j in range(m):
            d = y[j] - centers[i, j]
            s -= d * d
        w = 2.0 * t / s
        for j in range(m):
            out[j] += w * (y[j] - centers[i, j])


@njit(cache=True)
def dykstra(rows, rhs, centers, radii_sq, margin, y, tol, max_sweeps, out):
    """Dykstra's alternating projections onto the shrunk set.

    Halfspaces ``a_i'z <= rhs_i - margin`` and balls
    ``|z - c_j| <= sqrt(r_j^2 - margin)``. Writes the result into ``out`` and
    returns (sweeps, converged).
    """
    m = y.shape[0]
    ka = rows.shape[0]
    kb = centers.shape[0]
    incr = np.zeros((ka + kb, m))
    prev = np.empty(m)
    z = np.empty(m)
    for j in range(m):
        out[j] = y[j]
    for sweep in range(max_sweeps):
        for j in range(m):
            prev[j] = out[j]
        for i in range(ka):
            dot = 0.0
            nrm = 0.0
            for j in range(m):
                z[j] = out[j] + incr[i, j]
                dot += rows[i, j] * z[j]
                nrm += rows[i, j] * rows[i, j]
            excess = dot - (rhs[i] - margin)
            for j in range(m):
                if excess > 0.0 and nrm > 0.0:
                    out[j] = z[j] - excess / nrm * rows[i, j]
                else:
                    out[j] = z[j]
                incr[i, j] = z[j] - out[j]
        for b in range(kb):
            i = ka + b
            rad = math.sqrt(max(radii_sq[b] - margin, 0.0))
            dist = 0.0
            for j in range(m):
                z[j] = out[j] + incr[i, j]
                d = z[j] - centers[b, j]
                dist += d * d
            dist = math.sqrt(dist)
            scale = 1.0
            if dist > rad:
                scale = rad / dist
            for j in range(m):
                out[j] = centers[b, j] + scale * (z[j] - centers[b, j])
                incr[i, j] = z[j] - out[j]
        disp = 0.0
        for j in range(m):
            d = out[j] - prev[j]
            disp += d * d
        if math.sqrt(disp) < tol / 10.0:
            return sweep + 1, True
    return max_sweeps, False


@njit(cache=True)
def pull_toward_anchor(rows, rhs, centers, radii_sq, margin, anchor, y, out):
    """Largest step from ``anchor`` toward ``y`` that stays in the shrunk set."""
    m = y.shape[0]
    lo = 0.0
    hi = 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        for j in range(m):
            out[j] = anchor[j] + mid * (y[j] - anchor[j])
        if max_violation(rows, rhs, centers, radii_sq, margin, out) <= MEMBER_TOL:
            lo = mid
        else:
            hi = mid
    for j in range(m):
        out[j] = anchor[j] + lo * (y[j] - anchor[j])


@njit(cache=True)
def project_into(rows, rhs, centers, radii_sq, margin, anchor, y, tol, max_sweeps, out):
    """Dykstra projection followed by a membership clip toward ``anchor``.

    Returns (sweeps, converged). ``out`` always ends inside the shrunk set.
    """
    sweeps, ok = dykstra(rows, rhs, centers, radii_sq, margin, y, tol, max_sweeps, out)
    if max_violation(rows, rhs, centers, radii_sq, margin, out) > MEMBER_TOL:
        tmp = out.copy()
        pull_toward_anchor(rows, rhs, centers, radii_sq, margin, anchor, tmp, out)
    return sweeps, ok


@njit(cache=True)
def accelerated_pg(quad, lin, rows, rhs, centers, radii_sq, t, margin, lip, mu, y0, anchor,
                   budget, threshold, standard, proj_tol, proj_sweeps, trace_len):
    """Accelerated projected gradient on the barrier objective over the shrunk set.

    ``standard`` steps from the extrapolated point; otherwise the step is
    taken from the current iterate with the gradient at the extrapolated
    point. Exits once ``|y_next - base| * (1 + lip/mu) <= threshold``.
    Extrapolated points that leave the shrunk set are reset to the current
    iterate.

    Returns (y, iterations, last_step, exited_early, resets, projections,
    stalled_projections, values) where ``values`` holds the barrier value of
    the first ``trace_len`` iterates.
    """
    m = y0.shape[0]
    q = math.sqrt(mu / lip)
    beta = (1.0 - q) / (1.0 + q)
    factor = 1.0 + lip / mu
    y = y0.copy()
    yprev = y0.copy()
    w = y0.copy()
    g = np.empty(m)
    ynew = np.empty(m)
    proj = np.empty(m)
    values = np.empty(trace_len)
    resets = 0
    projections = 0
    stalls = 0
    last_step = np.inf
    for it in range(budget):
        if it < trace_len:
            values[it] = barrier_value(quad, lin, rows, rhs, centers, radii_sq, t, y)
        if it > 0:
            for j in range(m):
                w[j] = y[j] + beta * (y[j] - yprev[j])
            if max_violation(rows, rhs, centers, radii_sq, margin, w) > MEMBER_TOL:
                for j in range(m):
                    w[j] = y[j]
                resets += 1
        barrier_grad(quad, lin, rows, rhs, centers, radii_sq, t, w, g)
        for j in range(m):
            if standard:
                ynew[j] = w[j] - g[j] / lip
            else:
                ynew[j] = y[j] - g[j] / lip
        if max_violation(rows, rhs, centers, radii_sq, margin, ynew) > MEMBER_TOL:
            _, ok = project_into(rows, rhs, centers, radii_sq, margin, anchor, ynew,
                                 proj_tol, proj_sweeps, proj)
            projections += 1
            if not ok:
                stalls += 1
            for j in range(m):
                ynew[j] = proj[j]
        step = 0.0
        for j in range(m):
            d = ynew[j] - (w[j] if standard else y[j])
            step += d * d
        step = math.sqrt(step)
        for j in range(m):
            yprev[j] = y[j]
            y[j] = ynew[j]
        last_step = step
        if step * factor <= threshold:
            return y, it + 1, last_step, True, resets, projections, stalls, values[:min(it + 1, trace_len)]
    return y, budget, last_step, False, resets, projections, stalls, values[:min(budget, trace_len)]
