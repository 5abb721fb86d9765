"""Small dense linear algebra helpers.

Vectors and matrices are plain float64 numpy arrays; factorizations go
through LAPACK via numpy.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NotPositiveDefinite, NotSymmetric, OracleFailure

SYMMETRY_TOL = 1e-10
JITTER_START = 1e-12
JITTER_STOP = 1e-6


def as_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise OracleFailure(f"{name} has non-finite entries")
    return arr


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise OracleFailure(f"{name} has non-finite entries")
    return arr


def _check_symmetric(a: np.ndarray) -> np.ndarray:
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {a.shape}")
    scale = 1.0 + float(np.max(np.abs(a))) if a.size else 1.0
    if a.size and float(np.max(np.abs(a - a.T))) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric within 1e-10")
    return 0.5 * (a + a.T)


def _cholesky_with_jitter(a: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    scale = max(1.0, float(np.mean(np.abs(np.diag(a)))))
    eye = np.eye(a.shape[0])
    jitter = JITTER_START
    while jitter <= JITTER_STOP * (1 + 1e-9):
        try:
            return np.linalg.cholesky(a + jitter * scale * eye)
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NotPositiveDefinite("Cholesky failed with diagonal jitter up to 1e-6")


def _cho_solve(low: np.ndarray, b: np.ndarray) -> np.ndarray:
    z = np.linalg.solve(low, b)
    return np.linalg.solve(low.T, z)


def solve_spd(a, b) -> np.ndarray:
    """Solve ``a x = b`` for symmetric positive-definite ``a``.

    Uses a Cholesky factorization, escalating a diagonal jitter from 1e-12
    to 1e-6 (relative to the mean diagonal) if plain factorization fails,
    followed by up to three rounds of iterative refinement.
    """
    a = as_matrix(a, "A")
    b = as_vector(b, "b")
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"A is {a.shape}, b has length {b.shape[0]}")
    a = _check_symmetric(a)
    low = _cholesky_with_jitter(a)
    x = _cho_solve(low, b)
    limit = 1e-8 * (1.0 + float(np.linalg.norm(b)))
    for _ in range(3):
        r = b - a @ x
        if float(np.linalg.norm(r)) <= limit:
            return x
        x = x + _cho_solve(low, r)
    if float(np.linalg.norm(b - a @ x)) > limit:
        raise NotPositiveDefinite("residual above 1e-8(1+|b|) after refinement")
    return x


def min_eig_lower_bound(a, mu: float) -> bool:
    """True iff ``a - mu I`` is positive semidefinite within 1e-10."""
    a = _check_symmetric(as_matrix(a, "A"))
    n = a.shape[0]
    scale = 1.0 + float(np.max(np.abs(a))) if a.size else 1.0
    shifted = a - mu * np.eye(n) + SYMMETRY_TOL * scale * np.eye(n)
    try:
        np.linalg.cholesky(shifted)
    except np.linalg.LinAlgError:
        return False
    return True
