"""Dense linear solves used by the kernel machines.

Matrices and vectors are plain ``numpy`` float64 arrays. Both solvers reject
non-finite input and report breakdown through package exceptions rather than
returning garbage.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, NotPositiveDefinite, Singular

SYMMETRY_RTOL = 1e-10
PIVOT_RTOL = 1e-12


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def as_vector(b, name: str = "vector") -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {b.shape}")
    if not np.all(np.isfinite(b)):
        raise ValueError(f"{name} has non-finite entries")
    return b


def _check_system(A, b):
    A = as_matrix(A, "A")
    b = as_vector(b, "b")
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"b has length {b.shape[0]}, A has {A.shape[0]} rows")
    return A, b


def solve_spd(A, b) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive-definite ``A`` by Cholesky.

    Raises
    ------
    NotPositiveDefinite
        If the factorization meets a non-positive pivot. For kernel systems
        this usually means the ridge is too small or support points repeat.
    """
    A, b = _check_system(A, b)
    scale = max(float(np.max(np.abs(A))), 1.0) if A.size else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > SYMMETRY_RTOL * scale:
        raise ValueError("A is not symmetric")
    try:
        c, lower = sla.cho_factor(A, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if np.any(np.diag(c) <= 0.0):
        raise NotPositiveDefinite("non-positive pivot in Cholesky factor")
    return sla.cho_solve((c, lower), b, check_finite=False)


def solve_general(A, b) -> np.ndarray:
    """Solve a square system with a row-pivoted LU factorization.

    Raises :class:`Singular` when a pivot falls below ``1e-12 * max|A|``.
    """
    A, b = _check_system(A, b)
    amax = float(np.max(np.abs(A))) if A.size else 0.0
    if amax == 0.0:
        raise Singular("zero matrix")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    if np.min(np.abs(np.diag(lu))) < PIVOT_RTOL * amax:
        raise Singular("pivot below threshold; system is degenerate")
    return sla.lu_solve((lu, piv), b, check_finite=False)
