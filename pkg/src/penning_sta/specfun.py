"""Orthogonal polynomials and normalisation constants.

Generalised Laguerre and Jacobi polynomials are evaluated with their
three-term recurrences in the degree.  Degrees are capped at ``MAX_DEGREE``;
beyond that the forward recurrence loses accuracy for large arguments.
All functions broadcast over array-valued ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lgamma, exp
from typing import Optional

import numpy as np

from .errors import DomainError

MAX_DEGREE = 64
MAX_FACTORIAL_ARG = 170


@dataclass(frozen=True)
class PolyEval:
    value: float
    derivative: Optional[float] = None


def _check_degree(N):
    if int(N) != N or N < 0:
        raise DomainError(f"degree must be a non-negative integer, got {N!r}")
    if N > MAX_DEGREE:
        raise DomainError(f"degree {N} exceeds the supported cap {MAX_DEGREE}")
    return int(N)


def _as_finite(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("argument must be finite")
    return arr


def _unwrap(arr):
    return float(arr) if arr.ndim == 0 else arr


def laguerre(N, a, x):
    """Generalised Laguerre polynomial ``L_N^a(x)``.

    Uses ``(n+1) L_{n+1} = (2n+1+a-x) L_n - (n+a) L_{n-1}``.
    """
    N = _check_degree(N)
    if a < 0:
        raise DomainError(f"Laguerre parameter must be >= 0, got {a!r}")
    x = _as_finite(x)
    prev = np.ones_like(x)
    if N == 0:
        return _unwrap(prev)
    cur = 1.0 + a - x
    for n in range(1, N):
        prev, cur = cur, ((2 * n + 1 + a - x) * cur - (n + a) * prev) / (n + 1)
    return _unwrap(cur)


def laguerre_derivative(N, a, x):
    """``d/dx L_N^a(x) = -L_{N-1}^{a+1}(x)``."""
    N = _check_degree(N)
    x = _as_finite(x)
    if N == 0:
        return _unwrap(np.zeros_like(x))
    return _unwrap(-np.asarray(laguerre(N - 1, a + 1, x)))


def jacobi(N, alpha, beta, x):
    """Jacobi polynomial ``P_N^{(alpha, beta)}(x)`` on ``[-1, 1]``."""
    N = _check_degree(N)
    if alpha < 0 or beta < 0:
        raise DomainError("Jacobi parameters must be >= 0")
    x = _as_finite(x)
    if np.any(np.abs(x) > 1.0):
        raise DomainError("Jacobi polynomials are evaluated only for |x| <= 1")
    prev = np.ones_like(x)
    if N == 0:
        return _unwrap(prev)
    ab = alpha + beta
    cur = (alpha + 1.0) + (ab + 2.0) * (x - 1.0) / 2.0
    for n in range(2, N + 1):
        s = 2 * n + ab
        a_n = 2 * n * (n + ab) * (s - 2)
        b_n = (s - 1) * (s * (s - 2) * x + alpha**2 - beta**2)
        c_n = 2 * (n + alpha - 1) * (n + beta - 1) * s
        prev, cur = cur, (b_n * cur - c_n * prev) / a_n
    return _unwrap(cur)


def jacobi_derivative(N, alpha, beta, x):
    """Derivative of ``P_N^{(alpha, beta)}`` via ``(N+alpha+beta+1)/2 * P_{N-1}^{(alpha+1, beta+1)}``."""
    N = _check_degree(N)
    x = _as_finite(x)
    if np.any(np.abs(x) > 1.0):
        raise DomainError("Jacobi polynomials are evaluated only for |x| <= 1")
    if N == 0:
        return _unwrap(np.zeros_like(x))
    scale = (N + alpha + beta + 1) / 2.0
    return _unwrap(scale * np.asarray(jacobi(N - 1, alpha + 1, beta + 1, x)))


def norm_ratio(N, M):
    """``sqrt(N! / (N+|M|)!)`` evaluated through log-gamma."""
    if int(N) != N or N < 0:
        raise DomainError(f"N must be a non-negative integer, got {N!r}")
    top = int(N) + abs(int(M))
    if top > MAX_FACTORIAL_ARG:
        raise DomainError(f"N + |M| = {top} exceeds the cap {MAX_FACTORIAL_ARG}")
    return exp(0.5 * (lgamma(N + 1) - lgamma(top + 1)))


def laguerre_eval(N, a, x) -> PolyEval:
    """Value and first derivative of ``L_N^a`` at a scalar point."""
    return PolyEval(float(laguerre(N, a, x)), float(laguerre_derivative(N, a, x)))


def jacobi_eval(N, alpha, beta, x) -> PolyEval:
    return PolyEval(float(jacobi(N, alpha, beta, x)), float(jacobi_derivative(N, alpha, beta, x)))
