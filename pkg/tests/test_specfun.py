from math import comb, factorial, sqrt

import numpy as np
import pytest
import sympy
from scipy.special import gammaln, roots_genlaguerre

from penning_sta.errors import DomainError
from penning_sta.specfun import (
    jacobi,
    jacobi_derivative,
    jacobi_eval,
    laguerre,
    laguerre_derivative,
    laguerre_eval,
    norm_ratio,
)

_x = sympy.symbols("x", positive=True)


def rodrigues_laguerre(N, a):
    """L_N^a from x^-a e^x / N! d^N/dx^N (e^-x x^(N+a)), expanded symbolically."""
    a = sympy.Integer(a)
    expr = _x ** (-a) * sympy.exp(_x) / sympy.factorial(N) * sympy.diff(sympy.exp(-_x) * _x ** (N + a), _x, N)
    return sympy.lambdify(_x, sympy.expand(sympy.simplify(expr)), "math")


def explicit_jacobi(N, alpha, beta, x):
    """Finite-sum representation, independent of the recurrence."""
    total = 0.0
    for s in range(N + 1):
        total += comb(N + alpha, N - s) * comb(N + beta, s) * ((x - 1) / 2) ** s * ((x + 1) / 2) ** (N - s)
    return total


def test_laguerre_examples():
    assert laguerre(0, 3, 7.5) == 1.0
    assert laguerre(1, 0, 2.0) == pytest.approx(-1.0, abs=1e-15)
    assert laguerre(2, 1, 1.0) == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("a", [0, 1, 2, 3])
@pytest.mark.parametrize("N", range(9))
def test_laguerre_matches_rodrigues(N, a):
    ref = rodrigues_laguerre(N, a)
    for x in (0.1, 1.0, 5.0):
        expected = ref(x)
        assert abs(laguerre(N, a, x) - expected) <= 1e-10 * max(1.0, abs(expected))


def test_laguerre_vectorised_and_derivative():
    x = np.linspace(0.0, 6.0, 31)
    vals = laguerre(4, 1.5, x)
    assert vals.shape == x.shape
    h = 1e-6
    fd = (laguerre(4, 1.5, x + h) - laguerre(4, 1.5, x - h)) / (2 * h)
    assert np.allclose(laguerre_derivative(4, 1.5, x), fd, atol=1e-7)
    ev = laguerre_eval(2, 1, 1.0)
    assert ev.value == pytest.approx(0.5) and ev.derivative == pytest.approx(-2.0)


@pytest.mark.parametrize("N,Np", [(N, Np) for N in range(5) for Np in range(5) if N < Np])
@pytest.mark.parametrize("a", [0, 1, 2])
def test_laguerre_orthogonality(N, Np, a):
    # 20-node generalised Gauss-Laguerre is exact for these degree <= 8 products
    x, wts = roots_genlaguerre(20, a)
    off = float(np.sum(wts * laguerre(N, a, x) * laguerre(Np, a, x)))
    diag = float(np.sum(wts * laguerre(N, a, x) ** 2))
    assert diag == pytest.approx(factorial(N + a) / factorial(N), rel=1e-9)
    assert abs(off) < 1e-8 * diag


def test_laguerre_domain_errors():
    with pytest.raises(DomainError):
        laguerre(-1, 0, 1.0)
    with pytest.raises(DomainError):
        laguerre(2, 0, float("nan"))
    with pytest.raises(DomainError):
        laguerre(65, 0, 1.0)


def test_jacobi_examples():
    assert jacobi(0, 2, 0, 0.3) == 1.0
    assert jacobi(1, 0, 0, 0.0) == 0.0
    assert jacobi(3, 0, 0, -1.0) == pytest.approx(-1.0, abs=1e-15)


@pytest.mark.parametrize("alpha,beta", [(0, 0), (1, 0), (3, 0), (2, 1), (0, 2)])
@pytest.mark.parametrize("N", range(7))
def test_jacobi_matches_explicit_sum(N, alpha, beta):
    for x in np.linspace(-1, 1, 9):
        assert jacobi(N, alpha, beta, x) == pytest.approx(explicit_jacobi(N, alpha, beta, x), abs=1e-12)


@pytest.mark.parametrize("N", range(17))
def test_jacobi_endpoints(N):
    for alpha in (0, 1, 4):
        assert abs(jacobi(N, alpha, 0, 1.0) - comb(N + alpha, N)) < 1e-12 * comb(N + alpha, N)
    assert abs(jacobi(N, 0, 0, 1.0) - 1.0) < 1e-12
    assert abs(abs(jacobi(N, 0, 0, -1.0)) - 1.0) < 1e-12
    # beta = 0 keeps |P(-1)| = 1 for any alpha
    assert abs(abs(jacobi(N, 3, 0, -1.0)) - 1.0) < 1e-12


def test_jacobi_domain():
    with pytest.raises(DomainError):
        jacobi(2, 0, 0, 1.5)
    with pytest.raises(DomainError):
        jacobi_derivative(2, 0, 0, -1.01)


def test_jacobi_derivative_examples():
    assert jacobi_derivative(0, 1.3, 0.2, 0.4) == 0.0
    assert jacobi_derivative(1, 0, 0, 0.7) == pytest.approx(1.0)
    # P_2^(1,0)(x) = (5x^2 + 2x - 1)/2 from the explicit sum -> derivative 1 at x = 0
    assert explicit_jacobi(2, 1, 0, 0.5) == pytest.approx((5 * 0.25 + 1 - 1) / 2)
    assert jacobi_derivative(2, 1, 0, 0.0) == pytest.approx(1.0)


def test_jacobi_derivative_vs_finite_difference():
    x = np.linspace(-0.95, 0.95, 21)
    h = 1e-6
    for N in range(1, 7):
        fd = (jacobi(N, 2, 0, x + h) - jacobi(N, 2, 0, x - h)) / (2 * h)
        assert np.allclose(jacobi_derivative(N, 2, 0, x), fd, atol=1e-6)
    ev = jacobi_eval(1, 0, 0, 0.3)
    assert (ev.value, ev.derivative) == (pytest.approx(0.3), pytest.approx(1.0))


def test_norm_ratio():
    assert norm_ratio(0, 0) == 1.0
    assert norm_ratio(0, 2) == pytest.approx(1 / sqrt(2))
    assert norm_ratio(2, 1) == pytest.approx(sqrt(2 / 6))
    assert norm_ratio(2, -1) == norm_ratio(2, 1)
    # large arguments would overflow naive factorials in float
    assert norm_ratio(20, 50) == pytest.approx(np.exp(0.5 * (gammaln(21) - gammaln(71))), rel=1e-12)
    with pytest.raises(DomainError):
        norm_ratio(100, 80)
