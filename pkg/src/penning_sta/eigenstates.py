"""Radial eigenstates of the Penning trap and invariant-based dynamical states.

Everything here is expressed for the transverse (r, theta) motion only; the
axial oscillator is fixed and factored out.  Functions accept a ``Units``
instance; the default is natural units ``hbar = m = q = 1``.  Together with
the convention ``omega_tilde(0) = 1`` used by :mod:`penning_sta.fields`, this
gives ``l0 = 1/sqrt(2)`` and ``T = mu``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt, pi
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericalError
from .specfun import laguerre, norm_ratio

QUAD_EPSABS = 1e-10


@dataclass(frozen=True)
class Units:
    hbar: float = 1.0
    mass: float = 1.0
    charge: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0 and self.charge > 0):
            raise DomainError("hbar, mass and charge must all be strictly positive")


NATURAL = Units()


@dataclass(frozen=True)
class ModeIndex:
    N: int = 0
    M: int = 0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise DomainError(f"radial quantum number must be a non-negative integer, got {self.N!r}")
        if int(self.M) != self.M:
            raise DomainError(f"angular quantum number must be an integer, got {self.M!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "M", int(self.M))


@dataclass(frozen=True)
class EigenstateSpec:
    mode: ModeIndex
    l: float

    def __post_init__(self):
        if not self.l > 0:
            raise DomainError(f"radial length must be positive, got {self.l!r}")


@dataclass(frozen=True)
class PhysicalScales:
    """Conversion factors from the dimensionless protocol to SI-like units.

    With ``omega_tilde(0)`` given in rad/s and ``units`` holding the physical
    constants, a dimensionless time ``t`` corresponds to ``t * time`` etc.
    """

    time: float
    length: float
    magnetic_field: float
    energy: float

    @classmethod
    def from_initial_frequency(cls, omega_tilde0, units: Units):
        if not omega_tilde0 > 0:
            raise DomainError("initial effective frequency must be positive")
        return cls(
            time=1.0 / omega_tilde0,
            length=sqrt(units.hbar / (units.mass * omega_tilde0)),
            magnetic_field=units.mass * omega_tilde0 / units.charge,
            energy=units.hbar * omega_tilde0,
        )


def length_scale(omega_tilde, units: Units = NATURAL):
    """Characteristic radial length ``sqrt(hbar / (2 m omega_tilde))``."""
    if not omega_tilde > 0:
        raise DomainError(f"trap is not confining for omega_tilde = {omega_tilde!r}")
    return sqrt(units.hbar / (2.0 * units.mass * omega_tilde))


def _radial_parts(mode: ModeIndex, l, r):
    a = abs(mode.M)
    r = np.asarray(r, dtype=float)
    u = r**2 / (2.0 * l**2)
    # u^(a/2) == (r / (sqrt(2) l))^a without the 0**0 ambiguity of fractional powers
    envelope = (norm_ratio(mode.N, mode.M) / (sqrt(2.0 * pi) * l)) * (r / (sqrt(2.0) * l)) ** a * np.exp(-u / 2.0)
    return a, u, envelope


def radial_eigenfunction(spec: EigenstateSpec, r):
    """``f_{N,M,l}(r)`` normalised so that ``int 2 pi r f^2 dr = 1``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise DomainError("radius must be non-negative")
    a, u, envelope = _radial_parts(spec.mode, spec.l, r_arr)
    out = envelope * laguerre(spec.mode.N, a, u)
    return float(out) if np.ndim(out) == 0 else out


def radial_eigenfunction_dl(spec: EigenstateSpec, r):
    """Partial derivative of ``f_{N,M,l}(r)`` with respect to ``l`` at fixed ``r``."""
    a, u, envelope = _radial_parts(spec.mode, spec.l, r)
    N = spec.mode.N
    lag = laguerre(N, a, u)
    dlag = -np.asarray(laguerre(N - 1, a + 1, u)) if N > 0 else 0.0
    out = envelope * ((u - 1.0 - a) * lag - 2.0 * u * dlag) / spec.l
    return float(out) if np.ndim(out) == 0 else out


def laplacian_ratio(spec: EigenstateSpec, r):
    """``(f'' + f'/r) / f`` for the radial eigenfunction, node-free closed form.

    Follows from the stationary radial equation at frequency
    ``hbar / (2 m l^2)``; only geometric, so independent of units.
    """
    r = np.asarray(r, dtype=float)
    M, N, l = spec.mode.M, spec.mode.N, spec.l
    return M**2 / r**2 + r**2 / (4.0 * l**4) - (2 * N + abs(M) + 1) / l**2


def energy(mode: ModeIndex, omega_tilde, omega, units: Units = NATURAL):
    """``hbar omega_tilde (2N + |M| + 1) - hbar omega M``."""
    if not omega_tilde > 0:
        raise DomainError("omega_tilde must be positive")
    return units.hbar * omega_tilde * (2 * mode.N + abs(mode.M) + 1) - units.hbar * omega * mode.M


def invariant_eigenstate(mode: ModeIndex, l, l_prime, r, theta=0.0, units: Units = NATURAL):
    """Eigenstate ``Gamma_{N,M}`` of the Lewis-Riesenfeld invariant.

    A radial eigenfunction at the instantaneous length ``l`` dressed with the
    angular factor ``exp(i M theta)`` and the chirp ``exp(i m l' r^2 / (2 hbar l))``.
    """
    f = radial_eigenfunction(EigenstateSpec(mode, l), r)
    r = np.asarray(r, dtype=float)
    chirp = units.mass * l_prime * r**2 / (2.0 * units.hbar * l)
    out = f * np.exp(1j * (mode.M * np.asarray(theta) + chirp))
    return complex(out) if np.ndim(out) == 0 else out


def lr_phase(
    mode: ModeIndex,
    omega_of_t: Callable[[float], float],
    l_of_t: Callable[[float], float],
    t,
    units: Units = NATURAL,
    variant: str = "printed",
):
    """Lewis-Riesenfeld phase accumulated from 0 to ``t``.

    ``variant="printed"`` uses the radial coefficient ``(N + 1)``;
    ``variant="energy"`` uses ``(2N + |M| + 1)``, the coefficient that the
    static-limit energy would give.  The two coincide for ``N = M = 0``.
    """
    if variant == "printed":
        k = mode.N + 1
    elif variant == "energy":
        k = 2 * mode.N + abs(mode.M) + 1
    else:
        raise ValueError(f"unknown phase variant {variant!r}")
    if t == 0:
        return 0.0
    coef = k * units.hbar / (2.0 * units.mass)

    def integrand(s):
        return mode.M * omega_of_t(s) - coef / l_of_t(s) ** 2

    value, abserr, info = integrate.quad(integrand, 0.0, t, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=500, full_output=1)[:3]
    if abserr > 10 * max(QUAD_EPSABS, 1e-12 * abs(value)):
        raise NumericalError(
            f"phase quadrature did not converge: value={value}, abserr={abserr}, evaluations={info['neval']}"
        )
    return value


def zeta_coefficients(E0, ET, T, units: Units = NATURAL):
    """Monomial coefficients ``[z0, z1, z2, z3]`` of the cubic global phase."""
    if not T > 0:
        raise DomainError("process duration must be positive")
    A = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, T, T**2, T**3],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 1.0, 2.0 * T, 3.0 * T**2],
        ]
    )
    rhs = np.array([0.0, 0.0, -E0 / units.hbar, -ET / units.hbar])
    return np.linalg.solve(A, rhs)


def zeta_phase(E0, ET, T, t, units: Units = NATURAL):
    """Cubic ``zeta(t)`` with ``zeta(0) = zeta(T) = 0`` and ``zeta' = -E/hbar`` at both ends."""
    coeffs = zeta_coefficients(E0, ET, T, units)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > T):
        raise DomainError("zeta is defined on [0, T]")
    out = np.polynomial.polynomial.polyval(t_arr, coeffs)
    return float(out) if np.ndim(out) == 0 else out
