"""Polynomial auxiliary functions ``lambda(tau) = l(t) / l0`` with ``tau = t / T``.

A trajectory must start at 1 and end at ``rho = l_T / l0`` with its first
three derivatives vanishing at both ends.  The minimal degree-7 solution is

    lambda(tau) = 1 + (rho - 1) (35 tau^4 - 84 tau^5 + 70 tau^6 - 20 tau^7),

and extra shape freedom is added through ``tau^(4+j) (1 - tau)^4``, which
leaves all eight end conditions untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import List

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError

MAX_FREE_PARAMS = 8
BOUNDARY_TOL = 1e-10
POSITIVITY_SAMPLES = 10_000

_SMOOTHSTEP7 = np.array([0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0])


def _derivative_table(coeffs):
    derivs = [np.asarray(coeffs, dtype=float)]
    for _ in range(3):
        derivs.append(P.polyder(derivs[-1]) if len(derivs[-1]) > 1 else np.zeros(1))
    return tuple(derivs)


@dataclass(frozen=True)
class Trajectory:
    """``lambda(tau)`` in the monomial basis.

    ``parts`` optionally gives the same polynomial as a weighted sum of
    integer-coefficient polynomials ``sum_i w_i q_i``.  Evaluating that form
    makes the end conditions hold exactly in floating point, which the summed
    monomial coefficients cannot guarantee once they carry rounding.
    """

    rho: float
    coeffs: np.ndarray
    free_params: np.ndarray = field(default_factory=lambda: np.zeros(0))
    parts: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float).copy())
        object.__setattr__(self, "free_params", np.asarray(self.free_params, dtype=float).copy())
        self.coeffs.setflags(write=False)
        self.free_params.setflags(write=False)
        # cache the derivative coefficient vectors used by eval
        object.__setattr__(self, "_derivs", _derivative_table(self.coeffs))
        object.__setattr__(self, "_parts", tuple((float(w), _derivative_table(q)) for w, q in self.parts))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, tau, order=0):
        return eval(self, tau, order)

    def to_record(self):
        """Serialise as ``rho=<float>; coeffs=<c0,c1,...>``."""
        return f"rho={self.rho!r}; coeffs=" + ",".join(repr(float(c)) for c in self.coeffs)

    @classmethod
    def from_record(cls, text):
        fields = {}
        for part in text.strip().split(";"):
            if not part.strip():
                continue
            key, sep, value = part.partition("=")
            if not sep:
                raise ValueError(f"malformed trajectory record field {part!r}")
            fields[key.strip()] = value.strip()
        try:
            rho = float(fields["rho"])
            coeffs = [float(c) for c in fields["coeffs"].split(",")]
        except KeyError as exc:
            raise ValueError(f"trajectory record lacks {exc.args[0]!r}") from None
        return cls(rho=rho, coeffs=np.array(coeffs))

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.rho == other.rho and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash((self.rho, self.coeffs.tobytes()))


def eval(traj: Trajectory, tau, order=0):  # noqa: A001 - mirrors the public operation name
    """``lambda^(order)(tau)`` from the exact derivative of the coefficient vector."""
    if order not in (0, 1, 2, 3):
        raise DomainError(f"derivative order must be 0..3, got {order!r}")
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0.0) or np.any(tau_arr > 1.0):
        raise DomainError("tau must lie in [0, 1]")
    if traj._parts:
        out = sum(w * P.polyval(tau_arr, d[order]) for w, d in traj._parts if w != 0.0)
        out = np.asarray(out, dtype=float) + np.zeros_like(tau_arr)
    else:
        out = P.polyval(tau_arr, traj._derivs[order])
    return float(out) if out.ndim == 0 else out


def paper_polynomial(rho) -> Trajectory:
    """Minimal degree-7 trajectory reaching ``rho`` with smooth end conditions."""
    if not rho > 0:
        raise DomainError(f"length ratio must be positive, got {rho!r}")
    coeffs = (rho - 1.0) * _SMOOTHSTEP7
    coeffs[0] = 1.0
    return Trajectory(rho=float(rho), coeffs=coeffs, parts=_minimal_parts(rho))


def _minimal_parts(rho):
    return ((1.0, np.ones(1)), (rho - 1.0, _SMOOTHSTEP7))


def ratio_for_compression(c):
    """``l_T / l0 = c^(-1/2)`` for a final-to-initial frequency ratio ``c``."""
    if not c > 0:
        raise DomainError(f"frequency ratio must be positive, got {c!r}")
    return c**-0.5


def free_basis(j):
    """Monomial coefficients of ``tau^(4+j) (1 - tau)^4``."""
    coeffs = np.zeros(9 + j)
    for k in range(5):
        coeffs[4 + j + k] = comb(4, k) * (-1) ** k
    return coeffs


def with_free_params(rho, free_params) -> Trajectory:
    free_params = np.atleast_1d(np.asarray(free_params, dtype=float))
    if free_params.ndim != 1 or len(free_params) > MAX_FREE_PARAMS:
        raise DomainError(f"at most {MAX_FREE_PARAMS} free parameters are supported")
    base = paper_polynomial(rho).coeffs
    K = len(free_params)
    coeffs = np.zeros(max(len(base), 9 + K - 1 if K else 0))
    coeffs[: len(base)] += base
    parts = list(_minimal_parts(rho))
    for j, p in enumerate(free_params):
        b = free_basis(j)
        coeffs[: len(b)] += p * b
        parts.append((float(p), b))
    return Trajectory(rho=float(rho), coeffs=coeffs, free_params=free_params, parts=tuple(parts))


@dataclass(frozen=True)
class Violation:
    condition: str
    residual: float


def check_boundary_conditions(traj: Trajectory, tol=BOUNDARY_TOL, samples=POSITIVITY_SAMPLES) -> List[Violation]:
    """List every end condition whose residual exceeds ``tol``.

    Positivity of ``lambda`` is a sampling check on ``samples`` points.
    """
    report = []
    targets = ((0.0, 1.0), (1.0, traj.rho))
    for tau, start in targets:
        for order in range(4):
            target = start if order == 0 else 0.0
            residual = eval(traj, tau, order) - target
            if not abs(residual) < tol:
                name = ("lambda" + "'" * order) + f"({int(tau)})"
                report.append(Violation(name, float(residual)))
    lam = eval(traj, np.linspace(0.0, 1.0, samples))
    if not np.all(lam > 0):
        report.append(Violation("lambda > 0", float(lam.min())))
    return report
