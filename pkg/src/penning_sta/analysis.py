"""Fidelity, sensitivity to systematic field errors, sweeps and trajectory optimisation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import partial
from math import sqrt
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from . import ermakov
from ._parallel import parallel_map
from .eigenstates import NATURAL, ModeIndex, Units
from .errors import DomainError, InfeasibleProtocol, NumericalError
from .fields import FieldProtocol, ProtocolParams, speed_limit
from .specfun import jacobi, jacobi_derivative
from .trajectory import (
    Trajectory,
    check_boundary_conditions,
    paper_polynomial,
    ratio_for_compression,
    with_free_params,
)

log = logging.getLogger(__name__)

DEFAULT_FD_STEP = 1e-3
FREE_PARAM_BOUND = 10.0
PENALTY = 1e6


@dataclass(frozen=True)
class FidelityResult:
    Q: float
    F: float
    mode: ModeIndex = field(default_factory=ModeIndex)


class Sensitivity(NamedTuple):
    value: float
    error: float


@dataclass
class SensitivityMap:
    mu_axis: np.ndarray
    nu_axis: np.ndarray
    S: np.ndarray
    c: float

    def rows(self):
        for i, mu in enumerate(self.mu_axis):
            for j, nu in enumerate(self.nu_axis):
                yield float(mu), float(nu), float(self.S[i, j])


def fidelity_q(l_T, ell_T, ell_prime_T, units: Units = NATURAL, coefficient="printed"):
    """Ground-state overlap modulus between target width ``l_T`` and achieved ``(ell, ell')``.

    ``coefficient="printed"`` weights the chirp term with ``4m/hbar^2``;
    ``"dimensional"`` uses ``4m^2/hbar^2``, the form a Gaussian overlap gives.
    The two agree in natural units.
    """
    if not (l_T > 0 and ell_T > 0):
        raise DomainError("widths must be positive")
    if coefficient == "printed":
        k = 4.0 * units.mass / units.hbar**2
    elif coefficient == "dimensional":
        k = 4.0 * units.mass**2 / units.hbar**2
    else:
        raise ValueError(f"unknown coefficient convention {coefficient!r}")
    a2, b2 = l_T**2, ell_T**2
    return 2.0 * l_T * ell_T / sqrt((a2 + b2) ** 2 + k * a2**2 * b2 * ell_prime_T**2)


def fidelity_nm(Q, mode: ModeIndex):
    """``Q^(1+|M|) |P_N^(|M|,0)(1 - 2Q^2)|``."""
    if Q > 1.0 and Q - 1.0 < 1e-12:
        Q = 1.0
    if not 0.0 < Q <= 1.0:
        raise DomainError(f"overlap parameter Q must lie in (0, 1], got {Q!r}")
    a = abs(mode.M)
    return Q ** (1 + a) * abs(jacobi(mode.N, a, 0, 1.0 - 2.0 * Q * Q))


def sensitivity_factor(mode: ModeIndex):
    """``dF_{N,M}/dQ`` at ``Q = 1``.

    ``P_N^(|M|,0)(-1) = (-1)^N`` never vanishes, so ``|.|`` is smooth there and
    the chain rule gives ``(1+|M|) - 4 (-1)^N P'(-1)``.
    """
    a = abs(mode.M)
    p = jacobi(mode.N, a, 0, -1.0)
    dp = jacobi_derivative(mode.N, a, 0, -1.0)
    return (1 + a) * abs(p) + np.sign(p) * dp * (-4.0)


def fidelity(protocol: FieldProtocol, epsilon, mode: Optional[ModeIndex] = None, steps=ermakov.DEFAULT_STEPS):
    """Final fidelity under a relative field error via the Ermakov route."""
    mode = mode or protocol.params.mode
    ell, ellp = ermakov.terminal_state(protocol, epsilon, steps)
    Q = fidelity_q(float(protocol.l(protocol.T)), ell, ellp, protocol.units)
    return FidelityResult(Q=Q, F=fidelity_nm(Q, mode), mode=mode)


def _fidelity_curve(protocol, mode, eps, steps):
    return np.array([fidelity(protocol, e, mode, steps).F for e in eps])


def sensitivity(protocol: FieldProtocol, mode: Optional[ModeIndex] = None, fd_step=DEFAULT_FD_STEP,
                steps=ermakov.DEFAULT_STEPS) -> Sensitivity:
    """``S = -d^2F/d eps^2`` at ``eps = 0`` by central differences.

    Second differences at ``h`` and ``2h`` are Richardson-combined; the error
    estimate is a third of their gap.
    """
    if not 1e-4 <= fd_step <= 1e-2:
        raise DomainError("fd_step must lie in [1e-4, 1e-2]")
    mode = mode or protocol.params.mode
    h = fd_step
    f_m2, f_m1, f_0, f_p1, f_p2 = _fidelity_curve(protocol, mode, (-2 * h, -h, 0.0, h, 2 * h), steps)
    s_h = -(f_p1 - 2.0 * f_0 + f_m1) / h**2
    s_2h = -(f_p2 - 2.0 * f_0 + f_m2) / (4.0 * h**2)
    return Sensitivity((4.0 * s_h - s_2h) / 3.0, abs(s_h - s_2h) / 3.0)


def arithmetic_range(lo, hi, step):
    """Inclusive ``lo, lo+step, ..., hi``; ``lo == hi`` yields a single value."""
    if hi < lo:
        raise ValueError(f"range upper bound {hi} is below lower bound {lo}")
    if lo == hi:
        return np.array([float(lo)])
    if not step > 0:
        raise ValueError("range step must be positive")
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    # trim representation noise so that e.g. 0.05 prints as 0.05
    return np.round(lo + step * np.arange(n), 12)


@dataclass(frozen=True)
class ScanRow:
    eps: float
    F: float
    error: Optional[str] = None


def _scan_point(protocol, mode, steps, eps):
    try:
        return ScanRow(float(eps), fidelity(protocol, eps, mode, steps).F)
    except (NumericalError, DomainError) as exc:
        return ScanRow(float(eps), float("nan"), str(exc))


def fidelity_scan(protocol: FieldProtocol, mode: Optional[ModeIndex] = None, eps_range=(-0.2, 0.2, 0.01),
                  steps=ermakov.DEFAULT_STEPS) -> List[ScanRow]:
    """One Ermakov solve per error value; failing rows are kept with ``F = nan``."""
    lo, hi, step = eps_range
    eps = arithmetic_range(lo, hi, step)
    if np.any(np.abs(eps) > ermakov.MAX_ABS_EPSILON):
        raise DomainError(f"scan must stay within |eps| <= {ermakov.MAX_ABS_EPSILON}")
    mode = mode or protocol.params.mode
    return parallel_map(partial(_scan_point, protocol, mode, steps), list(eps))


def _map_cell(c, traj, mode, fd_step, steps, cell):
    mu, nu = cell
    try:
        protocol = FieldProtocol(ProtocolParams(c=c, mu=mu, nu=nu, mode=mode), traj)
        return sensitivity(protocol, mode, fd_step, steps).value
    except (InfeasibleProtocol, NumericalError):
        return float("nan")


def sensitivity_map(c, mu_axis, nu_axis, traj: Optional[Trajectory] = None, mode: Optional[ModeIndex] = None,
                    fd_step=DEFAULT_FD_STEP, steps=ermakov.DEFAULT_STEPS) -> SensitivityMap:
    """``S`` on the (mu, nu) grid; infeasible cells hold ``nan``."""
    traj = traj or paper_polynomial(ratio_for_compression(c))
    mode = mode or ModeIndex()
    mu_axis = np.atleast_1d(np.asarray(mu_axis, dtype=float))
    nu_axis = np.atleast_1d(np.asarray(nu_axis, dtype=float))
    cells = [(mu, nu) for mu in mu_axis for nu in nu_axis]
    values = parallel_map(partial(_map_cell, c, traj, mode, fd_step, steps), cells)
    return SensitivityMap(mu_axis, nu_axis, np.array(values).reshape(len(mu_axis), len(nu_axis)), float(c))


@dataclass
class OptimizationResult:
    trajectory: Trajectory
    S_before: float
    S_after: float
    converged: bool
    evaluations: int
    history: List[Tuple[np.ndarray, float]] = field(default_factory=list, repr=False)


def _candidate_score(c, mu, nu, rho, steps, fd_step, x):
    """Sensitivity of a candidate, or a penalty above ``PENALTY`` if it is not admissible."""
    traj = with_free_params(rho, x)
    bad = check_boundary_conditions(traj)
    if bad:
        worst = max(abs(v.residual) for v in bad)
        return PENALTY * (1.0 + worst), None
    try:
        protocol = FieldProtocol(ProtocolParams(c=c, mu=mu, nu=nu), traj)
        return sensitivity(protocol, ModeIndex(), fd_step, steps).value, traj
    except InfeasibleProtocol as exc:
        shortfall = max(getattr(exc, "mu_min_confinement", None) or 0.0, getattr(exc, "mu_min_bz", None) or 0.0) - mu
        return PENALTY * (1.0 + max(shortfall, 0.0)), None
    except NumericalError:
        return PENALTY, None


def optimize_trajectory(c=10.0, mu=3.0, nu=1.0, K=2, budget=500, steps=ermakov.DEFAULT_STEPS,
                        fd_step=DEFAULT_FD_STEP, initial_step=1.0, xatol=1e-4, fatol=1e-8) -> OptimizationResult:
    """Minimise the ground-state sensitivity over ``K`` free shape coefficients.

    Bounded Nelder-Mead (box ``|p_j| <= FREE_PARAM_BOUND``) started from the
    minimal polynomial with a fixed axis-aligned simplex.  Inadmissible
    candidates (boundary residuals, non-positive length, speed-limit
    violation) score above ``PENALTY`` and can never become the incumbent.
    The best evaluated point is returned, so ``S_after <= S_before``.
    """
    if not 0 <= K <= 8:
        raise DomainError("K must lie in 0..8")
    rho = ratio_for_compression(c)
    start = paper_polynomial(rho)
    mu_bz, mu_conf = speed_limit(start, nu)
    if mu < max(mu_bz, mu_conf):
        raise InfeasibleProtocol(f"mu = {mu} is below the speed limit {max(mu_bz, mu_conf):.6f} of the initial trajectory")
    score = partial(_candidate_score, c, mu, nu, rho, steps, fd_step)
    S_before, _ = score(np.zeros(K))
    state = {"best": (S_before, start), "n": 1}
    history = [(np.zeros(K), S_before)]
    if K == 0:
        return OptimizationResult(start, S_before, S_before, True, 1, history)

    def objective(x):
        if state["n"] >= budget:
            raise _BudgetExhausted
        val, traj = score(x)
        state["n"] += 1
        history.append((np.array(x, dtype=float), val))
        if traj is not None and val < state["best"][0]:
            state["best"] = (val, traj)
        return val

    simplex = np.vstack([np.zeros(K), initial_step * np.eye(K)])
    converged = False
    try:
        res = optimize.minimize(
            objective,
            np.zeros(K),
            method="Nelder-Mead",
            bounds=[(-FREE_PARAM_BOUND, FREE_PARAM_BOUND)] * K,
            options={"initial_simplex": simplex, "maxfev": budget, "xatol": xatol, "fatol": fatol},
        )
        converged = bool(res.success)
    except _BudgetExhausted:
        pass
    S_after, best = state["best"]
    log.info("optimizer finished after %d evaluations, S %.6g -> %.6g", state["n"], S_before, S_after)
    return OptimizationResult(best, S_before, S_after, converged, state["n"], history)


class _BudgetExhausted(Exception):
    pass
