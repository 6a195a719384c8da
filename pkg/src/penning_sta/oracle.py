"""Independent check by direct propagation of the radial Schroedinger equation.

Angular momentum is conserved by every field configuration built here, so a
state ``psi(r) exp(i M theta)`` stays in its ``M`` sector and the problem is
one-dimensional.  The radial operator is discretised on the cell-centred grid
``r_j = (j + 1/2) dr`` in flux form,

    (1/r) d/dr (r dpsi/dr)  ->  [r_{j+1/2}(psi_{j+1}-psi_j) - r_{j-1/2}(psi_j-psi_{j-1})] / (r_j dr^2),

which is symmetric in the weighted inner product ``sum 2 pi r_j dr a_j* b_j``
and needs no special treatment at the origin since ``r_{-1/2} = 0``.  Time
stepping is Crank-Nicolson with the Hamiltonian sampled at step midpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import pi
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .eigenstates import EigenstateSpec, ModeIndex, invariant_eigenstate, lr_phase, radial_eigenfunction
from .errors import DomainError, NumericalError
from .fields import FieldProtocol

DEFAULT_POINTS = 4096
DEFAULT_STEPS = 20_000
DEFAULT_EXTENT = 12.0


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    n_points: int = DEFAULT_POINTS

    def __post_init__(self):
        if not self.r_max > 0:
            raise DomainError("r_max must be positive")
        if self.n_points < 256:
            raise DomainError("at least 256 radial points are required")

    @classmethod
    def for_protocol(cls, protocol: FieldProtocol, n_points=DEFAULT_POINTS, extent=DEFAULT_EXTENT):
        """Grid reaching ``extent`` times the widest ``l(t)`` of the ramp."""
        l_max = float(np.max(protocol.l(np.linspace(0.0, protocol.T, 2001))))
        return cls(extent * l_max, n_points)

    @property
    def spacing(self):
        return self.r_max / self.n_points

    @property
    def r(self):
        return (np.arange(self.n_points) + 0.5) * self.spacing

    @property
    def weights(self):
        return 2.0 * pi * self.r * self.spacing


@dataclass
class RadialState:
    grid: RadialGrid
    M: int
    amplitudes: np.ndarray
    time: float = 0.0

    def norm(self):
        return float(np.sum(self.grid.weights * np.abs(self.amplitudes) ** 2))

    def normalized(self):
        return replace(self, amplitudes=self.amplitudes / np.sqrt(self.norm()))

    def density(self):
        return np.abs(self.amplitudes) ** 2

    @classmethod
    def eigenstate(cls, grid: RadialGrid, mode: ModeIndex, l, time=0.0, normalize=True):
        amps = np.asarray(radial_eigenfunction(EigenstateSpec(mode, l), grid.r), dtype=complex)
        state = cls(grid, mode.M, amps, time)
        return state.normalized() if normalize else state

    @classmethod
    def invariant(cls, grid: RadialGrid, mode: ModeIndex, l, l_prime, time=0.0, units=None, normalize=True):
        kwargs = {} if units is None else {"units": units}
        amps = invariant_eigenstate(mode, l, l_prime, grid.r, 0.0, **kwargs)
        state = cls(grid, mode.M, np.asarray(amps, dtype=complex), time)
        return state.normalized() if normalize else state


def overlap(a: RadialState, b: RadialState) -> complex:
    """``<a|b> = int 2 pi r a* b dr`` with the grid's midpoint weights."""
    if a.grid != b.grid:
        raise DomainError("states live on different grids")
    if a.M != b.M:
        raise DomainError("states belong to different angular momentum sectors")
    return complex(np.sum(a.grid.weights * np.conj(a.amplitudes) * b.amplitudes))


@dataclass
class TridiagonalOperator:
    """Radial Hamiltonian in banded storage; apply/solve act on amplitudes ``psi``."""

    lower: np.ndarray  # H[j+1, j]
    diag: np.ndarray
    upper: np.ndarray  # H[j, j+1]

    def apply(self, psi):
        out = self.diag * psi
        out[:-1] += self.upper * psi[1:]
        out[1:] += self.lower * psi[:-1]
        return out

    def dense(self):
        return np.diag(self.diag) + np.diag(self.upper, 1) + np.diag(self.lower, -1)


def _kinetic(grid: RadialGrid, M, units):
    r, dr = grid.r, grid.spacing
    r_face = (np.arange(1, grid.n_points) * dr)  # r_{j+1/2}
    c = -units.hbar**2 / (2.0 * units.mass)
    upper = c * r_face / (r[:-1] * dr**2)
    lower = c * r_face / (r[1:] * dr**2)
    flux_out = np.zeros(grid.n_points)
    flux_out[:-1] += r_face
    flux_out[1:] += r_face
    # outermost cell sees a Dirichlet wall at r_max + dr/2
    flux_out[-1] += grid.r_max
    diag = -c * flux_out / (r * dr**2) - c * M**2 / r**2
    return lower, diag, upper


def build_hamiltonian(protocol: FieldProtocol, M, t, grid: RadialGrid, epsilon=0.0) -> TridiagonalOperator:
    """``-(hbar^2/2m)(d_rr + d_r/r - M^2/r^2) + (m/2) omega_tilde^2 r^2 - omega M hbar`` at time ``t``.

    ``epsilon`` scales ``B_z`` as in the systematic-error model.
    """
    u = protocol.units
    lower, diag, upper = _kinetic(grid, M, u)
    w = (1.0 + epsilon) * float(protocol.larmor(t))
    w2 = w**2 - protocol.params.omega_z**2 / 2.0
    diag = diag + 0.5 * u.mass * w2 * grid.r**2 - w * M * u.hbar
    return TridiagonalOperator(lower, diag, upper)


def _snap_checkpoints(times, T, n_steps):
    out = {}
    for t in times:
        if t < 0 or t > T * (1 + 1e-12):
            raise DomainError(f"checkpoint {t} outside [0, T]")
        out[int(round(t / T * n_steps))] = t
    return out


def propagate(protocol: FieldProtocol, initial: RadialState, n_steps=DEFAULT_STEPS, epsilon=0.0,
              checkpoints: Iterable[float] = ()) -> Tuple[RadialState, Dict[float, RadialState]]:
    """Crank-Nicolson evolution from ``t = 0`` to ``t = T``.

    Returns the final state and a mapping from each requested checkpoint time
    to the state at the nearest step boundary.
    """
    if n_steps < 1000:
        raise DomainError("at least 1000 time steps are required")
    if abs(initial.norm() - 1.0) > 1e-8:
        raise DomainError("initial state must be normalised")
    u = protocol.units
    grid, M = initial.grid, initial.M
    lower, kin_diag, upper = _kinetic(grid, M, u)
    dt = protocol.T / n_steps
    half = 0.5j * dt / u.hbar
    t_mid = (np.arange(n_steps) + 0.5) * dt
    w = (1.0 + epsilon) * protocol.larmor(t_mid)
    w2 = w**2 - protocol.params.omega_z**2 / 2.0
    r2 = 0.5 * u.mass * grid.r**2
    ab = np.zeros((3, grid.n_points), dtype=complex)
    ab[0, 1:] = half * upper
    ab[2, :-1] = half * lower
    off_u, off_l = -half * upper, -half * lower
    wanted = _snap_checkpoints(checkpoints, protocol.T, n_steps)
    snaps = {}
    psi = initial.amplitudes.astype(complex).copy()
    if 0 in wanted:
        snaps[wanted[0]] = RadialState(grid, M, psi.copy(), 0.0)
    for n in range(n_steps):
        d = kin_diag + w2[n] * r2 - w[n] * M * u.hbar
        ab[1] = 1.0 + half * d
        rhs = (1.0 - half * d) * psi
        rhs[:-1] += off_u * psi[1:]
        rhs[1:] += off_l * psi[:-1]
        try:
            psi = linalg.solve_banded((1, 1), ab, rhs, overwrite_b=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise NumericalError(f"tridiagonal solve failed at step {n}: {exc}") from exc
        if n + 1 in wanted:
            snaps[wanted[n + 1]] = RadialState(grid, M, psi.copy(), (n + 1) * dt)
    return RadialState(grid, M, psi, protocol.T), snaps


def target_state(protocol: FieldProtocol, mode: ModeIndex, grid: RadialGrid, t=None) -> RadialState:
    """Invariant eigenstate ``Gamma_{N,M}`` sampled at time ``t`` (default ``T``)."""
    t = protocol.T if t is None else t
    return RadialState.invariant(grid, mode, float(protocol.l(t)), float(protocol.l(t, 1)), t, protocol.units)


def lowest_eigenvalues(protocol: FieldProtocol, M, t, grid: RadialGrid, count=3, epsilon=0.0):
    """Lowest eigenvalues of the discretised Hamiltonian (symmetrised form)."""
    H = build_hamiltonian(protocol, M, t, grid, epsilon)
    # similarity transform with sqrt(r) makes the matrix symmetric
    sr = np.sqrt(grid.r)
    off = H.upper * sr[:-1] / sr[1:]
    return linalg.eigh_tridiagonal(H.diag, off, select="i", select_range=(0, count - 1), eigvals_only=True)


@dataclass
class SuperpositionReport:
    modes: List[ModeIndex]
    initial_populations: np.ndarray
    final_populations: np.ndarray
    measured_phases: np.ndarray
    predicted_phases: Dict[str, np.ndarray]
    phase_mismatch: Dict[str, np.ndarray]
    norm_drift: float

    @property
    def matching_variant(self):
        """Phase variant whose predictions agree best with the propagation."""
        return min(self.phase_mismatch, key=lambda k: float(np.max(np.abs(self.phase_mismatch[k]))))


def _wrap(phase):
    return (np.asarray(phase) + pi) % (2.0 * pi) - pi


def superposition_test(protocol: FieldProtocol, coeffs: Sequence[Tuple[ModeIndex, complex]],
                       grid: Optional[RadialGrid] = None, n_steps=DEFAULT_STEPS) -> SuperpositionReport:
    """Propagate a superposition sector by sector and project onto the final eigenstates.

    Phases are reported relative to the first listed mode and compared with
    both Lewis-Riesenfeld phase conventions.
    """
    modes = [m for m, _ in coeffs]
    c = np.array([complex(v) for _, v in coeffs])
    if abs(np.sum(np.abs(c) ** 2) - 1.0) > 1e-10:
        raise DomainError("superposition coefficients must be normalised")
    if len(set(modes)) != len(modes):
        raise DomainError("modes must be distinct")
    grid = grid or RadialGrid.for_protocol(protocol)
    l0, lT = float(protocol.l(0.0)), float(protocol.l(protocol.T))
    amps_T = np.zeros(len(modes), dtype=complex)
    drift = 0.0
    for M in sorted({m.M for m in modes}):
        idx = [i for i, m in enumerate(modes) if m.M == M]
        basis0 = [RadialState.eigenstate(grid, modes[i], l0) for i in idx]
        psi = sum(c[i] * b.amplitudes for i, b in zip(idx, basis0))
        weight = float(np.sum(np.abs(c[idx]) ** 2))
        state = RadialState(grid, M, psi)
        sector_norm = state.norm()
        final, _ = propagate(protocol, replace(state, amplitudes=psi / np.sqrt(sector_norm)), n_steps)
        final = replace(final, amplitudes=final.amplitudes * np.sqrt(sector_norm))
        drift = max(drift, abs(final.norm() - sector_norm) / weight)
        for i in idx:
            amps_T[i] = overlap(RadialState.eigenstate(grid, modes[i], lT, protocol.T), final)
    measured = np.angle(amps_T / c)
    measured = _wrap(measured - measured[0])
    predicted, mismatch = {}, {}
    for variant in ("printed", "energy"):
        phases = np.array([
            lr_phase(m, lambda s: float(protocol.larmor(s)), lambda s: float(protocol.l(s)), protocol.T,
                     protocol.units, variant)
            for m in modes
        ])
        predicted[variant] = _wrap(phases - phases[0])
        mismatch[variant] = _wrap(measured - predicted[variant])
    return SuperpositionReport(
        modes=modes,
        initial_populations=np.abs(c) ** 2,
        final_populations=np.abs(amps_T) ** 2,
        measured_phases=measured,
        predicted_phases=predicted,
        phase_mismatch=mismatch,
        norm_drift=drift,
    )


def write_profile(path, state: RadialState):
    """CSV ``r,abs2`` of one density snapshot."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# t={float(state.time)!r}; M={state.M}\n")
        fh.write("r,abs2\n")
        for r, d in zip(state.grid.r.tolist(), state.density().tolist()):
            fh.write(f"{r!r},{d!r}\n")
