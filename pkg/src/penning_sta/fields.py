"""Driving fields synthesised from an auxiliary trajectory.

The time unit is fixed by ``omega_tilde(0) = 1``, so the process lasts
``T = mu``.  Given ``l(t) = l0 lambda(t/T)``, the uniform axial field is

    B_z = sqrt(hbar^2 - 4 m^2 l^3 l'' + 2 m^2 omega_z^2 l^4) / (q l^2),

the azimuthal electric field is ``E_theta = -(r/2) B_z'`` and the radial one
stays at the static trap value ``m omega_z^2 r / (2q)``.  All samplers are
closed-form in the trajectory derivatives and broadcast over ``t``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import sqrt
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from .eigenstates import (
    NATURAL,
    EigenstateSpec,
    ModeIndex,
    Units,
    energy,
    laplacian_ratio,
    length_scale,
    radial_eigenfunction,
    radial_eigenfunction_dl,
)
from .errors import DomainError, InfeasibleProtocol, SingularityError, SpeedLimitViolation
from .specfun import laguerre
from .trajectory import Trajectory, eval as lam_eval, paper_polynomial, ratio_for_compression

VALIDATION_SAMPLES = 10_000
SPEED_LIMIT_SAMPLES = 100_000
NU_MAX = sqrt(2.0)


@dataclass(frozen=True)
class ProtocolParams:
    c: float = 10.0
    mu: float = 3.0
    nu: float = 0.1
    mode: ModeIndex = field(default_factory=ModeIndex)

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"compression ratio c must be positive, got {self.c!r}")
        if not self.mu > 0:
            raise DomainError(f"duration mu must be positive, got {self.mu!r}")
        if not 0.0 <= self.nu < NU_MAX:
            raise InfeasibleProtocol(f"nu must satisfy 0 <= nu < sqrt(2), got {self.nu!r}")
        limit = NU_MAX * min(1.0, self.final_larmor_ratio)
        if not self.nu < limit:
            raise InfeasibleProtocol(f"nu = {self.nu} leaves the final trap unconfined (need nu < {limit:.6g})")

    @property
    def rho(self):
        return ratio_for_compression(self.c)

    @property
    def omega0(self):
        """Initial Larmor frequency ``q B_z(0) / 2m`` in units of ``omega_tilde(0)``."""
        return 1.0 / sqrt(1.0 - self.nu**2 / 2.0)

    @property
    def omega_z(self):
        return self.nu * self.omega0

    @property
    def final_larmor_ratio(self):
        """``omega_T / omega_0`` which equals ``B_z(T) / B_z(0)``."""
        return sqrt(self.c**2 * (1.0 - self.nu**2 / 2.0) + self.nu**2 / 2.0)


def speed_limit(traj: Trajectory, params_or_nu, samples=SPEED_LIMIT_SAMPLES):
    """Smallest admissible ``mu`` for a trajectory.

    Returns ``(mu_min_bz, mu_min_confinement)``: the first keeps ``B_z`` real,
    the second keeps ``omega_tilde^2 > 0`` throughout.  Maxima are located on a
    dense grid and refined by bounded scalar minimisation.
    """
    nu = params_or_nu.nu if isinstance(params_or_nu, ProtocolParams) else float(params_or_nu)
    kappa = nu**2 / (2.0 - nu**2)
    tau = np.linspace(0.0, 1.0, samples)

    def g_conf(x):
        return lam_eval(traj, x) ** 3 * lam_eval(traj, x, 2)

    def g_bz(x):
        lam = lam_eval(traj, x)
        return lam**3 * lam_eval(traj, x, 2) / (1.0 + kappa * lam**4)

    out = []
    for g in (g_bz, g_conf):
        vals = g(tau)
        k = int(np.argmax(vals))
        best = vals[k]
        if best > 0:
            lo, hi = tau[max(k - 1, 0)], tau[min(k + 1, samples - 1)]
            res = optimize.minimize_scalar(lambda x: -g(x), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
            best = max(best, -res.fun)
        out.append(sqrt(best) if best > 0 else 0.0)
    return out[0], out[1]


class FieldProtocol:
    """Closed-form field samplers for one protocol.

    Construction validates the radicands of ``omega_tilde`` and ``B_z`` on a
    ``VALIDATION_SAMPLES``-point grid and raises :class:`SpeedLimitViolation`
    if either turns negative.
    """

    def __init__(self, params: ProtocolParams, traj: Optional[Trajectory] = None, units: Units = NATURAL):
        if traj is None:
            traj = paper_polynomial(params.rho)
        if not np.isclose(traj.rho, params.rho, rtol=1e-12, atol=0.0):
            raise DomainError(f"trajectory ratio {traj.rho} does not match c = {params.c} (expected {params.rho})")
        self.params = params
        self.traj = traj
        self.units = units
        self.T = params.mu  # omega_tilde(0) = 1
        self.l0 = length_scale(1.0, units)
        self._validate()

    def __repr__(self):
        p = self.params
        return f"FieldProtocol(c={p.c}, mu={p.mu}, nu={p.nu}, degree={self.traj.degree})"

    def __getstate__(self):
        return {"params": self.params, "traj": self.traj, "units": self.units}

    def __setstate__(self, state):
        self.__init__(state["params"], state["traj"], state["units"])

    @classmethod
    def design(cls, c=10.0, mu=3.0, nu=0.1, mode=None, units=NATURAL):
        return cls(ProtocolParams(c=c, mu=mu, nu=nu, mode=mode or ModeIndex()), units=units)

    def with_mode(self, mode: ModeIndex) -> "FieldProtocol":
        p = self.params
        return FieldProtocol(ProtocolParams(p.c, p.mu, p.nu, mode), self.traj, self.units)

    def _validate(self):
        tau = np.linspace(0.0, 1.0, VALIDATION_SAMPLES)
        for name, rad in (("omega_tilde^2", self._radicand_conf(tau)), ("B_z^2", self._radicand_bz(tau))):
            k = int(np.argmin(rad))
            if rad[k] < 0:
                mu_bz, mu_conf = speed_limit(self.traj, self.params.nu)
                raise SpeedLimitViolation(
                    f"{name} radicand is negative ({rad[k]:.3e}) at tau = {tau[k]:.6f}; "
                    f"need mu >= {max(mu_bz, mu_conf):.6f} (B_z bound {mu_bz:.6f}, confinement bound {mu_conf:.6f})",
                    tau=float(tau[k]),
                    radicand=float(rad[k]),
                    mu_min_bz=mu_bz,
                    mu_min_confinement=mu_conf,
                )
        lam = lam_eval(self.traj, tau)
        if np.any(lam <= 0):
            raise InfeasibleProtocol("auxiliary length must stay positive")

    # -- trajectory in physical time ---------------------------------------

    def tau(self, t):
        t = np.asarray(t, dtype=float)
        tol = 1e-12 * self.T
        if np.any(t < -tol) or np.any(t > self.T + tol):
            raise DomainError(f"time must lie in [0, T = {self.T}]")
        return np.clip(t / self.T, 0.0, 1.0)

    def lam(self, t, order=0):
        return lam_eval(self.traj, self.tau(t), order)

    def l(self, t, order=0):
        """``d^order l / dt^order``."""
        return self.l0 * self.lam(t, order) / self.T**order

    def _radicand_conf(self, tau):
        lam = lam_eval(self.traj, tau)
        return 1.0 - lam**3 * lam_eval(self.traj, tau, 2) / self.params.mu**2

    def _radicand_bz(self, tau):
        nu = self.params.nu
        lam = lam_eval(self.traj, tau)
        return self._radicand_conf(tau) + nu**2 / (2.0 - nu**2) * lam**4

    # -- samplers -----------------------------------------------------------

    def omega_tilde(self, t):
        """Effective radial frequency ``lambda^-2 sqrt(1 - lambda^3 lambda'' / mu^2)``."""
        tau = self.tau(t)
        lam = lam_eval(self.traj, tau)
        return np.sqrt(np.maximum(self._radicand_conf(tau), 0.0)) / lam**2

    def omega_tilde_sq(self, t):
        """``omega_tilde^2`` from the Ermakov relation; may be examined where the root is not taken."""
        tau = self.tau(t)
        return self._radicand_conf(tau) / lam_eval(self.traj, tau) ** 4

    def magnetic_field(self, t):
        u = self.units
        l, l2 = self.l(t), self.l(t, 2)
        rad = u.hbar**2 - 4.0 * u.mass**2 * l**3 * l2 + 2.0 * u.mass**2 * self.params.omega_z**2 * l**4
        return np.sqrt(np.maximum(rad, 0.0)) / (u.charge * l**2)

    def larmor(self, t):
        """``omega = q B_z / (2m)``."""
        return self.units.charge * self.magnetic_field(t) / (2.0 * self.units.mass)

    def magnetic_field_rate(self, t):
        """Closed-form ``dB_z/dt``."""
        u = self.units
        m2 = u.mass**2
        l, l1, l2, l3 = (self.l(t, k) for k in range(4))
        rad = u.hbar**2 - 4.0 * m2 * l**3 * l2 + 2.0 * m2 * self.params.omega_z**2 * l**4
        num = l1 * (u.hbar**2 - m2 * l**3 * l2) + m2 * l**4 * l3
        return -2.0 * num / (u.charge * l**3 * np.sqrt(np.maximum(rad, 0.0)))

    @property
    def E_r_slope(self):
        return self.units.mass * self.params.omega_z**2 / (2.0 * self.units.charge)

    def E_theta_slope(self, t):
        return -0.5 * self.magnetic_field_rate(t)

    def electric_field(self, t, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("radius must be non-negative")
        return self.E_r_slope * r, self.E_theta_slope(t) * r

    def chi_r_slope(self, t):
        """``chi_r / r = -(m/q) l'/l``."""
        return -(self.units.mass / self.units.charge) * self.l(t, 1) / self.l(t)

    def chi_r_slope_rate(self, t):
        l, l1, l2 = self.l(t), self.l(t, 1), self.l(t, 2)
        return -(self.units.mass / self.units.charge) * (l2 / l - (l1 / l) ** 2)

    def gauge_g(self):
        """``g(t) = -M hbar / q``, the choice that removes the 1/r^3 radial field."""
        return -self.params.mode.M * self.units.hbar / self.units.charge

    def chi_theta(self, t, r, g=None):
        r = np.asarray(r, dtype=float)
        g = self.gauge_g() if g is None else g
        if g != 0 and np.any(r == 0):
            raise DomainError("chi_theta is singular at r = 0 when M != 0")
        with np.errstate(divide="ignore"):
            tail = np.where(r == 0, 0.0, g / np.where(r == 0, 1.0, r))
        return 0.5 * r * self.magnetic_field(t) + tail

    def chi_vector(self, t, r, g=None):
        r = np.asarray(r, dtype=float)
        return self.chi_r_slope(t) * r, self.chi_theta(t, r, g)

    # -- amplitude ansatz and scalar potential ------------------------------

    def amplitude(self, t, r, mode: Optional[ModeIndex] = None):
        """Prescribed amplitude ``alpha(t, r) = f_{N,M,l(t)}(r)``."""
        mode = mode or self.params.mode
        return radial_eigenfunction(EigenstateSpec(mode, float(self.l(t))), r)

    def amplitude_rate(self, t, r, mode: Optional[ModeIndex] = None):
        mode = mode or self.params.mode
        return radial_eigenfunction_dl(EigenstateSpec(mode, float(self.l(t))), r) * float(self.l(t, 1))

    def scalar_potential_phi(self, t, r, mode: Optional[ModeIndex] = None, g=None, node_tol=1e-12):
        """``Phi = hbar^2 Delta(alpha) / (2 m q alpha) - (q/2m) chi^2``.

        The Laplacian ratio uses its closed form, so only genuine nodes of the
        Laguerre factor (where the ratio is 0/0) are rejected.
        """
        mode = mode or self.params.mode
        u = self.units
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise SingularityError("Phi is evaluated for r > 0 only")
        l = float(self.l(t))
        lag = laguerre(mode.N, abs(mode.M), r**2 / (2.0 * l**2))
        if np.any(np.abs(lag) < node_tol):
            raise SingularityError("Phi requested at a node of the amplitude")
        if g is None:
            g = -mode.M * u.hbar / u.charge
        chi_r, chi_th = self.chi_r_slope(t) * r, self.chi_theta(t, r, g)
        lap = laplacian_ratio(EigenstateSpec(mode, l), r)
        return u.hbar**2 / (2.0 * u.mass * u.charge) * lap - u.charge / (2.0 * u.mass) * (chi_r**2 + chi_th**2)

    def static_potential(self, r):
        """In-plane electrostatic trap potential ``-m omega_z^2 r^2 / (4q)``."""
        r = np.asarray(r, dtype=float)
        return -self.units.mass * self.params.omega_z**2 * r**2 / (4.0 * self.units.charge)

    def end_energies(self, mode: Optional[ModeIndex] = None):
        """Eigenenergies ``(E_0, E_T)`` of the mode in the initial and final trap."""
        mode = mode or self.params.mode
        return (
            energy(mode, float(self.omega_tilde(0.0)), float(self.larmor(0.0)), self.units),
            energy(mode, float(self.omega_tilde(self.T)), float(self.larmor(self.T)), self.units),
        )

    def perturbed_frequency_sq(self, t, epsilon):
        """``(q B_z (1+eps) / 2m)^2 - omega_z^2 / 2``."""
        w = (1.0 + epsilon) * self.larmor(t)
        return w**2 - self.params.omega_z**2 / 2.0

    def vector_potential(self, t, r, beta_gradient_theta=None):
        """Symmetric-gauge ``A_theta = chi_theta + (hbar/q) (1/r) d beta/d theta``.

        Documentation-level helper; with ``beta = M theta + zeta`` this is ``r B_z / 2``.
        """
        r = np.asarray(r, dtype=float)
        grad = self.params.mode.M / r if beta_gradient_theta is None else beta_gradient_theta
        return self.chi_r_slope(t) * r, self.chi_theta(t, r) + self.units.hbar / self.units.charge * grad


def chi_r_from_alpha(
    alpha_profile: Callable[[float, np.ndarray], np.ndarray],
    t,
    r,
    dalpha_dt: Optional[Callable[[float, np.ndarray], np.ndarray]] = None,
    units: Units = NATURAL,
    cutoff: Optional[float] = None,
    fd_step=1e-6,
    normalized=True,
):
    """Radial gauge field from the continuity equation by direct quadrature.

    ``chi_r = -(2m/q) / (r alpha^2) * int_r^inf s alpha dalpha/dt ds``.  When
    ``dalpha_dt`` is not given it is taken by a central difference in ``t``.
    ``alpha_profile`` must broadcast over ``r``.  The upper limit is placed
    where the integrand has fallen below 1e-16 of its peak, far inside the
    requested 1e-12 tail budget for the Gaussian-decaying amplitudes used here.
    For a ``normalized`` profile the full integral vanishes, so the tail is
    evaluated as ``-int_0^r`` whenever that side carries less weight; this
    avoids cancellation when ``r`` sits well inside the bulk.
    """
    if r <= 0:
        raise SingularityError("chi_r quadrature needs r > 0")
    if dalpha_dt is None:
        def dalpha_dt(tt, s):
            return (alpha_profile(tt + fd_step, s) - alpha_profile(tt - fd_step, s)) / (2.0 * fd_step)

    a_r = float(alpha_profile(t, r))
    if a_r == 0.0:
        raise SingularityError(f"amplitude vanishes at r = {r}")

    def integrand(s):
        return s * alpha_profile(t, s) * dalpha_dt(t, s)

    probe = r + np.geomspace(1e-3, 1e3, 600) * max(r, 1.0)
    vals = np.abs(integrand(probe))
    if not vals.max() > 0:
        return 0.0
    if cutoff is None:
        significant = np.nonzero(vals > 1e-16 * vals.max())[0]
        cutoff = probe[min(significant[-1] + 1, len(probe) - 1)]
    lo, hi, sign = r, cutoff, 1.0
    if normalized:
        inner = np.linspace(0.0, r, 201)
        outer = np.linspace(r, cutoff, 2001)
        if integrate.trapezoid(np.abs(integrand(inner)), inner) < integrate.trapezoid(np.abs(integrand(outer)), outer):
            lo, hi, sign = 0.0, r, -1.0
    breaks = list(lo + np.linspace(0.0, 1.0, 9)[1:-1] * (hi - lo))
    value, err, info = integrate.quad(integrand, lo, hi, points=breaks, epsabs=0.0, epsrel=1e-11, limit=400,
                                      full_output=1)[:3]
    if err > 1e-9 * abs(value):
        warnings.warn(f"chi_r quadrature at r = {r}: estimated error {err:.1e} on {value:.3e}", RuntimeWarning)
    value *= sign
    return -(2.0 * units.mass / units.charge) * value / (r * a_r**2)


@dataclass(frozen=True)
class BoundaryCheck:
    name: str
    residual: float


def check_fast_forward_boundaries(protocol: FieldProtocol, radii=None, tol=1e-10) -> List[BoundaryCheck]:
    """Continuity conditions at the start and end of the ramp.

    Checks ``dalpha/dt = 0``, ``chi_r = 0``, ``dchi/dt = 0``, ``dB_z/dt = 0``
    at both ends and that ``B_z`` hits its static end values.  Returns the
    failing conditions; an empty list means all hold.
    """
    radii = np.linspace(0.1, 3.0, 12) * protocol.l0 if radii is None else np.asarray(radii)
    p = protocol.params
    bad = []
    B_static = (2.0 * protocol.units.mass / protocol.units.charge) * np.array(
        [p.omega0, p.omega0 * p.final_larmor_ratio]
    )
    for label, t, B_target in (("0", 0.0, B_static[0]), ("T", protocol.T, B_static[1])):
        checks = {
            f"dalpha/dt({label})": np.max(np.abs(protocol.amplitude_rate(t, radii))),
            f"chi_r({label})": np.max(np.abs(protocol.chi_r_slope(t) * radii)),
            f"dchi_r/dt({label})": np.max(np.abs(protocol.chi_r_slope_rate(t) * radii)),
            f"dB_z/dt({label})": abs(float(protocol.magnetic_field_rate(t))),
            f"B_z({label})": abs(float(protocol.magnetic_field(t)) - B_target),
        }
        bad.extend(BoundaryCheck(k, float(v)) for k, v in checks.items() if not v < tol)
    return bad
