"""Command-line front end: ``penning-sta <subcommand> [flags]``.

Exit codes: 0 success, 1 numerical failure, 2 physically infeasible request
(speed limit, nu range), 64 malformed flags.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from typing import List, Optional

import numpy as np

from . import analysis, ermakov, oracle
from .eigenstates import ModeIndex
from .errors import DomainError, InfeasibleProtocol, NumericalError, SpeedLimitViolation
from .fields import FieldProtocol, speed_limit
from .trajectory import paper_polynomial, ratio_for_compression

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_INFEASIBLE = 2
EXIT_USAGE = 64

class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_range(text):
    """``lo:hi:step`` -> inclusive arithmetic sequence; a bare number is a single value."""
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"cannot parse range {text!r}") from None
    if len(values) == 1:
        return np.array(values)
    if len(values) != 3:
        raise UsageError(f"range must be lo:hi:step, got {text!r}")
    lo, hi, step = values
    if hi < lo:
        raise UsageError(f"range {text!r} is reversed")
    if hi > lo and not step > 0:
        raise UsageError(f"range step must be positive in {text!r}")
    return analysis.arithmetic_range(lo, hi, step)


def _range_triplet(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range must be lo:hi:step, got {text!r}")
    parse_range(text)
    return tuple(float(p) for p in parts)


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse list {text!r}") from None


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _header(fh, args, **derived):
    fh.write(f"# penning-sta {args.command}\n")
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "func", "out")}
    fh.write("# " + " ".join(f"{k}={v}" for k, v in config.items()) + "\n")
    if derived:
        fh.write("# " + " ".join(f"{k}={float(v)!r}" for k, v in derived.items()) + "\n")


def _protocol(args, mode=None):
    return FieldProtocol.design(c=args.c, mu=args.mu, nu=args.nu, mode=mode)


def cmd_design(args):
    protocol = _protocol(args)
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    t = np.linspace(0.0, protocol.T, args.samples)
    cols = (
        t,
        protocol.lam(t),
        protocol.omega_tilde(t),
        protocol.magnetic_field(t),
        protocol.magnetic_field_rate(t),
        protocol.E_theta_slope(t),
    )
    with _output(args.out) as fh:
        _header(fh, args, rho=protocol.traj.rho, T=protocol.T, omega_z=protocol.params.omega_z)
        fh.write("t,lambda,omega_tilde,B_z,dBz_dt,E_theta_slope\n")
        for row in zip(*cols):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    return EXIT_OK


def cmd_speed_limit(args):
    traj = paper_polynomial(ratio_for_compression(args.c))
    mu_bz, mu_conf = speed_limit(traj, args.nu)
    print(f"c={args.c!r} nu={args.nu!r}")
    print(f"mu_min_bz={mu_bz:.6f}")
    print(f"mu_min_confinement={mu_conf:.6f}")
    return EXIT_OK


def cmd_fidelity_scan(args):
    mode = ModeIndex(args.N, args.M)
    protocol = _protocol(args, mode)
    rows = analysis.fidelity_scan(protocol, mode, _range_triplet(args.eps), steps=args.ode_steps)
    with _output(args.out) as fh:
        _header(fh, args)
        fh.write("eps,F\n")
        for row in rows:
            if row.error:
                fh.write(f"# failed eps={row.eps!r}: {row.error}\n")
            fh.write(f"{float(row.eps)!r},{float(row.F)!r}\n")
    return EXIT_OK


def cmd_sensitivity_map(args):
    mu_axis, nu_axis = parse_range(args.mu), parse_range(args.nu)
    smap = analysis.sensitivity_map(args.c, mu_axis, nu_axis, mode=ModeIndex(args.N, args.M), steps=args.ode_steps)
    with _output(args.out) as fh:
        _header(fh, args)
        fh.write("mu,nu,S\n")
        for mu, nu, s in smap.rows():
            fh.write(f"{float(mu)!r},{float(nu)!r},{'nan' if np.isnan(s) else repr(float(s))}\n")
    return EXIT_OK


def cmd_propagate(args):
    mode = ModeIndex(args.N, args.M)
    protocol = _protocol(args, mode)
    grid = oracle.RadialGrid.for_protocol(protocol, n_points=args.points, extent=args.extent)
    initial = oracle.RadialState.eigenstate(grid, mode, protocol.l0)
    dump = [f * protocol.T for f in _float_list(args.dump_times)] if args.dump_times else []
    final, snaps = oracle.propagate(protocol, initial, args.steps, epsilon=args.eps, checkpoints=dump)
    target = oracle.target_state(protocol, mode, grid)
    ov = abs(oracle.overlap(target, final))
    print(f"c={args.c!r} mu={args.mu!r} nu={args.nu!r} N={mode.N} M={mode.M} eps={args.eps!r}")
    print(f"grid_points={grid.n_points} r_max={grid.r_max!r} steps={args.steps}")
    print(f"norm={final.norm():.12f}")
    print(f"overlap={ov:.12f}")
    if args.eps != 0.0:
        F = analysis.fidelity(protocol, args.eps, mode, steps=args.ode_steps).F
        print(f"fidelity_closed_form={F:.12f}")
        print(f"difference={abs(ov - F):.3e}")
    if dump:
        prefix = args.out or "profile"
        for k, t in enumerate(sorted(snaps)):
            path = f"{prefix}_{k}.csv"
            oracle.write_profile(path, snaps[t])
            print(f"wrote {path} (t={float(snaps[t].time)!r})")
    return EXIT_OK


def cmd_optimize(args):
    result = analysis.optimize_trajectory(args.c, args.mu, args.nu, K=args.K, budget=args.budget, steps=args.ode_steps)
    print(f"S_before={float(result.S_before)!r}")
    print(f"S_after={float(result.S_after)!r}")
    print(f"evaluations={result.evaluations} converged={result.converged}")
    record = result.trajectory.to_record()
    with _output(args.out) as fh:
        fh.write(record + "\n")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="penning-sta", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, mu=True, mode=False):
        p.add_argument("--c", type=float, default=10.0, help="final/initial effective frequency ratio")
        if mu:
            p.add_argument("--mu", type=float, default=3.0, help="duration in units of 1/omega_tilde(0)")
        p.add_argument("--nu", type=float, default=0.1, help="axial/initial Larmor frequency ratio")
        if mode:
            p.add_argument("--N", type=int, default=0, help="radial quantum number")
            p.add_argument("--M", type=int, default=0, help="angular momentum quantum number")

    p = sub.add_parser("design", help="write the field protocol as CSV")
    common(p)
    p.add_argument("--samples", type=int, default=1000, help="number of time samples")
    p.add_argument("--out", default="-", help="output file, - for stdout")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("speed-limit", help="print the minimal durations")
    common(p, mu=False)
    p.set_defaults(func=cmd_speed_limit)

    p = sub.add_parser("fidelity-scan", help="fidelity versus systematic field error")
    common(p, mode=True)
    p.add_argument("--eps", default="-0.2:0.2:0.01", help="lo:hi:step")
    p.add_argument("--ode-steps", type=int, default=ermakov.DEFAULT_STEPS, help="RK4 steps for the width equation")
    p.add_argument("--out", default="-", help="output file, - for stdout")
    p.set_defaults(func=cmd_fidelity_scan)

    p = sub.add_parser("sensitivity-map", help="sensitivity on a (mu, nu) grid")
    p.add_argument("--c", type=float, default=10.0, help="final/initial effective frequency ratio")
    p.add_argument("--mu", default="1:5:0.5", help="lo:hi:step")
    p.add_argument("--nu", default="0.1:1.3:0.2", help="lo:hi:step")
    p.add_argument("--N", type=int, default=0, help="radial quantum number")
    p.add_argument("--M", type=int, default=0, help="angular momentum quantum number")
    p.add_argument("--ode-steps", type=int, default=ermakov.DEFAULT_STEPS, help="RK4 steps for the width equation")
    p.add_argument("--out", default="-", help="output file, - for stdout")
    p.set_defaults(func=cmd_sensitivity_map)

    p = sub.add_parser("propagate", help="direct Schroedinger propagation check")
    common(p, mode=True)
    p.add_argument("--eps", type=float, default=0.0, help="systematic field error")
    p.add_argument("--points", type=int, default=oracle.DEFAULT_POINTS, help="radial grid points")
    p.add_argument("--extent", type=float, default=oracle.DEFAULT_EXTENT, help="r_max in units of max l(t)")
    p.add_argument("--steps", type=int, default=oracle.DEFAULT_STEPS, help="Crank-Nicolson steps")
    p.add_argument("--ode-steps", type=int, default=ermakov.DEFAULT_STEPS, help="RK4 steps for the width equation")
    p.add_argument("--dump-times", default="", help="comma-separated fractions of T for |psi|^2 profiles")
    p.add_argument("--out", default=None, help="prefix for profile CSV files")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("optimize", help="minimise sensitivity over extra trajectory coefficients")
    common(p)
    p.add_argument("--K", type=int, default=2, help="number of free trajectory coefficients")
    p.add_argument("--budget", type=int, default=500, help="maximum objective evaluations")
    p.add_argument("--ode-steps", type=int, default=ermakov.DEFAULT_STEPS, help="RK4 steps for the width equation")
    p.add_argument("--out", default="-", help="trajectory record file")
    p.set_defaults(func=cmd_optimize)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except SpeedLimitViolation as exc:
        print(f"error: speed limit violated at tau={exc.tau:.6f}", file=sys.stderr)
        print(f"mu_min_bz={exc.mu_min_bz:.6f} mu_min_confinement={exc.mu_min_confinement:.6f}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InfeasibleProtocol as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
