"""Command-line front end.

Every command that writes data writes a CSV with a header row and a JSON
manifest next to it (``out.csv`` -> ``out.manifest.json``).  The manifest
stores the exact argument vector, so ``blochloc replay`` regenerates the CSV
byte for byte.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 numerical error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, acceptance
from .analytics import Regime, SecondMoments, first_moments, second_moments_ode
from .core import BlochVector, TimeGrid
from .dynamics import ConstantAlpha, PolynomialEvenAlpha
from .ensemble import (
    RNG_ALGORITHM,
    SEED_DERIVATION,
    EnsembleError,
    RunConfig,
    compare_to_analytic,
    run_ensemble,
)
from .integrators import DegenerateStateError, Scheme, Trajectory, integrate_path
from .observables import (
    localization_average,
    pole_occupancy,
    transition_count,
)

EXIT_OK, EXIT_USAGE, EXIT_FAILED, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- CSV / manifest ---------------------------------------------------------------

def write_csv(path, header, columns) -> None:
    """Write columns with shortest round-trip float formatting."""
    rows = np.column_stack(columns).tolist()
    lines = [",".join(header)]
    lines.extend(",".join(map(repr, row)) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> tuple[list, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".manifest.json")


def write_manifest(out, argv, command, extra, started, outputs) -> Path:
    path = manifest_path(out)
    doc = {
        "command": command,
        "argv": list(argv),
        "library_version": __version__,
        "rng": RNG_ALGORITHM,
        "seed_derivation": SEED_DERIVATION,
        "wall_clock_seconds": round(time.perf_counter() - started, 6),
        "outputs": [str(p) for p in outputs],
        **extra,
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


# -- argument handling -------------------------------------------------------------

def _model_flags(p, steps=40_000, dt=1e-2, beta=7.0):
    g = p.add_argument_group("model")
    g.add_argument("--alpha0", type=float, default=1.0, help="tunnelling amplitude (default 1)")
    g.add_argument("--beta", type=float, default=beta, help="noise strength")
    g.add_argument("--nonlinear", action="store_true",
                   help="use alpha(z) = alpha0 (1 - z^2) instead of a constant")
    g.add_argument("--dt", type=float, default=dt)
    g.add_argument("--steps", type=int, default=steps)
    g.add_argument("--x0", type=float, default=0.0)
    g.add_argument("--y0", type=float, default=1.0)
    g.add_argument("--z0", type=float, default=0.0)


def _run_flags(p):
    p.add_argument("--seed", type=int, default=0, help="base seed (64-bit unsigned)")
    p.add_argument("--scheme", choices=[s.value for s in (Scheme.EULER, Scheme.ROTATION)],
                   default=Scheme.ROTATION.value)


def _b0(args) -> BlochVector:
    b0 = BlochVector(args.x0, args.y0, args.z0)
    if abs(b0.norm() - 1) > 1e-9:
        raise UsageError(f"initial state must be on the unit sphere, |b0| = {b0.norm():.12g}")
    return b0


def _grid(args) -> TimeGrid:
    try:
        return TimeGrid(args.dt, args.steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _config(args, n_paths=1) -> RunConfig:
    model = PolynomialEvenAlpha(args.alpha0) if args.nonlinear else ConstantAlpha(args.alpha0)
    try:
        return RunConfig(model, args.beta, _b0(args), _grid(args), Scheme(args.scheme),
                         n_paths, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _simulate_trajectory(args) -> tuple[RunConfig, Trajectory]:
    cfg = _config(args)
    # path 0 of the seed, so `ensemble --n-paths 1` replays the same noise
    traj = integrate_path(cfg.b0, cfg.grid, cfg.path_noise(0), cfg.alpha, cfg.beta, cfg.scheme)
    return cfg, traj


# -- commands ----------------------------------------------------------------------

def cmd_simulate(args, argv, started):
    cfg, traj = _simulate_trajectory(args)
    out = Path(args.out)
    write_csv(out, ["t", "x", "y", "z"], [traj.times, traj.x, traj.y, traj.z])
    write_manifest(out, argv, "simulate", {"config": cfg.to_dict()}, started, [out])
    print(f"wrote {out} ({len(traj)} rows); pole occupancy {pole_occupancy(traj):.3f}")
    return EXIT_OK


class _CsvPath:
    def __init__(self, t, z):
        self.times, self.z = t, z


def cmd_localization(args, argv, started):
    extra = {}
    if args.input:
        header, data = read_csv(args.input)
        if header[:1] != ["t"] or "z" not in header:
            raise UsageError(f"{args.input} is not a trajectory CSV (t,x,y,z)")
        path = _CsvPath(data[:, 0], data[:, header.index("z")])
        extra["input"] = str(args.input)
    else:
        cfg, path = _simulate_trajectory(args)
        extra["config"] = cfg.to_dict()
    series = localization_average(path)
    out = Path(args.out)
    write_csv(out, ["t", "L"], [series.times, series.values])
    write_manifest(out, argv, "localization", extra, started, [out])
    print(f"L(t_max) = {series.values[-1]:.4f}; occupancy(|z|>0.9) = "
          f"{pole_occupancy(path):.3f}; pole-to-pole transitions = {transition_count(path)}")
    return EXIT_OK


MOMENT_HEADER = ["t", "mx", "my", "mz", "xx", "yy", "zz", "yz"]


def cmd_ensemble(args, argv, started):
    if args.compare and args.nonlinear:
        raise UsageError("--compare needs the constant-alpha model (no analytic reference "
                         "for --nonlinear)")
    if args.n_paths < 1:
        raise UsageError("--n-paths must be >= 1")
    cfg = _config(args, args.n_paths)
    stats = run_ensemble(cfg, workers=args.workers)
    header = list(MOMENT_HEADER)
    columns = list(stats.table().T)
    status = EXIT_OK
    extra = {"config": cfg.to_dict()}
    if args.compare:
        report = compare_to_analytic(stats, args.alpha0, args.beta, cfg.b0)
        ref1, ref2 = report.reference_first, report.reference_second
        header += ["ref_mx", "ref_my", "ref_mz", "ref_xx", "ref_yy", "ref_zz", "ref_yz",
                   "err_mx", "err_my", "err_mz", "err_xx", "err_yy", "err_zz", "err_yz"]
        columns += [ref1.mean_x, ref1.mean_y, ref1.mean_z, ref2.xx, ref2.yy, ref2.zz, ref2.yz]
        columns += list(report.mean_error.T) + list(report.second_error.T)
        passed = report.max_mean_error <= args.tol
        extra["comparison"] = {"regime": report.regime.value, "tol": args.tol,
                               "max_mean_error": report.max_mean_error,
                               "max_second_error": report.max_second_error, "passed": passed}
        print(f"regime {report.regime.value}: max |mean error| = {report.max_mean_error:.4g} "
              f"(tol {args.tol}) -> {'PASS' if passed else 'FAIL'}")
        if not passed:
            status = EXIT_FAILED
    out = Path(args.out)
    write_csv(out, header, columns)
    write_manifest(out, argv, "ensemble", extra, started, [out])
    print(f"t={stats.times[-1]:g}: <x>={stats.mean_x[-1]:.4f} <y>={stats.mean_y[-1]:.4f} "
          f"<z>={stats.mean_z[-1]:.4f} <x2>={stats.xx[-1]:.4f} <y2>={stats.yy[-1]:.4f} "
          f"<z2>={stats.zz[-1]:.4f} <yz>={stats.yz[-1]:.4f} (n={stats.n})")
    return status


def cmd_moments(args, argv, started):
    if args.nonlinear:
        raise UsageError("moments are only known in closed form for constant alpha")
    if args.alpha0 == 0 and args.beta == 0:
        raise UsageError("alpha0 = beta = 0 has no regime")
    b0, grid = _b0(args), _grid(args)
    first, regime = first_moments(grid, b0, args.alpha0, args.beta)
    if regime is Regime.CRITICAL:
        print("notice: beta^2 = 2|alpha| (critical); first moments from RK4 integration",
              file=sys.stderr)
    second = second_moments_ode(grid, SecondMoments.of_pure_state(b0), args.alpha0, args.beta)
    out = Path(args.out)
    t = grid.times
    write_csv(out, MOMENT_HEADER, [t, first.mean_x, first.mean_y, first.mean_z,
                                   second.xx, second.yy, second.zz, second.yz])
    params = {"alpha0": args.alpha0, "beta": args.beta, "b0": list(b0),
              "grid": {"t0": grid.t0, "dt": grid.dt, "n_steps": grid.n_steps}}
    write_manifest(out, argv, "moments", {"parameters": params, "regime": regime.value},
                   started, [out])
    print(f"regime: {regime.value}")
    return EXIT_OK


def cmd_validate(args, argv, started):
    print(f"blochloc {__version__} acceptance ({'quick' if args.quick else 'full'})")
    results = acceptance.run_all(quick=args.quick)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed "
          f"in {time.perf_counter() - started:.1f}s")
    return EXIT_OK if n_pass == len(results) else EXIT_FAILED


def cmd_replay(args, argv, started):
    doc = json.loads(Path(args.manifest).read_text())
    replay_argv = list(doc["argv"])
    if args.out:
        i = replay_argv.index("--out")
        replay_argv[i + 1] = args.out
    return main(replay_argv)


COMMANDS = {
    "simulate": cmd_simulate,
    "localization": cmd_localization,
    "ensemble": cmd_ensemble,
    "moments": cmd_moments,
    "validate": cmd_validate,
    "replay": cmd_replay,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blochloc", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="integrate one noise realization, write t,x,y,z")
    _model_flags(p)
    _run_flags(p)
    p.add_argument("--out", default="trajectory.csv")

    p = sub.add_parser("localization", help="running time average L(t) of z^2")
    _model_flags(p)
    _run_flags(p)
    p.add_argument("--input", help="trajectory CSV from `simulate` (otherwise simulate now)")
    p.add_argument("--out", default="localization.csv")

    p = sub.add_parser("ensemble", help="moments over many noise realizations")
    _model_flags(p, steps=5_000, dt=1e-3, beta=0.7)
    _run_flags(p)
    p.add_argument("--n-paths", type=int, default=1_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--compare", action="store_true",
                   help="add analytic reference and error columns; fail if max error > --tol")
    p.add_argument("--tol", type=float, default=0.02)
    p.add_argument("--out", default="ensemble.csv")

    p = sub.add_parser("moments", help="analytic first/second moment curves (constant alpha)")
    _model_flags(p, steps=5_000, dt=1e-3, beta=0.7)
    p.add_argument("--out", default="moments.csv")

    p = sub.add_parser("validate", help="run the acceptance criteria")
    p.add_argument("--quick", action="store_true", help="reduced ensembles")

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="write to this path instead of the recorded one")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        return COMMANDS[args.command](args, argv, started)
    except UsageError as exc:
        print(f"blochloc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DegenerateStateError, EnsembleError) as exc:
        print(f"blochloc {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FileNotFoundError as exc:
        print(f"blochloc {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
