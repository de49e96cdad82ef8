"""Command-line entry point.

Exit codes: 0 ok, 2 usage or invalid parameters, 3 solver failure,
4 integration failure. ``SPINQSD_THREADS`` overrides ``--threads``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import Blowup, IntegrationError, MemoryBudgetExceeded, SolverError
from .io import format_value, read_manifest, write_csv, write_manifest

log = logging.getLogger("spinqsd")

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_INTEGRATION = 0, 2, 3, 4

# arguments that do not affect results and are left out of the manifest
_NON_CONFIG = {"output_dir", "threads", "func", "verbose"}


class UsageError(Exception):
    pass


def _parse_j(text):
    from .spin import SpinQuantum

    try:
        spin = SpinQuantum.from_j(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if spin.two_j < 1:
        raise argparse.ArgumentTypeError("j must be at least 1/2")
    return text


def _nonneg(text):
    x = float(text)
    if not x >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return x


def _positive(text):
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return x


def _complex(text):
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text}") from None


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}


def _emit(columns, rows, args, name, results=None):
    if args.output_dir:
        path = write_csv(Path(args.output_dir) / name, columns, rows)
        write_manifest(args.output_dir, _config(args), [path], results)
        print(path)
    else:
        print(",".join(columns))
        for row in rows:
            print(",".join(format_value(row.get(c)) for c in columns))


def cmd_steady(args):
    from .experiments import steady_point
    from .params import ModelParams

    params = ModelParams.from_lambda(args.j, args.lam, args.kappa, args.omega_z)
    res = steady_point(params, gap=True)
    row = {"j": params.j.j, "lambda": args.lam, "omega_z": args.omega_z, **res}
    cols = ["j", "lambda", "omega_z", "mean_jz_over_j", "var_jz_over_j2", "purity", "spectral_gap"]
    if args.observable != "all":
        key = {"mean_jz": "mean_jz_over_j", "var_jz": "var_jz_over_j2"}[args.observable]
        cols = ["j", "lambda", "omega_z", key, "purity", "spectral_gap"]
    _emit(cols, [row], args, "steady.csv")


def _start_label(args, params):
    from . import analytic

    start = args.start
    if start in ("mu_plus", "mu_minus"):
        fp = analytic.fixed_points(params)
        return fp.mu_plus if start == "mu_plus" else fp.mu_minus
    if start == "north":
        return 0j
    if start == "south":
        return complex("inf")
    return _complex(start)


def cmd_traj(args):
    import numpy as np

    from .params import ModelParams
    from .qsd import simulate_ensemble

    params = ModelParams.from_lambda(args.j, args.lam, args.kappa, args.omega_z)
    try:
        start = _start_label(args, params)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc)) from None
    times = np.linspace(0.0, args.t_final, args.samples)
    try:
        res = simulate_ensemble(params, args.n_traj, args.t_final, dt=args.dt, sample_times=times,
                                initial=start, base_seed=args.seed, threads=args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    n = res.bloch()
    rows = [
        {"traj_id": i, "t": res.times[k], "nx": n[k, i, 0], "ny": n[k, i, 1], "nz": n[k, i, 2],
         "chart": "south" if res.south[k, i] else "north", "z_re": res.z[k, i].real, "z_im": res.z[k, i].imag}
        for i in range(res.n_traj) for k in range(len(res.times))
    ]
    cols = ["traj_id", "t", "nx", "ny", "nz", "chart", "z_re", "z_im"]
    _emit(cols, rows, args, "traj.csv")


def cmd_flow(args):
    from .experiments import flow_portrait
    from .params import ModelParams

    params = ModelParams.from_lambda(args.j, args.lam, args.kappa)
    portrait = flow_portrait(params, n_init=args.n_init, t_final=args.t_final, n_samples=args.samples)
    _emit(["lambda", "track_id", "t", "nx", "ny", "nz"], list(portrait.rows()), args, "flow.csv")


def cmd_scaling(args):
    from .experiments import finite_size_scaling

    fit = finite_size_scaling(args.j_exact, args.j_qsd, lam=args.lam, n_traj=args.n_traj, seed=args.seed,
                              threads=args.threads)
    results = {"slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared}
    _emit(["j", "mean_jz_over_j", "method", "stderr"], fit.table, args, "fig5.csv", results)
    print(f"slope={fit.slope:.6f} r_squared={fit.r_squared:.6f}", file=sys.stderr)


def cmd_figure(args):
    from .figures import FIG_COLUMNS, FIGURES

    out_dir = Path(args.output_dir or ".")
    name = f"fig{args.which}.csv"
    try:
        rows, results = FIGURES[args.which](args.budget, seed=args.seed, threads=args.threads)
    except (SolverError, IntegrationError) as exc:
        # flush a failure marker so partial runs are visible
        path = write_csv(out_dir / name, FIG_COLUMNS[args.which] + ["failure"], [{"failure": str(exc)}])
        write_manifest(out_dir, _config(args), [path], {"failure": str(exc)})
        raise
    path = write_csv(out_dir / name, FIG_COLUMNS[args.which], rows)
    write_manifest(out_dir, _config(args), [path], results)
    print(path)


def cmd_replay(args):
    manifest = read_manifest(args.manifest)
    config = dict(manifest["config"])
    argv = _argv_from_config(config)
    if args.output_dir:
        argv += ["--output-dir", str(args.output_dir)]
    return main(argv)


def _argv_from_config(config: dict) -> list[str]:
    config = dict(config)
    argv = [config.pop("command")]
    for key, value in config.items():
        flag = "--" + {"lam": "lambda"}.get(key, key).replace("_", "-")
        if value is None:
            continue
        if isinstance(value, list):
            argv += [flag, *map(str, value)]
        else:
            argv += [flag, str(value)]
    return argv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinqsd", description="Driven-dissipative collective spin toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, stochastic=False):
        p.add_argument("--output-dir", type=Path, default=None)
        p.add_argument("--threads", default="1", help="worker threads or 'auto'")
        p.add_argument("-v", "--verbose", action="store_true")
        if stochastic:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("steady", help="exact steady state of the master equation")
    p.add_argument("--j", type=_parse_j, required=True)
    p.add_argument("--lambda", dest="lam", type=_nonneg, required=True)
    p.add_argument("--kappa", type=_positive, default=1.0)
    p.add_argument("--omega-z", type=float, default=0.0)
    p.add_argument("--observable", choices=["all", "mean_jz", "var_jz"], default="all")
    common(p)
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("traj", help="quantum state diffusion ensemble")
    p.add_argument("--j", type=_parse_j, required=True)
    p.add_argument("--lambda", dest="lam", type=_nonneg, required=True)
    p.add_argument("--kappa", type=_positive, default=1.0)
    p.add_argument("--omega-z", type=float, default=0.0)
    p.add_argument("--n-traj", type=int, default=1)
    p.add_argument("--t-final", type=_positive, default=10.0)
    p.add_argument("--dt", type=_positive, default=None)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--start", default="mu_plus", help="mu_plus, mu_minus, north, south or a complex label")
    common(p, stochastic=True)
    p.set_defaults(func=cmd_traj)

    p = sub.add_parser("flow", help="noiseless flow from equator starting points")
    p.add_argument("--lambda", dest="lam", type=_positive, required=True)
    p.add_argument("--j", type=_parse_j, default=None, help="finite j sets kappa_tilde; default is j -> inf")
    p.add_argument("--kappa", type=_positive, default=1.0)
    p.add_argument("--n-init", type=int, default=8)
    p.add_argument("--t-final", type=_positive, default=None)
    p.add_argument("--samples", type=int, default=400)
    common(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("scaling", help="finite-size scaling of <Jz>/j")
    p.add_argument("--lambda", dest="lam", type=_positive, default=1.0)
    p.add_argument("--j-exact", nargs="+", type=_parse_j, default=["8", "16", "32", "64", "128", "256"])
    p.add_argument("--j-qsd", nargs="*", type=_parse_j, default=["64", "128", "512", "1024"])
    p.add_argument("--n-traj", type=int, default=1000)
    common(p, stochastic=True)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("figure", help="regenerate the data behind one figure")
    p.add_argument("--which", choices=["1", "2", "3", "4a", "4b", "5"], required=True)
    p.add_argument("--budget", choices=["quick", "full"], default="quick")
    common(p, stochastic=True)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--output-dir", type=Path, default=None)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        result = args.func(args)
    except (UsageError, MemoryBudgetExceeded, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except Blowup as exc:
        print(f"integration failure: trajectory {exc.trajectory} at t={exc.time}: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except IntegrationError as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    return EXIT_OK if result is None else result


if __name__ == "__main__":
    sys.exit(main())
