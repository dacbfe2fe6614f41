"""Command-line front end.

    ncswipt validate-specfun [--tol X] [--out PATH]
    ncswipt transition-table --mod {dpsk,dpsk-approx,fsk} --gamma G --M M
    ncswipt ser-sweep (--config PATH | --preset NAME) [--snr A:B:STEP]
    ncswipt param-sweep --config PATH --axis {alpha,rho,M} --values A:B:STEP
    ncswipt reproduce-figure NAME

Results are CSV, written to ``--out`` or stdout.  Failures print a single
``ncswipt: error: <kind>: <message>`` line on stderr and exit nonzero.
"""

import argparse
import io
import math
import sys

import numpy as np

from . import presets
from .channel import ConfigError, load_config
from .detectors import EXACT_REL_TOL
from .montecarlo import DETECTORS, SimulationAborted, SweepResult, format_results, sweep
from .specfun import QuadratureError, accuracy_grid, approx2_branch
from .transition import dpsk_transition_approx, dpsk_transition_exact, fsk_transition

EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def parse_values(text):
    """``'a:b:step'`` (inclusive) or a comma-separated list of numbers."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 10) for i in range(n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad value list {text!r}") from None


def parse_detectors(text):
    dets = tuple(d.strip() for d in text.split(",") if d.strip())
    bad = [d for d in dets if d not in DETECTORS]
    if bad or not dets:
        raise argparse.ArgumentTypeError(f"detectors must be from {DETECTORS}, got {text!r}")
    return dets


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _trial_counts(detectors, args):
    return {d: min(args.trials, args.exact_trials) if d == "exact" else args.trials
            for d in detectors}


def _run_sweeps(specs, args):
    combined = SweepResult(specs[0].axis if specs else "snr_db")
    for spec in specs:
        res = sweep(spec.config, spec.axis, spec.values, spec.detectors,
                    _trial_counts(spec.detectors, args), args.seed, args.workers,
                    rel_tol=args.tol)
        combined.extend(res)
    for value, dets, msg in combined.failures:
        print(f"ncswipt: warning: point {value} ({dets}) failed: {msg}", file=sys.stderr)
    return combined


def integral_grid_csv(rel_tol):
    grid = accuracy_grid(presets.FIG2_EPS_DB, presets.FIG2_BETA_DB, rel_tol)
    buf = io.StringIO()
    buf.write("eps_db,beta_db,I_exact,I_approx2,log_I_exact,log_I_approx2,rel_err,branch\n")
    for i in range(grid["eps_db"].size):
        branch = approx2_branch(grid["eps"][i], grid["beta"][i])
        le, la = grid["log_exact"][i], grid["log_approx"][i]
        row = (grid["eps_db"][i], grid["beta_db"][i], math.exp(le), float(np.exp(la)),
               le, la, grid["rel_err"][i])
        buf.write(",".join(repr(float(v)) for v in row) + f",{branch}\n")
    return grid, buf.getvalue()


def cmd_validate_specfun(args):
    grid, text = integral_grid_csv(args.tol)
    if args.out:
        _emit(text, args.out)
    err = grid["rel_err"]
    worst = int(np.nanargmax(err))
    print(f"points={err.size} max_rel_err={err[worst]:.6g} "
          f"at eps_db={grid['eps_db'][worst]:g} beta_db={grid['beta_db'][worst]:g} "
          f"above_1e-2={int(np.count_nonzero(err > 1e-2))}")
    branches = np.array([approx2_branch(e, b) for e, b in zip(grid["eps"], grid["beta"])])
    for name in ("taylor", "bessel_minus", "bessel_plus", "boundary"):
        sel = branches == name
        if sel.any():
            print(f"branch={name} points={int(sel.sum())} max_rel_err={np.max(err[sel]):.6g}")
    return 0


def cmd_transition_table(args):
    if args.mod == "dpsk":
        table = dpsk_transition_exact(args.gamma, args.M, args.tol)
    elif args.mod == "dpsk-approx":
        table = dpsk_transition_approx(args.gamma, args.M)
    else:
        table = fsk_transition(args.gamma, args.M)
    _emit(table.to_csv(), args.out)
    return 0


def cmd_ser_sweep(args):
    if (args.config is None) == (args.preset is None):
        raise ConfigError("give exactly one of --config or --preset")
    if args.config:
        cfg = load_config(args.config)
        values = args.snr or list(presets.SNR_FIG3)
        specs = [presets.SweepSpec(cfg, "snr_db", tuple(values), args.detectors or ("approx",))]
    else:
        preset = _preset(args.preset)
        specs = [s for s in preset.sweeps if s.axis == "snr_db"]
        if not specs:
            raise ConfigError(f"preset {args.preset!r} has no SNR sweep")
        specs = [presets.SweepSpec(s.config, "snr_db", tuple(args.snr or s.values),
                                   args.detectors or s.detectors) for s in specs]
    _emit(format_results(_run_sweeps(specs, args)), args.out)
    return 0


def cmd_param_sweep(args):
    cfg = load_config(args.config)
    spec = presets.SweepSpec(cfg, args.axis, tuple(args.values), args.detectors or ("approx",))
    _emit(format_results(_run_sweeps([spec], args)), args.out)
    return 0


def _preset(name):
    try:
        return presets.PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from "
                          f"{', '.join(presets.PRESETS)}") from None


def cmd_reproduce_figure(args):
    preset = _preset(args.name)
    if preset.name == "fig2":
        _, text = integral_grid_csv(1e-12)
        _emit(text, args.out)
        return 0
    _emit(format_results(_run_sweeps(list(preset.sweeps), args)), args.out)
    return 0


def _add_mc_options(p):
    p.add_argument("--trials", type=int, default=presets.DEFAULT_TRIALS,
                   help="Monte Carlo trials per point (default %(default)s)")
    p.add_argument("--exact-trials", type=int, default=presets.EXACT_TRIALS_CAP,
                   help="cap on trials for the exact detector (default %(default)s)")
    p.add_argument("--seed", type=int, default=1, help="base seed (default %(default)s)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--tol", type=float, default=EXACT_REL_TOL,
                   help="relative tolerance of the exact integral (default %(default)g)")
    p.add_argument("--detectors", type=parse_detectors, default=None,
                   help=f"comma-separated subset of {','.join(DETECTORS)}")
    p.add_argument("--out", help="output CSV path (default stdout)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ncswipt",
        description="Noncoherent SWIPT decode-and-forward relay simulator.",
        epilog=presets.describe(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-specfun", help="accuracy of I_2 on the eps/beta grid")
    p.add_argument("--tol", type=float, default=1e-12, help="oracle tolerance (default 1e-12)")
    p.add_argument("--out", help="also write the per-point CSV here")
    p.set_defaults(func=cmd_validate_specfun)

    p = sub.add_parser("transition-table", help="print a relay transition table as CSV")
    p.add_argument("--mod", choices=("dpsk", "dpsk-approx", "fsk"), required=True)
    p.add_argument("--gamma", type=float, required=True, help="first-hop SNR (linear)")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out")
    p.set_defaults(func=cmd_transition_table)

    p = sub.add_parser("ser-sweep", help="SER versus SNR")
    p.add_argument("--config", help="scenario file (key = value lines)")
    p.add_argument("--preset", help="take the scenarios of a preset instead")
    p.add_argument("--snr", type=parse_values, help="SNR grid in dB, e.g. 0:40:2")
    _add_mc_options(p)
    p.set_defaults(func=cmd_ser_sweep)

    p = sub.add_parser("param-sweep", help="SER versus alpha, rho or M")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", choices=("alpha", "rho", "M"), required=True)
    p.add_argument("--values", type=parse_values, required=True)
    _add_mc_options(p)
    p.set_defaults(func=cmd_param_sweep)

    p = sub.add_parser("reproduce-figure", help="run a named preset")
    p.add_argument("name", help="one of: " + ", ".join(presets.PRESETS))
    _add_mc_options(p)
    p.set_defaults(func=cmd_reproduce_figure)
    return parser


def _fail(kind, exc):
    msg = " ".join(str(exc).split())
    print(f"ncswipt: error: {kind}: {msg}", file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _fail("config", exc)
        return EXIT_CONFIG
    except OSError as exc:
        _fail("io", exc)
        return EXIT_IO
    except (ValueError, QuadratureError, SimulationAborted) as exc:
        _fail("runtime", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
