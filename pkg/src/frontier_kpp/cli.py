"""Command-line interface.

Subcommands: simulate | lambda | ell-star | mu-star | steady | sweep |
selftest.  Exit codes: 0 success, 1 domain/config errors, 2 numerical
failures.  Config-driven commands accept dotted overrides mirroring config
keys, e.g. ``--set solver.dt=5e-4``; FRONTIER_KPP_OUT overrides the output
directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .classify import find_mu_star, run_and_classify, sweep
from .config import config_hash, load_config
from .errors import (ConfigError, FrontierKppError, InvalidBracket, NoCriticalLength,
                     NoThreshold, NumericalError)
from .fixed_domain import steady_state
from .growth import Logistic
from .kernels import kernel_from_string
from .outputs import (classification_diagnostics, emit_run_outputs, emit_sweep_outputs,
                      fmt, write_profile_csv)
from .solver import SolverConfig
from .spectral import find_ell_star, lambda_p

__all__ = ["build_parser", "run_subcommand", "main"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frontier-kpp",
        description="Nonlocal-dispersal free-boundary laboratory: simulate, "
                    "spectral thresholds, phase diagrams.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_opts(p):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a dotted config key, e.g. solver.dt=5e-4")
        p.add_argument("--out", default=None, help="output directory override")

    p_sim = sub.add_parser("simulate", help="run one free-boundary simulation")
    add_config_opts(p_sim)

    p_lam = sub.add_parser("lambda", help="principal eigenvalue on an interval")
    p_lam.add_argument("--a0", type=float, required=True)
    p_lam.add_argument("--d", type=float, default=1.0)
    p_lam.add_argument("--ell", type=float, required=True)
    p_lam.add_argument("--kernel", required=True, help="e.g. tophat:1, laplace:1:6")
    p_lam.add_argument("--n", type=int, default=512)
    p_lam.add_argument("--tol", type=float, default=1e-10)

    p_ell = sub.add_parser("ell-star", help="critical interval length")
    p_ell.add_argument("--fprime0", type=float, required=True)
    p_ell.add_argument("--d", type=float, default=1.0)
    p_ell.add_argument("--kernel", required=True)
    p_ell.add_argument("--tol", type=float, default=1e-6)

    p_mu = sub.add_parser("mu-star", help="bracket the sharp expansion threshold")
    add_config_opts(p_mu)
    p_mu.add_argument("--tol", type=float, default=0.05, help="relative bracket width")
    p_mu.add_argument("--t-end", type=float, default=None)

    p_steady = sub.add_parser("steady", help="fixed-interval steady state")
    p_steady.add_argument("--ell1", type=float, required=True)
    p_steady.add_argument("--ell2", type=float, required=True)
    p_steady.add_argument("--a", type=float, required=True, help="logistic growth a")
    p_steady.add_argument("--b", type=float, required=True, help="logistic growth b")
    p_steady.add_argument("--d", type=float, default=1.0)
    p_steady.add_argument("--kernel", required=True)
    p_steady.add_argument("--dx", type=float, default=0.05)
    p_steady.add_argument("--dt", type=float, default=0.05)
    p_steady.add_argument("--t-max", type=float, default=400.0)
    p_steady.add_argument("--out", default=None, help="write profile CSV here")

    p_sweep = sub.add_parser("sweep", help="phase diagram over a parameter grid")
    add_config_opts(p_sweep)
    p_sweep.add_argument("--rows", required=True, metavar="PARAM=V1,V2,...",
                         help="row parameter (mu, h0 or d) and values")
    p_sweep.add_argument("--cols", required=True, metavar="PARAM=V1,V2,...",
                         help="column parameter and values")

    sub.add_parser("selftest", help="run the built-in quick checks")
    return parser


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError([f"override {text!r} must look like section.key=value"])
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _outdir(args, cfg_dir: str) -> str:
    env = os.environ.get("FRONTIER_KPP_OUT")
    return args.out or env or cfg_dir


def _cmd_simulate(args) -> int:
    overrides = dict(_parse_override(s) for s in args.set)
    cfg = load_config(args.config, overrides)
    setup = cfg.setup()
    traj, cls = run_and_classify(setup, compute_ell_star=True)
    outdir = _outdir(args, cfg.output_dir)
    paths = emit_run_outputs(outdir, traj, config_doc=cfg.to_dict(),
                             config_digest=config_hash(cfg), classification=cls)
    print(json.dumps(classification_diagnostics(cls), sort_keys=True))
    for p in paths:
        print(p)
    return 0


def _cmd_lambda(args) -> int:
    kernel = kernel_from_string(args.kernel)
    res = lambda_p(args.a0, (0.0, args.ell), kernel, args.n, tol=args.tol, d=args.d)
    print(fmt(res.lambda_p))
    return 0


def _cmd_ell_star(args) -> int:
    kernel = kernel_from_string(args.kernel)
    value = find_ell_star(args.d, args.fprime0, kernel, tol=args.tol)
    print(fmt(value))
    return 0


def _cmd_mu_star(args) -> int:
    overrides = dict(_parse_override(s) for s in args.set)
    cfg = load_config(args.config, overrides)
    thresholds = find_mu_star(cfg.setup(), tol=args.tol, t_end=args.t_end)
    doc = {
        "ell_star": thresholds.ell_star,
        "mu_lower": thresholds.mu_lower,
        "mu_vanish": thresholds.mu_vanish,
        "mu_spread": thresholds.mu_spread,
        "mu_star_estimate": thresholds.mu_star_estimate,
        "rel_width": thresholds.rel_width,
        "undetermined_at_bracket": thresholds.undetermined_at_bracket,
        "note": thresholds.note,
        "probes": [list(p) for p in thresholds.probes],
    }
    print(json.dumps(doc, sort_keys=True))
    return 0


def _cmd_steady(args) -> int:
    kernel = kernel_from_string(args.kernel)
    growth = Logistic(a=args.a, b=args.b)
    cfg = SolverConfig(d=args.d, mu=1.0, dt=args.dt, t_end=args.t_max)
    run = steady_state((args.ell1, args.ell2), cfg, kernel, growth,
                       dx=args.dx, t_max=args.t_max)
    mid = run.u_final[len(run.u_final) // 2]
    print(f"steady value near center: {fmt(mid)} (residual {fmt(run.steady_residual)})")
    if args.out:
        path = os.path.join(args.out, "steady_profile.csv")
        write_profile_csv(run.nodes, run.u_final, path)
        print(path)
    return 0


def _parse_grid_arg(text: str):
    if "=" not in text:
        raise ConfigError([f"expected PARAM=V1,V2,..., got {text!r}"])
    name, raw = text.split("=", 1)
    try:
        values = [float(v) for v in raw.split(",") if v]
    except ValueError as exc:
        raise ConfigError([f"bad sweep values in {text!r}: {exc}"]) from exc
    if not values:
        raise ConfigError([f"no values given in {text!r}"])
    return name.strip(), values


def _cmd_sweep(args) -> int:
    overrides = dict(_parse_override(s) for s in args.set)
    cfg = load_config(args.config, overrides)
    row_param, row_values = _parse_grid_arg(args.rows)
    col_param, col_values = _parse_grid_arg(args.cols)
    result = sweep(cfg.setup(), row_param, row_values, col_param, col_values)
    outdir = _outdir(args, cfg.output_dir)
    paths = emit_sweep_outputs(outdir, result, config_doc=cfg.to_dict(),
                               config_digest=config_hash(cfg))
    for p in paths:
        print(p)
    return 0


def _cmd_selftest(_args) -> int:
    from .selftest import run_selftest

    failures = run_selftest()
    return 0 if failures == 0 else 2


_COMMANDS = {
    "simulate": _cmd_simulate,
    "lambda": _cmd_lambda,
    "ell-star": _cmd_ell_star,
    "mu-star": _cmd_mu_star,
    "steady": _cmd_steady,
    "sweep": _cmd_sweep,
    "selftest": _cmd_selftest,
}


def run_subcommand(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, NoCriticalLength, NoThreshold, InvalidBracket) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except FrontierKppError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_subcommand(sys.argv[1:]))
