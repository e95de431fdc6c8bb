"""Command-line interface.

    cesim run --config FILE [--out DIR] [--scenario NAME] [--nx N] [--tend T] [--restart FRAME]
    cesim verify
    cesim mms --suite NAME [--sizes 16,32,64,128]
    cesim report --series monitors.csv [--figure PNG]

Exit codes: 0 success, 1 check failure or blow-up, 2 usage error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from cesim.errors import CesimError, ConfigError

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cesim", description="Chemotaxis-Euler simulator with a priori estimate monitors.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate one configuration")
    r.add_argument("--config", type=Path, help="INI configuration file")
    r.add_argument("--out", type=Path, help="output directory (monitors.csv, report.txt, snapshots, figures)")
    r.add_argument("--scenario", help="named preset; keys in --config override it")
    r.add_argument("--nx", type=int, help="cells per axis (sets nx and ny)")
    r.add_argument("--tend", type=float, help="final time")
    r.add_argument("--restart", type=Path, help="resume from a frame written by an earlier run")
    r.add_argument("--no-figures", action="store_true", help="skip the PNG figures")

    sub.add_parser("verify", help="run the acceptance suite")

    m = sub.add_parser("mms", help="manufactured-solution convergence study")
    m.add_argument("--suite", required=True)
    m.add_argument("--sizes", default="16,32,64,128", help="comma-separated grid sizes")

    rep = sub.add_parser("report", help="re-check a saved monitors.csv")
    rep.add_argument("--series", type=Path, required=True)
    rep.add_argument("--figure", type=Path, help="also render the monitor figure to this file")
    rep.add_argument("--gronwall-tol", type=float, default=1e-3)
    return p


def _build_config(args):
    from cesim.config import load_config, scenario_config

    if args.config is None and args.scenario is None:
        raise ConfigError("run needs --config or --scenario")
    cfg = load_config(args.config, args.scenario) if args.config is not None else scenario_config(args.scenario)
    kw = {}
    if args.nx is not None:
        kw.update(nx=args.nx, ny=args.nx)
    if args.tend is not None:
        kw["T_end"] = args.tend
    if args.no_figures:
        kw["figures"] = False
    return cfg.replace(**kw) if kw else cfg


def cmd_run(args) -> int:
    from cesim.simulate import BLOWUP, COMPLETED, run

    cfg = _build_config(args)
    out = args.out or Path("cesim-out")
    result = run(cfg, out, restart=args.restart)
    print(f"status: {result.status} after {result.state.step} steps, t = {result.state.t:.6g}")
    print(result.report)
    print(f"output written to {out}")
    if result.status == COMPLETED:
        return EXIT_OK if result.report.passed else EXIT_CHECK
    if result.status == BLOWUP:
        return EXIT_CHECK
    print(f"solver failure at step {getattr(result.error, 'step', '?')}: {result.error}", file=sys.stderr)
    return EXIT_SOLVER


def cmd_verify(args) -> int:
    from cesim.acceptance import run_all

    results = run_all(print)
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} criteria passed")
    return EXIT_OK if n_pass == len(results) else EXIT_CHECK


def cmd_mms(args) -> int:
    from cesim.mms import SUITES, mms_convergence

    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        print(f"--sizes must be comma-separated integers, got {args.sizes!r}", file=sys.stderr)
        return EXIT_USAGE
    print(mms_convergence(args.suite, sizes))
    return EXIT_OK


def cmd_report(args) -> int:
    from cesim.monitors import CheckTolerances, MonitorSeries, check_run

    try:
        series = MonitorSeries.read_csv(args.series)
    except (OSError, ValueError, KeyError) as exc:
        print(f"cannot read {args.series}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = check_run(series, CheckTolerances(gronwall=args.gronwall_tol))
    print(report)
    if args.figure is not None:
        from cesim.plotting import plot_monitors

        plot_monitors(series, args.figure)
        print(f"figure written to {args.figure}")
    return EXIT_OK if report.passed else EXIT_CHECK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "mms": cmd_mms, "report": cmd_report}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CesimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
