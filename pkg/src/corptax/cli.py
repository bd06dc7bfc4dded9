"""Command line: ``corptax {solve-ss,run,grid,check}``.

Exit codes: 0 success, 1 failed checks, 2 configuration error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config, parse_config
from .model import ModelError
from .newton import SolverError
from .output import OutputError, run_writer
from .scenarios import ScenarioError

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corptax", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_arg=True):
        if scenario_arg:
            p.add_argument("scenario", nargs="?", help="built-in scenario or experiment name")
        p.add_argument("--config", type=Path, help="YAML run configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--horizon", type=int, help="transition horizon in periods")
        p.add_argument("--tol", type=float, help="Newton residual tolerance")

    common(sub.add_parser("solve-ss", help="solve and report the pre-reform steady state"))
    common(sub.add_parser("run", help="run a reform scenario or experiment"))
    common(sub.add_parser("grid", help="write the distortion grid"), scenario_arg=False)
    sub.add_parser("check", help="run the invariant checks")
    return parser


def _config(args, default_scenario=None):
    overrides = {"out": args.out, "horizon": args.horizon}
    if args.tol is not None:
        overrides["solver"] = {"tol": args.tol}
    scenario = getattr(args, "scenario", None) or default_scenario
    if scenario is not None and (args.config is None or getattr(args, "scenario", None)):
        overrides["scenario"] = scenario
    if args.config is not None:
        return load_config(args.config, **overrides)
    return parse_config("", **overrides)


def _solve_ss(args) -> int:
    from .steady_state import solve_steady_state

    cfg = _config(args)
    s = cfg.build_scenario()
    ss = solve_steady_state(s.spec(), tol=cfg.solver.tol)
    rows = [("variable", "value")]
    rows += [(k, ss[k]) for k in ("c", "cp", "p", "k", "kp", "i", "ip", "l", "lp")]
    rows += [(k, v) for k, v in ss.aggregates().items()]
    rows += [(k, v) for k, v in ss.moments.items()]
    rows += [("ccorp_share", ss.ccorp_share), ("wedge", ss.wedge.wedge), ("lambda_ss", ss.wedge.lambda_ss)]
    for name, value in rows[1:]:
        print(f"{name:>14s}  {value:.10g}")
    if args.out:
        with run_writer(args.out) as w:
            w.rows("steady_state.csv", rows[0], rows[1:])
    return EXIT_OK


def _run(args) -> int:
    from .runner import execute

    cfg = _config(args)
    result, files = execute(cfg)
    if result is not None and hasattr(result, "multipliers"):
        m = result.multipliers
        print(f"{result.scenario.name}: multipliers GDP {m['gdp']:.3f}, investment "
              f"{m['investment']:.3f}, payout {m['payout']:.3f}")
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def _grid(args) -> int:
    from .runner import run_grid

    cfg = _config(args, default_scenario="fig10-grid")
    for f in run_grid(cfg, args.out or cfg.out):
        print(f"wrote {f}")
    return EXIT_OK


def _check(args) -> int:
    from .checks import run_checks

    failed = 0
    for name, ok, detail in run_checks():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed += not ok
    return EXIT_OK if failed == 0 else EXIT_CHECKS


COMMANDS = {"solve-ss": _solve_ss, "run": _run, "grid": _grid, "check": _check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, OutputError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ScenarioError, ModelError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
