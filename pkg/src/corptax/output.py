"""CSV and manifest emission.

Files written per run directory:

``path.csv``            one row per period: ``period``, the state variables of
                        :data:`corptax.model.VARS`, the derived flows of
                        :data:`corptax.transition.PATH_FLOWS`, then
                        ``gdp_const``/``investment_const`` (pre-reform prices).
``summary.csv``         ``case, variable, long_run_change, multiplier,
                        long_run_change_current, multiplier_current, impact_change``
``manifest.json``       echoed configuration, resolved policies, tolerances and
                        solver statistics.
``distortion_grid.csv`` ``tau, lambda, distortion`` (when requested).

Experiments with several cases write ``path_<case>.csv`` instead of ``path.csv``.
"""
from __future__ import annotations

import csv
import json
import os
from contextlib import contextmanager
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .scenarios import LEVELS, ReformResult
from .taxcode import DistortionGrid

PATH_EXTRA = ("gdp_const", "investment_const")
SUMMARY_COLUMNS = ("case", "variable", "long_run_change", "multiplier", "long_run_change_current",
                   "multiplier_current", "impact_change")


class OutputError(OSError):
    pass


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


class RunWriter:
    """Collects files under temporary names and renames them all on commit."""

    def __init__(self, out_dir):
        self.out = Path(out_dir)
        self.pending: list[tuple[Path, Path]] = []
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OutputError(f"cannot create output directory {self.out}: {exc}") from exc
        if not os.access(self.out, os.W_OK):
            raise OutputError(f"output directory {self.out} is not writable")

    def _tmp(self, name) -> Path:
        final = self.out / name
        tmp = self.out / f".{name}.partial"
        self.pending.append((tmp, final))
        return tmp

    def csv(self, name, columns: dict):
        keys = list(columns)
        n = len(next(iter(columns.values()))) if columns else 0
        with open(self._tmp(name), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(keys)
            for r in range(n):
                w.writerow([fmt(columns[k][r]) for k in keys])

    def rows(self, name, header, rows):
        with open(self._tmp(name), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])

    def json(self, name, data):
        with open(self._tmp(name), "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")

    def commit(self) -> list[Path]:
        for tmp, final in self.pending:
            os.replace(tmp, final)
        done = [final for _, final in self.pending]
        self.pending = []
        return done

    def abort(self):
        for tmp, _ in self.pending:
            try:
                tmp.unlink()
            except FileNotFoundError:
                pass
        self.pending = []


@contextmanager
def run_writer(out_dir):
    w = RunWriter(out_dir)
    try:
        yield w
    except BaseException:
        w.abort()
        raise
    w.commit()


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def path_columns(result: ReformResult) -> dict:
    cols = result.reform.table()
    const = result.reform.aggregates(p_fixed=result.pre["p"])
    cols["gdp_const"] = const["gdp"]
    cols["investment_const"] = const["investment"]
    return cols


def summary_rows(case: str, result: ReformResult):
    for name in LEVELS:
        yield (case, name, result.long_run[name], result.multipliers[name],
               result.long_run_current[name], result.multipliers_current[name], result.impact[name])


def policy_record(policy) -> dict:
    return {"tau_corp": policy.tau_corp, "rate_dbal": policy.rate_dbal,
            "tau_indiv": policy.tau_indiv, "theta_waste": policy.theta_waste}


def result_record(result: ReformResult) -> dict:
    s = result.scenario
    spec = asdict(s.spec())
    spec.pop("policy")
    return {
        "scenario": s.name,
        "variant": s.variant,
        "pre_policy": policy_record(s.pre_policy),
        "post_policy": policy_record(s.post_policy),
        "new_investment_only": s.new_investment_only,
        "model": spec,
        "horizon": s.horizon,
        "cumulative_horizon": s.cumulative_horizon,
        "solver": {
            "pre_steady_state": {"iterations": result.pre.iterations, "residual": result.pre.residual},
            "post_steady_state": {"iterations": result.post.iterations, "residual": result.post.residual},
            "transition": {"iterations": result.reform.iterations, "residual": result.reform.residual},
        },
        "pre_moments": result.pre.moments,
        "revenue_loss": result.revenue_loss,
        "headline_multipliers": {k: result.multipliers[k] for k in ("gdp", "investment", "payout")},
        "price_convention": "pre-reform relative price (current-price columns reported as *_current)",
    }


def manifest(config, records: dict, extra: dict | None = None) -> dict:
    out = {
        "package_version": __version__,
        "config": config.echo() if config is not None else None,
        "tolerances": {
            "newton_residual": config.solver.tol if config is not None else None,
            "terminal_gap": 1e-7,
        },
        "runs": records,
    }
    if extra:
        out.update(extra)
    return out


def emit_results(result: ReformResult, config, out_dir=None) -> list[Path]:
    """Write path, summary and manifest for one scenario."""
    out_dir = out_dir or config.out
    with run_writer(out_dir) as w:
        if config is None or config.emit.paths:
            w.csv("path.csv", path_columns(result))
        if config is None or config.emit.summary:
            w.rows("summary.csv", SUMMARY_COLUMNS, summary_rows(result.scenario.name, result))
        w.json("manifest.json", manifest(config, {result.scenario.name: result_record(result)}))
    return sorted(w.out.iterdir())


def emit_cases(cases: dict, config, out_dir=None, derived_rows=(), extra=None) -> list[Path]:
    """Write several results (decompositions) into one run directory."""
    out_dir = out_dir or config.out
    with run_writer(out_dir) as w:
        rows = []
        for case, result in cases.items():
            if config is None or config.emit.paths:
                w.csv(f"path_{case}.csv", path_columns(result))
            rows.extend(summary_rows(case, result))
        rows.extend(derived_rows)
        if config is None or config.emit.summary:
            w.rows("summary.csv", SUMMARY_COLUMNS, rows)
        w.json("manifest.json", manifest(config, {c: result_record(r) for c, r in cases.items()}, extra))
    return sorted(w.out.iterdir())


def emit_grid(grid: DistortionGrid, out_dir, points: dict | None = None, config=None) -> list[Path]:
    with run_writer(out_dir) as w:
        w.rows("distortion_grid.csv", ("tau", "lambda", "distortion"), grid.rows())
        if points:
            w.rows("policy_points.csv", ("label", "tau", "lambda", "distortion"),
                   ((k, *v) for k, v in points.items()))
        if config is not None:
            w.json("manifest.json", manifest(config, {}))
    return sorted(w.out.iterdir())


def read_csv(path) -> dict:
    """Columns of a CSV written by this module (floats where parseable)."""
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        cols = {h: [] for h in header}
        for row in r:
            for h, v in zip(header, row):
                try:
                    cols[h].append(float(v))
                except ValueError:
                    cols[h].append(v)
    return cols
