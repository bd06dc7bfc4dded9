"""Quick invariant checks behind ``corptax check``."""
from __future__ import annotations

import numpy as np

from . import model as M
from .model import ModelSpec
from .scenarios import POLICY_2017, POLICY_TCJA, ETA_2017
from .steady_state import analytic_steady_state, solve_steady_state
from .taxcode import (
    DepreciationSchedule, TaxPolicy, apply_bonus, pdv_of_schedule, rate_from_pdv, wedge_report,
)
from .transition import flat_path, make_problem, solve_transition


def _series_identity():
    worst = 0.0
    for rate in np.linspace(0.05, 1.0, 20):
        n = int(np.ceil(np.log(1e-16) / np.log(1.0 - rate))) + 1 if rate < 1.0 else 1
        worst = max(worst, abs(DepreciationSchedule(rate).weights(n).sum() - 1.0))
    return worst < 1e-12, f"max |sum - 1| = {worst:.1e}"


def _round_trip():
    worst = 0.0
    for rate in np.linspace(0.01, 1.0, 10):
        for beta in np.linspace(0.5, 0.99, 10):
            worst = max(worst, abs(rate_from_pdv(pdv_of_schedule(rate, beta), beta) - rate))
    return worst < 1e-12, f"max round-trip error {worst:.1e}"


def _anchors():
    got = (apply_bonus(0.5, 0.879), rate_from_pdv(0.9879, 0.94), rate_from_pdv(0.7917, 0.94))
    want = (0.9395, 0.8305, 0.1857)
    ok = all(abs(g - w) < 1e-3 for g, w in zip(got, want))
    return ok, "PDV/rate anchors " + ", ".join(f"{g:.4f}" for g in got)


def _wedges():
    w17 = wedge_report(POLICY_2017, 0.94, 0.35).wedge
    w61 = wedge_report(TaxPolicy.make(0.52, 0.10), 0.94, 0.35).wedge
    w65 = wedge_report(TaxPolicy.make(0.48, 0.1857), 0.94, 0.35).wedge
    ok = abs(w17 - 0.97) <= 0.005 and abs(w61 - 0.72) <= 0.005 and abs(w65 - 0.84) <= 0.005
    return ok, f"wedges 2017 {w17:.4f}, 1961 {w61:.4f}, 1965 {w65:.4f}"


def _analytic_vs_numeric():
    spec = ModelSpec(TaxPolicy.make(0.35, 0.4823), gamma=1.0, labor_c_fixed=1.0)
    a = analytic_steady_state(spec)
    ss = solve_steady_state(spec)
    err = max(abs(ss["Y"] / a.Y - 1), abs(ss["k"] / a.k - 1), abs(ss["d"] / a.d - 1), abs(ss["Tpi"] / a.Tpi - 1))
    return err < 1e-8, f"max relative gap {err:.1e}"


def _moments():
    ss = solve_steady_state(ModelSpec(POLICY_2017))
    m = ss.moments
    target = {"profit/Y": 0.08, "d/Y": 0.05, "Tpi/Y": 0.03, "Tii/Y": 0.10}
    ok = all(abs(m[k] - target[k]) <= 0.01 for k in target)
    return ok, ", ".join(f"{k}={v:.3f}" for k, v in m.items())


def _null_transition():
    pre = solve_steady_state(ModelSpec(POLICY_2017))
    path = solve_transition(make_problem(pre, pre.spec, terminal=pre, horizon=60))
    flat = flat_path(pre, 60)
    dev = float(np.max(np.abs(path.aggregates()["gdp"] - flat.aggregates()["gdp"])))
    return dev < 1e-9, f"max GDP deviation {dev:.1e}"


def _euler_wedge():
    spec = ModelSpec(POLICY_2017, variant="extended", eta=ETA_2017)
    pre = solve_steady_state(spec)
    path = solve_transition(make_problem(pre, spec.with_policy(POLICY_TCJA)))
    dev = M.euler_wedge_check(path.spec, path.problem.vintage, path.X)
    return dev < 1e-8, f"max Euler deviation with summed PDVs {dev:.1e}"


CHECKS = {
    "series identity": _series_identity,
    "pdv round trip": _round_trip,
    "depreciation anchors": _anchors,
    "wedge anchors": _wedges,
    "analytic steady state": _analytic_vs_numeric,
    "untargeted moments": _moments,
    "null reform flatness": _null_transition,
    "euler wedge form": _euler_wedge,
}


def run_checks():
    for name, fn in CHECKS.items():
        try:
            ok, detail = fn()
        except Exception as exc:  # report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        yield name, bool(ok), detail
