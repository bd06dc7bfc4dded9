"""Reform experiments: TCJA-17, Kennedy, provision and factor decompositions.

Cumulative statistics run over the first ``cumulative_horizon`` periods
(20 years by default). The long-run change of ``x`` is the ratio of its
cumulative reform and no-reform levels minus one; its multiplier is the
cumulative level change per unit of cumulative corporate revenue lost.
Aggregates combining both goods (GDP, investment) are valued at the
pre-reform relative price; current-price versions are reported alongside.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .model import ModelSpec, aggregates
from .newton import SolverError
from .steady_state import SteadyState, solve_steady_state
from .taxcode import (
    RATE_DBAL_1961_POST, RATE_DBAL_1961_PRE, RATE_DBAL_2017_POST, RATE_DBAL_2017_PRE,
    TaxPolicy,
)
from .transition import DEFAULT_HORIZON, TransitionPath, flat_path, make_problem, solve_transition

log = logging.getLogger(__name__)

TAU_INDIV = 0.135
ETA_2017 = 0.55
ETA_1961 = 0.70

POLICY_2017 = TaxPolicy.make(0.35, RATE_DBAL_2017_PRE, TAU_INDIV)
POLICY_TCJA = TaxPolicy.make(0.21, RATE_DBAL_2017_POST, TAU_INDIV)
POLICY_1961 = TaxPolicy.make(0.52, RATE_DBAL_1961_PRE, TAU_INDIV)
POLICY_KENNEDY = TaxPolicy.make(0.48, RATE_DBAL_1961_POST, TAU_INDIV)

# levels whose cumulative changes are reported
LEVELS = ("gdp", "investment", "payout", "corp_revenue", "Y", "Yp", "i", "ip", "c", "cp",
          "k", "kp", "d", "Tii", "l", "lp")
# "each variable" of the multiplier comparison
HEADLINE = ("gdp", "investment", "payout")


class ScenarioError(RuntimeError):
    pass


@dataclass(frozen=True)
class Scenario:
    name: str
    pre_policy: TaxPolicy
    post_policy: TaxPolicy
    variant: str = "extended"
    new_investment_only: bool = True
    overrides: dict = field(default_factory=dict)
    horizon: int = DEFAULT_HORIZON
    cumulative_horizon: int = 20

    def __post_init__(self):
        if self.cumulative_horizon < 1 or self.cumulative_horizon > self.horizon:
            raise ScenarioError(f"cumulative_horizon must lie in [1, horizon], got {self.cumulative_horizon}")

    @property
    def is_null(self) -> bool:
        return self.pre_policy == self.post_policy

    def spec(self) -> ModelSpec:
        return ModelSpec(self.pre_policy, variant=self.variant, **self.overrides)

    def post_spec(self) -> ModelSpec:
        return self.spec().with_policy(self.post_policy)

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


@dataclass
class ReformResult:
    scenario: Scenario
    pre: SteadyState
    post: SteadyState
    baseline: TransitionPath
    reform: TransitionPath
    long_run: dict
    multipliers: dict
    long_run_current: dict
    multipliers_current: dict
    impact: dict
    revenue_loss: float

    def levels(self, path: TransitionPath, constant_prices=True) -> dict:
        return _levels(path, self.pre["p"] if constant_prices else None)


def _levels(path: TransitionPath, p_fixed) -> dict:
    agg = path.aggregates(p_fixed=p_fixed)
    f = path.flows
    out = dict(agg)
    for name in ("Y", "Yp", "d", "Tii"):
        out[name] = f[name]
    for name in ("i", "ip", "c", "cp", "k", "kp", "l", "lp"):
        out[name] = path[name]
    return out


def cumulative_stats(base: dict, reform: dict, horizon: int, revenue_floor=1e-9):
    """Long-run changes and multipliers over the first ``horizon`` periods."""
    H = horizon
    lost = float(np.sum(base["corp_revenue"][:H] - reform["corp_revenue"][:H]))
    scale = float(np.sum(np.abs(base["corp_revenue"][:H])))
    defined = abs(lost) > revenue_floor * max(scale, 1.0)
    long_run, mult = {}, {}
    for name in LEVELS:
        b, r = np.asarray(base[name][:H]), np.asarray(reform[name][:H])
        sb = float(np.sum(b))
        long_run[name] = float(np.sum(r)) / sb - 1.0 if sb != 0.0 else float("nan")
        mult[name] = float(np.sum(r - b)) / lost if defined else float("nan")
    return long_run, mult, lost


def run_scenario(s: Scenario, pre: SteadyState | None = None, tol=1e-10, max_iter=50) -> ReformResult:
    try:
        pre = pre or solve_steady_state(s.spec())
        post_spec = s.post_spec()
        post = pre if s.is_null else solve_steady_state(post_spec, guess=pre.x)
        problem = make_problem(pre, post_spec, s.new_investment_only, s.horizon, terminal=post)
        reform = solve_transition(problem, tol=tol, max_iter=max_iter)
    except SolverError as exc:
        raise ScenarioError(f"scenario {s.name!r}: {exc}") from exc
    baseline = flat_path(pre, s.horizon)
    p0 = pre["p"]
    lr, mult, lost = cumulative_stats(_levels(baseline, p0), _levels(reform, p0), s.cumulative_horizon)
    lr_c, mult_c, _ = cumulative_stats(_levels(baseline, None), _levels(reform, None), s.cumulative_horizon)
    b0, r0 = _levels(baseline, p0), _levels(reform, p0)
    impact = {}
    for name in LEVELS:
        impact[name] = float(r0[name][0] / b0[name][0] - 1.0) if b0[name][0] != 0.0 else float("nan")
    log.info("scenario %s: GDP multiplier %.3f", s.name, mult["gdp"])
    return ReformResult(s, pre, post, baseline, reform, lr, mult, lr_c, mult_c, impact, lost)


# ---------------------------------------------------------------- registry

def tcja17(variant="extended", **kw) -> Scenario:
    overrides = {"eta": ETA_2017} if variant == "extended" else {}
    return Scenario("tcja17" if variant == "extended" else "tcja17-baseline",
                    POLICY_2017, POLICY_TCJA, variant=variant, overrides=overrides, **kw)


def kennedy(variant="extended", **kw) -> Scenario:
    if variant != "extended":
        raise ScenarioError("the Kennedy experiment is defined for the extended model only")
    return Scenario("kennedy", POLICY_1961, POLICY_KENNEDY, variant="extended",
                    overrides={"eta": ETA_1961}, **kw)


def rate_only(base: Scenario) -> Scenario:
    post = replace(base.post_policy, sched=base.pre_policy.sched)
    return base.with_(name=f"{base.name}-rate-only", post_policy=post)


def bonus_only(base: Scenario) -> Scenario:
    post = replace(base.post_policy, tau_corp=base.pre_policy.tau_corp)
    return base.with_(name=f"{base.name}-bonus-only", post_policy=post)


def null_scenario(variant="baseline", **kw) -> Scenario:
    overrides = {"eta": ETA_2017} if variant == "extended" else {}
    return Scenario("null", POLICY_2017, POLICY_2017, variant=variant, overrides=overrides, **kw)


SCENARIOS = {
    "tcja17": lambda: tcja17(),
    "tcja17-baseline": lambda: tcja17("baseline"),
    "tcja17-rate-only": lambda: rate_only(tcja17()),
    "tcja17-bonus-only": lambda: bonus_only(tcja17()),
    "kennedy": lambda: kennedy(),
    "null": lambda: null_scenario(),
}
EXPERIMENTS = ("tcja17-decomposition", "fig9-decomposition", "fig10-grid")


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]()
    except KeyError:
        raise ScenarioError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}") from None


# ---------------------------------------------------------- decompositions

@dataclass
class ProvisionDecomposition:
    rate_only: ReformResult
    bonus_only: ReformResult
    combined: ReformResult
    interaction: dict  # long-run change: combined - (rate_only + bonus_only)

    @property
    def results(self) -> dict:
        return {"rate_only": self.rate_only, "bonus_only": self.bonus_only, "combined": self.combined}


def decompose_provisions(base: Scenario | None = None) -> ProvisionDecomposition:
    base = base or tcja17()
    if base.pre_policy.tau_corp == base.post_policy.tau_corp or \
            base.pre_policy.sched == base.post_policy.sched:
        raise ScenarioError("provision decomposition needs a reform changing both rate and schedule")
    combined = run_scenario(base)
    r = run_scenario(rate_only(base), pre=combined.pre)
    b = run_scenario(bonus_only(base), pre=combined.pre)
    inter = {k: combined.long_run[k] - (r.long_run[k] + b.long_run[k]) for k in LEVELS}
    return ProvisionDecomposition(r, b, combined, inter)


CUT_MODES = ("percentage_point", "proportional")

FACTOR_CASES = ("1961", "2017", "2017_dep1961", "2017_tau1961", "2017_share1961")


def factor_calibrations() -> dict:
    """Pre-reform calibrations for the one-factor-at-a-time comparison."""
    tau61, dep61 = POLICY_1961.tau_corp, POLICY_1961.sched
    return {
        "1961": (POLICY_1961, ETA_1961),
        "2017": (POLICY_2017, ETA_2017),
        "2017_dep1961": (replace(POLICY_2017, sched=dep61), ETA_2017),
        "2017_tau1961": (replace(POLICY_2017, tau_corp=tau61), ETA_2017),
        "2017_share1961": (POLICY_2017, ETA_1961),
    }


def rate_cut(tau: float, cut: float, mode: str) -> float:
    if mode == "percentage_point":
        return tau - cut
    if mode == "proportional":
        return tau * (1.0 - cut)
    raise ScenarioError(f"cut mode must be one of {CUT_MODES}, got {mode!r}")


@dataclass
class FactorDecomposition:
    cut: float
    mode: str
    results: dict               # case -> ReformResult
    one_at_a_time: dict         # variable -> 2017 response plus each factor's increment
    interaction: dict           # variable -> 1961 response minus one_at_a_time
    one_at_a_time_multiplier: dict
    interaction_multiplier: dict


def decompose_factors(cut: float = 0.10, mode: str = "percentage_point", horizon=DEFAULT_HORIZON,
                      cumulative_horizon=20) -> FactorDecomposition:
    results = {}
    for case, (pol, eta) in factor_calibrations().items():
        post = replace(pol, tau_corp=rate_cut(pol.tau_corp, cut, mode))
        s = Scenario(f"factor-{case}", pol, post, variant="extended", overrides={"eta": eta},
                     horizon=horizon, cumulative_horizon=cumulative_horizon)
        results[case] = run_scenario(s)

    def combine(attr):
        ref = getattr(results["2017"], attr)
        summed, inter = {}, {}
        for k in LEVELS:
            summed[k] = ref[k] + sum(getattr(results[c], attr)[k] - ref[k]
                                     for c in ("2017_dep1961", "2017_tau1961", "2017_share1961"))
            inter[k] = getattr(results["1961"], attr)[k] - summed[k]
        return summed, inter

    s_lr, i_lr = combine("long_run")
    s_m, i_m = combine("multipliers")
    return FactorDecomposition(cut, mode, results, s_lr, i_lr, s_m, i_m)
