"""Equilibrium conditions of the two-sector corporate tax economy.

A period's state is a flat vector indexed by :data:`VARS`. Both variants use
the same layout; the baseline economy pins labor and utilization with
trivial equations so every solver sees one block size.

All residual code is written to be complex-safe (no ``abs``, comparisons or
``max`` on state values) so Jacobians can be taken by complex-step
differentiation.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .taxcode import DepreciationSchedule, TaxPolicy, lambda_ss, wedge

VARS = (
    "c",      # consumption of the c-corporate good (numeraire)
    "cp",     # consumption of the pass-through good
    "p",      # relative price of the pass-through good
    "k",      # c-corporate capital, start of period
    "kp",     # pass-through capital, start of period
    "i",      # c-corporate investment
    "ip",     # pass-through investment, in pass-through goods
    "kb",     # undeducted investment stock, pre-reform schedule
    "ka",     # undeducted investment stock, post-reform schedule
    "lam_a",  # PDV of deductions per unit invested under the post-reform schedule
    "lam_b",  # same under the pre-reform schedule
    "l",      # c-corporate hours
    "lp",     # pass-through hours
    "u",      # c-corporate capital utilization
)
IDX = {name: j for j, name in enumerate(VARS)}
NVAR = len(VARS)

# Variables that must stay strictly positive (single-sector economies excepted).
POSITIVE = ("c", "cp", "p", "k", "kp", "l", "lp", "u")

EQUATIONS = (
    "intratemporal",
    "euler_c",
    "euler_p",
    "lambda_a",
    "lambda_b",
    "goods_c",
    "goods_p",
    "law_k",
    "law_kp",
    "law_kb",
    "law_ka",
    "labor_c",
    "labor_p",
    "utilization",
)


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    """Structural parameters of one economy.

    ``variant='baseline'``: inelastic labor split (``labor_c_fixed``,
    1 - ``labor_c_fixed``), Cobb-Douglas bundle with weight ``gamma``, full
    utilization. ``variant='extended'``: elastic labor mobile across sectors
    at one wage, CES bundle (``eta``, ``epsilon_ces``), variable utilization.
    ``epsilon_ces == 0`` selects the Cobb-Douglas limit with weight ``eta``;
    ``fix_labor``/``fix_utilization`` switch off those margins in the
    extended economy (used to nest the baseline).

    With ``gamma == labor_c_fixed == 1`` the baseline collapses to a
    single-sector economy without pass-through businesses.
    """

    policy: TaxPolicy
    variant: str = "baseline"
    beta: float = 0.94
    sigma: float = 1.0
    gamma: float = 0.575
    eta: float = 0.55
    epsilon_ces: float = 0.33
    phi: float = 4.0
    alpha_c: float = 0.35
    alpha_p: float = 0.35
    delta_c: float = 0.10
    delta_p: float = 0.10
    delta0: float = 0.10
    delta1: float | None = None
    delta2: float = 0.10
    labor_c_fixed: float = 0.575
    fix_labor: bool | None = None
    fix_utilization: bool | None = None

    def __post_init__(self):
        errs = []
        if self.variant not in ("baseline", "extended"):
            errs.append(f"variant must be 'baseline' or 'extended', got {self.variant!r}")
        if not (0.0 < self.beta < 1.0):
            errs.append(f"beta must lie in (0, 1), got {self.beta!r}")
        if not self.sigma > 0.0:
            errs.append(f"sigma must be positive, got {self.sigma!r}")
        for name in ("alpha_c", "alpha_p"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                errs.append(f"{name} must lie in (0, 1), got {v!r}")
        for name in ("delta_c", "delta_p", "delta0"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                errs.append(f"{name} must lie in (0, 1], got {v!r}")
        if not (0.0 < self.gamma <= 1.0):
            errs.append(f"gamma must lie in (0, 1], got {self.gamma!r}")
        if not (0.0 < self.labor_c_fixed <= 1.0):
            errs.append(f"labor_c_fixed must lie in (0, 1], got {self.labor_c_fixed!r}")
        if (self.gamma == 1.0) != (self.labor_c_fixed == 1.0):
            errs.append("gamma and labor_c_fixed must both equal 1 (single-sector) or both be < 1")
        if self.variant == "extended":
            if not (0.0 < self.eta < 1.0):
                errs.append(f"eta must lie in (0, 1), got {self.eta!r}")
            if not self.epsilon_ces < 1.0:
                errs.append(f"epsilon_ces must be < 1, got {self.epsilon_ces!r}")
            if not self.phi > 0.0:
                errs.append(f"phi must be positive, got {self.phi!r}")
            if not self.delta2 >= 0.0:
                errs.append(f"delta2 must be nonnegative, got {self.delta2!r}")
            if self.delta_c != self.delta0:
                errs.append("extended variant: delta_c must equal delta0 (steady-state depreciation)")
            if self.gamma == 1.0:
                errs.append("extended variant has no single-sector restriction")
        if errs:
            raise ModelError("; ".join(errs))
        d1 = 1.0 / self.beta - (1.0 - self.delta0)
        if self.delta1 is None:
            object.__setattr__(self, "delta1", d1)
        elif not np.isclose(self.delta1, d1, rtol=0, atol=1e-12):
            raise ModelError(f"delta1 must equal 1/beta - (1 - delta0) = {d1!r}, got {self.delta1!r}")
        if self.fix_labor is None:
            object.__setattr__(self, "fix_labor", self.variant == "baseline")
        if self.fix_utilization is None:
            object.__setattr__(self, "fix_utilization", self.variant == "baseline")

    @property
    def extended(self) -> bool:
        return self.variant == "extended"

    @property
    def single_sector(self) -> bool:
        return self.variant == "baseline" and self.gamma == 1.0

    @property
    def taste_weight(self) -> float:
        return self.eta if self.extended else self.gamma

    @property
    def cobb_douglas(self) -> bool:
        return not self.extended or self.epsilon_ces == 0.0

    @property
    def rho(self) -> float:
        return 1.0 / self.beta - 1.0

    def with_policy(self, policy: TaxPolicy) -> "ModelSpec":
        return replace(self, policy=policy)

    def replace(self, **changes) -> "ModelSpec":
        if "delta0" in changes or "beta" in changes:
            changes.setdefault("delta1", None)
        return replace(self, **changes)


@dataclass(frozen=True)
class VintagePolicy:
    """Two undeducted-investment stocks with their own schedules.

    Investment made at ``t >= reform_period`` is deducted under
    ``sched_after``; earlier investment keeps ``sched_before``.
    """

    sched_before: DepreciationSchedule
    sched_after: DepreciationSchedule
    reform_period: int = 0

    def __post_init__(self):
        if self.reform_period < 0:
            raise ModelError(f"reform_period must be >= 0, got {self.reform_period}")

    def after(self, t) -> np.ndarray:
        """Indicator D^A_t."""
        return (np.asarray(t) >= self.reform_period).astype(float)

    @classmethod
    def steady(cls, sched: DepreciationSchedule) -> "VintagePolicy":
        return cls(sched, sched, 0)


# a period index far past any reform, for steady-state evaluation
STEADY_T = 10**9


def depreciation(spec: ModelSpec, u):
    if spec.fix_utilization:
        return spec.delta_c + 0.0 * u
    x = u - 1.0
    return spec.delta0 + spec.delta1 * x + 0.5 * spec.delta2 * x * x


def depreciation_slope(spec: ModelSpec, u):
    return spec.delta1 + spec.delta2 * (u - 1.0)


def _cols(X):
    return {name: X[..., j] for j, name in enumerate(VARS)}


def marginal_utility(spec: ModelSpec, c, cp):
    """Marginal utility of the numeraire good and of the pass-through good."""
    s = spec.sigma
    if spec.single_sector:
        return c ** (-s), 0.0 * c
    a = spec.taste_weight
    if spec.cobb_douglas:
        bundle = c**a * cp ** (1.0 - a)
        mu_c = bundle ** (1.0 - s) * a / c
        mu_p = bundle ** (1.0 - s) * (1.0 - a) / cp
    else:
        e = spec.epsilon_ces
        bundle = (a * c**e + (1.0 - a) * cp**e) ** (1.0 / e)
        scale = bundle ** (1.0 - s - e)
        mu_c = scale * a * c ** (e - 1.0)
        mu_p = scale * (1.0 - a) * cp ** (e - 1.0)
    return mu_c, mu_p


def consumption_bundle(spec: ModelSpec, c, cp):
    if spec.single_sector:
        return c
    a = spec.taste_weight
    if spec.cobb_douglas:
        return c**a * cp ** (1.0 - a)
    e = spec.epsilon_ces
    return (a * c**e + (1.0 - a) * cp**e) ** (1.0 / e)


def flows(spec: ModelSpec, vintage: VintagePolicy, X, t):
    """Within-period quantities implied by the state ``X`` at period(s) ``t``."""
    v = _cols(X)
    pol = spec.policy
    tau = pol.tau_corp
    a, ap = spec.alpha_c, spec.alpha_p
    D = vintage.after(t)
    c, cp, p = v["c"], v["cp"], v["p"]
    k, kp, i, ip = v["k"], v["kp"], v["i"], v["ip"]
    l, lp, u = v["l"], v["lp"], v["u"]

    Y = (u * k) ** a * l ** (1.0 - a)
    if spec.single_sector:
        Yp = 0.0 * Y
        wp = 0.0 * Y
        mpk_p = 0.0 * Y
    else:
        Yp = kp**ap * lp ** (1.0 - ap)
        wp = p * (1.0 - ap) * Yp / lp
        mpk_p = ap * Yp / kp
    w = (1.0 - a) * Y / l
    mpk = a * Y / k
    db = vintage.sched_before.rate_dbal
    da = vintage.sched_after.rate_dbal
    ID = db * ((1.0 - D) * i + v["kb"]) + da * (D * i + v["ka"])
    TB = Y - w * l - ID
    Tpi = tau * TB
    profit = Y - w * l - i
    d = profit - Tpi
    profit_p = p * Yp - wp * lp - p * ip
    Tii = pol.tau_indiv * (w * l + wp * lp + d + profit_p)
    T = Tpi + Tii
    G = pol.theta_waste * T
    gdp = Y + p * Yp
    lam = D * v["lam_a"] + (1.0 - D) * v["lam_b"]
    return {
        "Y": Y, "Yp": Yp, "w": w, "wp": wp, "mpk": mpk, "mpk_p": mpk_p,
        "ID": ID, "TB": TB, "Tpi": Tpi, "profit": profit, "d": d,
        "profit_p": profit_p, "dp": profit_p, "Tii": Tii, "T": T, "G": G,
        "G_c": G * Y / gdp, "G_p": G * Yp / gdp,
        "transfer": (1.0 - pol.theta_waste) * T,
        "gdp": gdp, "investment": i + p * ip, "lam": lam, "q": 1.0 - tau * lam,
        "D": D + 0.0 * Y,
    }


def residuals(spec: ModelSpec, vintage: VintagePolicy, Xm, X, Xp, t):
    """Equilibrium residuals for periods ``t`` given previous, current and next states.

    Arrays have shape ``(..., NVAR)``; ``t`` broadcasts against the leading
    axes. Returns an array of the same shape ordered as :data:`EQUATIONS`.
    """
    Xm, X, Xp = np.asarray(Xm), np.asarray(X), np.asarray(Xp)
    t = np.asarray(t)
    pol = spec.policy
    tau = pol.tau_corp
    db = vintage.sched_before.rate_dbal
    da = vintage.sched_after.rate_dbal
    m, v, n = _cols(Xm), _cols(X), _cols(Xp)
    f = flows(spec, vintage, X, t)
    fn = flows(spec, vintage, Xp, t + 1)
    Dm = vintage.after(t - 1)

    mu, mu_p = marginal_utility(spec, v["c"], v["cp"])
    mu_n, _ = marginal_utility(spec, n["c"], n["cp"])
    sdf = spec.beta * mu_n / mu

    out = np.empty(np.broadcast_shapes(X.shape, Xm.shape, Xp.shape), dtype=np.result_type(Xm, X, Xp))
    R = {}
    R["euler_c"] = f["q"] - sdf * ((1.0 - tau) * fn["mpk"] + fn["q"] * (1.0 - depreciation(spec, n["u"])))
    R["lambda_a"] = v["lam_a"] - da - (1.0 - da) * sdf * n["lam_a"]
    R["lambda_b"] = v["lam_b"] - db - (1.0 - db) * sdf * n["lam_b"]
    R["goods_c"] = f["Y"] - v["c"] - v["i"] - f["G_c"]
    R["law_k"] = v["k"] - (1.0 - depreciation(spec, m["u"])) * m["k"] - m["i"]
    R["law_kb"] = v["kb"] - (1.0 - db) * ((1.0 - Dm) * m["i"] + m["kb"])
    R["law_ka"] = v["ka"] - (1.0 - da) * (Dm * m["i"] + m["ka"])

    if spec.single_sector:
        R["intratemporal"] = v["p"] - 1.0
        R["euler_p"] = v["cp"]
        R["goods_p"] = v["ip"]
        R["law_kp"] = v["kp"]
    else:
        R["intratemporal"] = 1.0 - mu_p / (mu * v["p"])
        R["euler_p"] = v["p"] - sdf * n["p"] * (fn["mpk_p"] + 1.0 - spec.delta_p)
        R["goods_p"] = f["Yp"] - v["cp"] - v["ip"] - f["G_p"]
        R["law_kp"] = v["kp"] - (1.0 - spec.delta_p) * m["kp"] - m["ip"]

    if spec.fix_labor:
        R["labor_c"] = v["l"] - spec.labor_c_fixed
        R["labor_p"] = v["lp"] - (1.0 - spec.labor_c_fixed)
    else:
        hours = v["l"] + v["lp"]
        R["labor_c"] = hours**spec.phi / ((1.0 - pol.tau_indiv) * f["w"] * mu) - 1.0
        R["labor_p"] = 1.0 - f["wp"] / f["w"]

    if spec.fix_utilization:
        R["utilization"] = v["u"] - 1.0
    else:
        R["utilization"] = (1.0 - tau) * f["mpk"] / v["u"] - f["q"] * depreciation_slope(spec, v["u"])

    for j, name in enumerate(EQUATIONS):
        out[..., j] = R[name]
    return out


def residuals_period(spec, vintage, state_prev, state_now, state_next, t=STEADY_T):
    """Residual vector of a single period."""
    return residuals(spec, vintage, state_prev, state_now, state_next, t)


def household_budget_residual(spec, vintage, X, t):
    """c + p*cp minus after-tax income plus transfers (zero when markets clear)."""
    v = _cols(np.asarray(X))
    f = flows(spec, vintage, X, t)
    income = f["w"] * v["l"] + f["wp"] * v["lp"] + f["d"] + f["dp"]
    return v["c"] + v["p"] * v["cp"] - ((1.0 - spec.policy.tau_indiv) * income + f["transfer"])


def check_state(spec: ModelSpec, X, t=None) -> None:
    """Raise :class:`ModelError` naming the first nonpositive variable."""
    X = np.atleast_2d(np.real(X))
    names = POSITIVE
    if spec.single_sector:
        names = tuple(nm for nm in POSITIVE if nm not in ("cp", "kp", "lp"))
    for nm in names:
        col = X[:, IDX[nm]]
        bad = np.flatnonzero(~(col > 0.0))
        if bad.size:
            period = bad[0] if t is None else np.atleast_1d(t)[bad[0]]
            raise ModelError(f"nonpositive {nm}={col[bad[0]]!r} at period {period}")
    for nm in ("kb", "ka"):
        col = X[:, IDX[nm]]
        bad = np.flatnonzero(col < -1e-12)
        if bad.size:
            period = bad[0] if t is None else np.atleast_1d(t)[bad[0]]
            raise ModelError(f"negative {nm}={col[bad[0]]!r} at period {period}")


def aggregates(spec: ModelSpec, X, t=STEADY_T, vintage: VintagePolicy | None = None, p_fixed=None):
    """GDP, aggregate investment, payouts and corporate revenue at current prices.

    ``p_fixed`` values the pass-through good at a constant price instead.
    """
    X = np.asarray(X)
    vintage = vintage or VintagePolicy.steady(spec.policy.sched)
    f = flows(spec, vintage, X, t)
    v = _cols(X)
    p = v["p"] if p_fixed is None else p_fixed
    return {
        "gdp": f["Y"] + p * f["Yp"],
        "investment": v["i"] + p * v["ip"],
        "payout": f["d"],
        "corp_revenue": f["Tpi"],
    }


def lambda_by_summation(spec: ModelSpec, c, cp, rate_dbal: float, lam_tail: float):
    """PDV of deductions at each period by direct discounted summation.

    The sum is carried to the end of the supplied consumption path and the
    remainder is closed with the terminal value ``lam_tail`` (the schedule's
    PDV in the terminal steady state).
    """
    c = np.asarray(c, dtype=float)
    cp = np.asarray(cp, dtype=float)
    mu, _ = marginal_utility(spec, c, cp)
    n = c.size
    out = np.empty(n)
    for t in range(n):
        j = np.arange(n - t)
        disc = spec.beta**j * mu[t:] / mu[t]
        w = rate_dbal * (1.0 - rate_dbal) ** j
        tail = spec.beta ** (n - t) * mu[-1] / mu[t] * (1.0 - rate_dbal) ** (n - t) * lam_tail
        out[t] = np.sum(disc * w) + tail
    return out


def euler_wedge_check(spec: ModelSpec, vintage: VintagePolicy, X, t0: int = 0) -> float:
    """Max deviation of the c-corporate Euler equation in its wedge form.

    ``X`` is a path (shape ``(T, NVAR)``) whose last row is (numerically) the
    terminal steady state. The schedule PDVs are rebuilt by summing
    discounted deductions along the path rather than read from the state.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 3:
        raise ModelError("euler_wedge_check needs a path of at least 3 periods")
    v = _cols(X)
    tau = spec.policy.tau_corp
    beta = spec.beta
    last_gap = np.max(np.abs(X[-1] - X[-2]) / np.maximum(np.abs(X[-1]), 1.0))
    if last_gap > 1e-8:
        raise ModelError(f"path not settled at its end (last-step change {last_gap:.2e}); horizon too short")
    T = X.shape[0]
    t = t0 + np.arange(T)
    lams = {}
    for key, sched in (("a", vintage.sched_after), ("b", vintage.sched_before)):
        tail = lambda_ss(sched.rate_dbal, beta)
        lams[key] = lambda_by_summation(spec, v["c"], v["cp"], sched.rate_dbal, tail)
    D = vintage.after(t)
    lam = D * lams["a"] + (1.0 - D) * lams["b"]
    f = flows(spec, vintage, X, t)
    mu, _ = marginal_utility(spec, v["c"], v["cp"])
    sdf = beta * mu[1:] / mu[:-1]
    om = wedge(tau, lam[:-1])
    carry = (1.0 - lam[1:] * tau) / (1.0 - lam[:-1] * tau)
    dep = depreciation(spec, v["u"][1:])
    dev = 1.0 - sdf * (carry * (1.0 - dep) + om * f["mpk"][1:])
    return float(np.max(np.abs(dev)))
