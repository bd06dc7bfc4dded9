"""Steady states: closed form for the single-sector economy, Newton for the rest."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import model as M
from .model import IDX, NVAR, VARS, ModelError, ModelSpec, VintagePolicy
from .newton import SolverError, complex_step_jacobian, damped_newton
from .taxcode import WedgeReport, lambda_ss, wedge, wedge_report


@dataclass(frozen=True)
class AnalyticSS:
    Y: float
    Y_star: float
    k: float
    wedge: float
    lambda_ss: float
    Tpi: float
    d: float
    profit: float
    profit_star: float
    TB: float
    distortion: float


def analytic_steady_state(spec: ModelSpec) -> AnalyticSS:
    """Closed-form steady state of the single-sector economy without personal taxes."""
    if not spec.single_sector or spec.policy.tau_indiv != 0.0 or spec.extended:
        raise ModelError("analytic steady state needs the baseline variant with gamma = l = 1 and tau_indiv = 0")
    a, dep, rho = spec.alpha_c, spec.delta_c, spec.rho
    tau = spec.policy.tau_corp
    lam = lambda_ss(spec.policy.rate_dbal, spec.beta)
    om = wedge(tau, lam)

    def output(mpk):
        return (a / mpk) ** (a / (1.0 - a))

    mpk = (rho + dep) / om
    Y = output(mpk)
    Y_star = output(rho + dep)
    k = a * Y / mpk
    profit_star = a * Y_star * rho / (rho + dep)
    scale = om ** (a / (1.0 - a)) * (1.0 + dep / rho * (1.0 - om))
    Tpi = profit_star * tau * scale
    d = profit_star * (1.0 - tau) * scale
    return AnalyticSS(
        Y=Y, Y_star=Y_star, k=k, wedge=om, lambda_ss=lam, Tpi=Tpi, d=d,
        profit=a * Y - dep * k, profit_star=profit_star, TB=a * Y - dep * k,
        distortion=1.0 - Y / Y_star,
    )


@dataclass
class SteadyState:
    spec: ModelSpec
    x: np.ndarray
    iterations: int
    residual: float

    def __getitem__(self, name):
        if name in IDX:
            return float(self.x[IDX[name]])
        return float(self.flows[name])

    @property
    def vintage(self) -> VintagePolicy:
        return VintagePolicy.steady(self.spec.policy.sched)

    @property
    def flows(self):
        return {k: float(v) for k, v in M.flows(self.spec, self.vintage, self.x, M.STEADY_T).items()}

    @property
    def wedge(self) -> WedgeReport:
        return wedge_report(self.spec.policy, self.spec.beta, self.spec.alpha_c)

    @property
    def moments(self) -> dict:
        f = self.flows
        g = f["gdp"]
        return {"profit/Y": f["profit"] / g, "d/Y": f["d"] / g, "Tpi/Y": f["Tpi"] / g, "Tii/Y": f["Tii"] / g}

    @property
    def ccorp_share(self) -> float:
        f = self.flows
        return f["Y"] / f["gdp"]

    def aggregates(self):
        return {k: float(v) for k, v in M.aggregates(self.spec, self.x).items()}

    def as_initial_state(self) -> np.ndarray:
        """Pre-reform state with all undeducted investment in the 'before' stock."""
        x = self.x.copy()
        x[IDX["kb"]] = x[IDX["kb"]] + x[IDX["ka"]]
        x[IDX["ka"]] = 0.0
        x[IDX["lam_b"]] = x[IDX["lam_a"]]
        return x

    def max_residual(self) -> float:
        r = M.residuals_period(self.spec, self.vintage, self.x, self.x, self.x)
        return float(np.max(np.abs(r)))


def default_guess(spec: ModelSpec) -> np.ndarray:
    """Undistorted steady state of each sector, labor split by taste weights."""
    a, ap = spec.alpha_c, spec.alpha_p
    rho = spec.rho
    x = np.zeros(NVAR)
    w = spec.taste_weight
    if spec.fix_labor:
        l, lp = spec.labor_c_fixed, 1.0 - spec.labor_c_fixed
    else:
        # one-sector undistorted labor supply with a unit-scale bundle
        cy = 1.0 - spec.delta_c * a / (rho + spec.delta_c)
        hours = ((1.0 - spec.policy.tau_indiv) * (1.0 - a) / cy) ** (1.0 / (1.0 + spec.phi))
        l, lp = w * hours, (1.0 - w) * hours
    k = l * (a / (rho + spec.delta_c)) ** (1.0 / (1.0 - a))
    Y = k**a * l ** (1.0 - a)
    x[IDX["k"]], x[IDX["i"]], x[IDX["c"]] = k, spec.delta_c * k, Y - spec.delta_c * k
    x[IDX["l"]], x[IDX["lp"]], x[IDX["u"]] = l, lp, 1.0
    if spec.single_sector:
        x[IDX["p"]] = 1.0
        x[IDX["lp"]] = 0.0
    else:
        kp = lp * (ap / (rho + spec.delta_p)) ** (1.0 / (1.0 - ap))
        Yp = kp**ap * lp ** (1.0 - ap)
        x[IDX["kp"]], x[IDX["ip"]], x[IDX["cp"]] = kp, spec.delta_p * kp, Yp - spec.delta_p * kp
        mu, mu_p = M.marginal_utility(spec, x[IDX["c"]], x[IDX["cp"]])
        x[IDX["p"]] = mu_p / mu
    dpi = spec.policy.rate_dbal
    x[IDX["ka"]] = x[IDX["i"]] * (1.0 - dpi) / dpi
    x[IDX["lam_a"]] = x[IDX["lam_b"]] = lambda_ss(dpi, spec.beta)
    return x


def _admissible(spec):
    def ok(x):
        try:
            M.check_state(spec, x)
        except ModelError:
            return False
        return True
    return ok


def solve_steady_state(spec: ModelSpec, guess=None, tol=1e-10, max_iter=100) -> SteadyState:
    vintage = VintagePolicy.steady(spec.policy.sched)

    def F(x):
        return M.residuals_period(spec, vintage, x, x, x)

    x0 = default_guess(spec) if guess is None else np.asarray(guess, dtype=float)
    try:
        x, info = damped_newton(
            F, lambda z: complex_step_jacobian(F, z), x0, tol=tol, max_iter=max_iter,
            admissible=_admissible(spec), names=M.EQUATIONS)
    except SolverError as exc:
        raise SolverError(f"steady state: {exc} (worst equation: {exc.worst})", exc.trace, exc.worst) from exc
    M.check_state(spec, x)
    # re-substitute rather than trust the iteration's bookkeeping
    resid = float(np.max(np.abs(F(x))))
    if not resid < tol:
        raise SolverError(f"steady state residual {resid:.3e} above tolerance {tol:.1e}")
    return SteadyState(spec, x, info.iterations, resid)


def calibrate_eta(spec: ModelSpec, target_ccorp_share: float, bracket=(0.02, 0.98), tol=1e-6) -> float:
    """CES weight on the c-corporate good that hits a steady-state receipts share."""
    if not spec.extended:
        raise ModelError("calibrate_eta requires the extended variant")
    if not (0.0 < target_ccorp_share < 1.0):
        raise ModelError(f"target share must lie in (0, 1), got {target_ccorp_share!r}")
    cache = {}

    def gap(eta):
        ss = solve_steady_state(spec.replace(eta=eta), guess=cache.get("x"))
        cache["x"] = ss.x
        return ss.ccorp_share - target_ccorp_share

    lo, hi = bracket
    glo, ghi = gap(lo), gap(hi)
    if glo * ghi > 0:
        raise ModelError(
            f"share target {target_ccorp_share} not bracketed by eta in {bracket} "
            f"(shares {glo + target_ccorp_share:.4f}, {ghi + target_ccorp_share:.4f})")
    cache.pop("x", None)
    eta = brentq(gap, lo, hi, xtol=1e-12, rtol=1e-12)
    share = gap(eta) + target_ccorp_share
    if abs(share - target_ccorp_share) > tol:
        raise ModelError(f"calibrated share {share} misses target {target_ccorp_share}")
    return float(eta)
