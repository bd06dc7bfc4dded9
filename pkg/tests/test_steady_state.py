import numpy as np
import pytest

from corptax.model import ModelError, ModelSpec
from corptax.newton import SolverError
from corptax.scenarios import ETA_2017, POLICY_2017
from corptax.steady_state import analytic_steady_state, calibrate_eta, default_guess, solve_steady_state
from corptax.taxcode import TaxPolicy, lambda_ss, wedge


def single_sector(tau, rate, tau_indiv=0.0):
    return ModelSpec(TaxPolicy.make(tau, rate, tau_indiv), gamma=1.0, labor_c_fixed=1.0)


@pytest.mark.parametrize("tau", np.linspace(0.05, 0.6, 5))
@pytest.mark.parametrize("rate", np.linspace(0.1, 1.0, 5))
def test_numeric_matches_closed_form(tau, rate):
    spec = single_sector(tau, rate)
    a, ss = analytic_steady_state(spec), solve_steady_state(spec)
    for num, ana in ((ss["Y"], a.Y), (ss["k"], a.k), (ss["d"], a.d), (ss["Tpi"], a.Tpi)):
        assert num == pytest.approx(ana, rel=1e-8)
    assert a.Y == pytest.approx(a.Y_star * a.wedge ** (0.35 / 0.65), rel=1e-14)
    assert a.d / a.Tpi == pytest.approx((1 - tau) / tau, rel=1e-12)


def test_no_tax_is_undistorted():
    a = analytic_steady_state(single_sector(0.0, 0.5))
    assert a.Y == pytest.approx(a.Y_star, rel=1e-14)
    assert a.Tpi == 0.0
    assert a.distortion == pytest.approx(0.0, abs=1e-15)


def test_full_expensing_collects_revenue_without_distortion():
    a = analytic_steady_state(single_sector(0.35, 1.0))
    assert a.distortion == pytest.approx(0.0, abs=1e-15)
    assert a.Tpi > 0
    assert a.TB == pytest.approx((1 / 0.94 - 1) * a.k, rel=1e-12)


def test_kennedy_era_distortion():
    assert analytic_steady_state(single_sector(0.52, 0.10)).distortion == pytest.approx(0.16, abs=3e-3)


def test_analytic_rejects_unrestricted_specs():
    with pytest.raises(ModelError):
        analytic_steady_state(ModelSpec(POLICY_2017))
    with pytest.raises(ModelError):
        analytic_steady_state(single_sector(0.35, 0.5, tau_indiv=0.1))


@pytest.mark.parametrize("variant", ["baseline", "extended"])
def test_steady_state_identities(variant):
    ss = solve_steady_state(ModelSpec(POLICY_2017, variant=variant))
    f = ss.flows
    assert f["d"] + f["Tpi"] == pytest.approx(f["profit"], rel=1e-12)
    assert ss["i"] == pytest.approx(ss.spec.delta_c * ss["k"], rel=1e-12)
    assert ss["ip"] == pytest.approx(ss.spec.delta_p * ss["kp"], rel=1e-12)
    assert ss["lam_a"] == pytest.approx(lambda_ss(0.4823, 0.94), abs=1e-10)
    rate = ss.spec.policy.rate_dbal
    assert ss["kb"] + ss["ka"] == pytest.approx((1 - rate) / rate * ss["i"], rel=1e-12)
    assert ss.max_residual() < 1e-10
    assert ss.wedge.wedge == pytest.approx(wedge(0.35, lambda_ss(0.4823, 0.94)))


def test_untargeted_moments(ss2017):
    m = ss2017.moments
    for key, target in {"profit/Y": 0.08, "d/Y": 0.05, "Tpi/Y": 0.03, "Tii/Y": 0.10}.items():
        assert abs(m[key] - target) <= 0.01, key


def test_symmetric_sectors_without_tax():
    spec = ModelSpec(TaxPolicy.make(0.0, 0.5), gamma=0.5, labor_c_fixed=0.5)
    ss = solve_steady_state(spec)
    assert ss["p"] == pytest.approx(1.0, abs=1e-12)
    assert ss["c"] == pytest.approx(ss["cp"], rel=1e-12)
    assert ss["k"] == pytest.approx(ss["kp"], rel=1e-12)


def test_default_guess_is_admissible_and_close(ss2017_ext):
    x0 = default_guess(ss2017_ext.spec)
    assert np.all(np.isfinite(x0))
    big = ss2017_ext.x > 0.1
    assert np.max(np.abs(x0[big] / ss2017_ext.x[big] - 1.0)) < 0.5


def test_nonconvergence_is_reported():
    with pytest.raises(SolverError, match="no convergence"):
        solve_steady_state(ModelSpec(POLICY_2017, variant="extended"), max_iter=1, tol=1e-16)


def test_calibrate_eta_near_stated_weight():
    spec = ModelSpec(POLICY_2017, variant="extended")
    eta = calibrate_eta(spec, 0.60)
    assert abs(eta - ETA_2017) < 0.05
    ss = solve_steady_state(spec.replace(eta=eta))
    assert ss.ccorp_share == pytest.approx(0.60, abs=1e-6)


def test_calibrate_eta_symmetric():
    spec = ModelSpec(TaxPolicy.make(0.0, 0.5), variant="extended")
    assert calibrate_eta(spec, 0.5) == pytest.approx(0.5, abs=1e-8)


def test_share_increasing_in_eta():
    spec = ModelSpec(POLICY_2017, variant="extended")
    shares = [solve_steady_state(spec.replace(eta=e)).ccorp_share for e in np.linspace(0.3, 0.8, 6)]
    assert np.all(np.diff(shares) > 0)
    assert calibrate_eta(spec, 0.55) < calibrate_eta(spec, 0.65)


def test_calibrate_eta_errors():
    with pytest.raises(ModelError):
        calibrate_eta(ModelSpec(POLICY_2017), 0.5)
    with pytest.raises(ModelError):
        calibrate_eta(ModelSpec(POLICY_2017, variant="extended"), 1.2)
    with pytest.raises(ModelError, match="not bracketed"):
        calibrate_eta(ModelSpec(POLICY_2017, variant="extended"), 0.6, bracket=(0.1, 0.2))
