"""Declining-balance tax depreciation and the steady-state corporate tax wedge.

Everything here is closed form. A declining-balance schedule with rate
``rate_dbal`` deducts ``rate_dbal * (1 - rate_dbal)**j`` of an investment
``j`` periods after it is made; with constant discounting the present value
of those deductions has a simple closed form, which is inverted to calibrate
the rate from a target present value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _check_open_unit(name: str, value: float) -> None:
    if not (0.0 < value < 1.0):
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")


def _check_closed_unit(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def discount_rate(beta: float) -> float:
    """Rate of time preference rho = (1 - beta) / beta."""
    _check_open_unit("beta", beta)
    return (1.0 - beta) / beta


@dataclass(frozen=True)
class DepreciationSchedule:
    """Declining-balance tax depreciation with rate ``rate_dbal`` in (0, 1]."""

    rate_dbal: float

    def __post_init__(self):
        if not (0.0 < self.rate_dbal <= 1.0):
            raise ValueError(f"rate_dbal must lie in (0, 1], got {self.rate_dbal!r}")

    def weights(self, n: int) -> np.ndarray:
        """Deduction shares for investment 0..n-1 periods old."""
        j = np.arange(n)
        return self.rate_dbal * (1.0 - self.rate_dbal) ** j


@dataclass(frozen=True)
class TaxPolicy:
    tau_corp: float
    sched: DepreciationSchedule
    tau_indiv: float = 0.0
    theta_waste: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.tau_corp < 1.0):
            raise ValueError(f"tau_corp must lie in [0, 1), got {self.tau_corp!r}")
        if not (0.0 <= self.tau_indiv < 1.0):
            raise ValueError(f"tau_indiv must lie in [0, 1), got {self.tau_indiv!r}")
        _check_closed_unit("theta_waste", self.theta_waste)

    @property
    def rate_dbal(self) -> float:
        return self.sched.rate_dbal

    @classmethod
    def make(cls, tau_corp, rate_dbal, tau_indiv=0.0, theta_waste=0.0) -> "TaxPolicy":
        return cls(tau_corp, DepreciationSchedule(rate_dbal), tau_indiv, theta_waste)


@dataclass(frozen=True)
class WedgeReport:
    lambda_ss: float
    wedge: float
    distortion: float


def pdv_of_schedule(rate_dbal: float, beta: float) -> float:
    """Steady-state present value of the deductions from one unit of investment."""
    if not (0.0 < rate_dbal <= 1.0):
        raise ValueError(f"rate_dbal must lie in (0, 1], got {rate_dbal!r}")
    _check_open_unit("beta", beta)
    return rate_dbal / (1.0 - beta * (1.0 - rate_dbal))


def rate_from_pdv(pdv: float, beta: float) -> float:
    """Declining-balance rate whose steady-state present value equals ``pdv``."""
    if not (0.0 < pdv <= 1.0):
        raise ValueError(f"pdv must lie in (0, 1], got {pdv!r}")
    rho = discount_rate(beta)
    # clamp roundoff so a PDV of one maps to a valid rate
    return min(rho * pdv / (1.0 + rho - pdv), 1.0)


def apply_bonus(bonus_fraction: float, base_pdv: float) -> float:
    """Present value when ``bonus_fraction`` of investment is expensed immediately."""
    _check_closed_unit("bonus_fraction", bonus_fraction)
    _check_closed_unit("base_pdv", base_pdv)
    return bonus_fraction + (1.0 - bonus_fraction) * base_pdv


def lambda_ss(rate_dbal, beta):
    """Steady-state schedule PDV, ``rate*(1+rho)/(rho+rate)``; accepts rate 0 and arrays."""
    rho = discount_rate(beta)
    rate = np.asarray(rate_dbal, dtype=float)
    if np.any((rate < 0.0) | (rate > 1.0)):
        raise ValueError("rate_dbal must lie in [0, 1]")
    out = rate * (1.0 + rho) / (rho + rate)
    return float(out) if out.ndim == 0 else out


def wedge(tau_corp, lam):
    """Corporate tax wedge (1 - tau) / (1 - lam * tau)."""
    tau_corp = np.asarray(tau_corp, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = (1.0 - tau_corp) / (1.0 - lam * tau_corp)
    return float(out) if out.ndim == 0 else out


def distortion(omega, alpha: float):
    """Long-run output loss 1 - omega**(alpha / (1 - alpha))."""
    _check_open_unit("alpha", alpha)
    out = 1.0 - np.asarray(omega, dtype=float) ** (alpha / (1.0 - alpha))
    return float(out) if np.ndim(out) == 0 else out


def wedge_report(policy: TaxPolicy, beta: float, alpha: float) -> WedgeReport:
    lam = lambda_ss(policy.rate_dbal, beta)
    _check_open_unit("alpha", alpha)
    om = wedge(policy.tau_corp, lam)
    return WedgeReport(lambda_ss=lam, wedge=om, distortion=distortion(om, alpha))


def wedge_report_for_rate(tau_corp: float, rate_dbal: float, beta: float, alpha: float) -> WedgeReport:
    """Same as :func:`wedge_report` but allows ``rate_dbal == 0`` (no deductions)."""
    if not (0.0 <= tau_corp < 1.0):
        raise ValueError(f"tau_corp must lie in [0, 1), got {tau_corp!r}")
    lam = lambda_ss(rate_dbal, beta)
    om = wedge(tau_corp, lam)
    return WedgeReport(lambda_ss=lam, wedge=om, distortion=distortion(om, alpha))


@dataclass(frozen=True)
class DistortionGrid:
    tau: np.ndarray
    lam: np.ndarray
    distortion: np.ndarray  # shape (len(tau), len(lam))

    def rows(self):
        for a, t in enumerate(self.tau):
            for b, l in enumerate(self.lam):
                yield float(t), float(l), float(self.distortion[a, b])


def distortion_grid(tau_range, lambda_range, alpha: float, beta: float, n_tau: int = 51,
                    n_lambda: int = 51) -> DistortionGrid:
    """Distortions on a (tau, lambda) grid.

    ``tau_range``/``lambda_range`` are either (lo, hi) pairs, expanded to
    ``n_tau``/``n_lambda`` evenly spaced points, or explicit point arrays.
    ``beta`` is only validated; the grid is indexed by lambda directly.
    """
    _check_open_unit("beta", beta)
    taus = _grid_axis("tau", tau_range, n_tau, allow_zero=True)
    lams = _grid_axis("lambda", lambda_range, n_lambda, allow_zero=True)
    om = wedge(taus[:, None], lams[None, :])
    return DistortionGrid(taus, lams, np.atleast_2d(distortion(om, alpha)))


def _grid_axis(name, spec, n, allow_zero=False):
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 1 and arr.size == 2 and n is not None:
        if n < 2:
            raise ValueError(f"grid size for {name} must be >= 2, got {n}")
        arr = np.linspace(arr[0], arr[1], n)
    arr = np.atleast_1d(arr)
    lo_ok = arr >= 0.0 if allow_zero else arr > 0.0
    if not np.all(lo_ok & (arr < 1.0 + 1e-15)):
        raise ValueError(f"{name} grid values must lie within [0, 1], got {arr}")
    return arr


# Tax-code anchors. The MACRS/ITC present values are imported constants.
BETA_ANNUAL = 0.94
PDV_MACRS_2017 = 0.879
BONUS_2017_PRE = 0.50
BONUS_2017_POST = 0.90
PDV_EQUIP_1960 = 0.647
PDV_EQUIP_1965 = 0.726
ITC_PDV_1965 = 0.0657

RATE_DBAL_2017_PRE = 0.4823
RATE_DBAL_2017_POST = 0.8305
RATE_DBAL_1961_PRE = 0.10
RATE_DBAL_1961_POST = 0.1857
