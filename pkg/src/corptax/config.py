"""Run configuration: a YAML document validated against a strict schema.

Grammar (all keys optional except ``scenario``)::

    scenario: tcja17            # registry name, or an inline mapping (below)
    out: results                # output directory
    horizon: 300                # transition length in periods
    cumulative_horizon: 20      # periods summed for long-run changes/multipliers
    cut_mode: percentage_point  # factor-decomposition rate cut: percentage_point | proportional
    solver: {tol: 1.0e-10, max_iter: 50}
    emit: {paths: true, summary: true, grid: false}
    grid: {tau: [0.0, 0.6], lam: [0.4, 1.0], n_tau: 61, n_lambda: 61,
           alpha: 0.35, beta: 0.94}

Inline scenario::

    scenario:
      name: my-reform
      variant: extended         # baseline | extended
      pre:  {tau_corp: 0.35, rate_dbal: 0.4823, tau_indiv: 0.135, theta_waste: 0.0}
      post: {tau_corp: 0.21, rate_dbal: 0.8305}
      new_investment_only: true
      overrides: {eta: 0.55}    # any structural ModelSpec parameter

Unknown keys anywhere are errors.
"""
from __future__ import annotations

from typing import Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .scenarios import EXPERIMENTS, SCENARIOS, Scenario
from .taxcode import TaxPolicy


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.violations))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PolicyConfig(_Strict):
    tau_corp: float = Field(ge=0.0, lt=1.0)
    rate_dbal: float = Field(gt=0.0, le=1.0)
    tau_indiv: float = Field(default=0.135, ge=0.0, lt=1.0)
    theta_waste: float = Field(default=0.0, ge=0.0, le=1.0)

    def policy(self) -> TaxPolicy:
        return TaxPolicy.make(self.tau_corp, self.rate_dbal, self.tau_indiv, self.theta_waste)


class Overrides(_Strict):
    beta: float | None = Field(default=None, gt=0.0, lt=1.0)
    sigma: float | None = Field(default=None, gt=0.0)
    gamma: float | None = Field(default=None, gt=0.0, le=1.0)
    eta: float | None = Field(default=None, gt=0.0, lt=1.0)
    epsilon_ces: float | None = Field(default=None, lt=1.0)
    phi: float | None = Field(default=None, gt=0.0)
    alpha_c: float | None = Field(default=None, gt=0.0, lt=1.0)
    alpha_p: float | None = Field(default=None, gt=0.0, lt=1.0)
    delta_c: float | None = Field(default=None, gt=0.0, le=1.0)
    delta_p: float | None = Field(default=None, gt=0.0, le=1.0)
    delta0: float | None = Field(default=None, gt=0.0, le=1.0)
    delta2: float | None = Field(default=None, ge=0.0)
    labor_c_fixed: float | None = Field(default=None, gt=0.0, le=1.0)


class InlineScenario(_Strict):
    name: str = "custom"
    variant: Literal["baseline", "extended"] = "extended"
    pre: PolicyConfig
    post: PolicyConfig
    new_investment_only: bool = True
    overrides: Overrides = Field(default_factory=Overrides)


class SolverConfig(_Strict):
    tol: float = Field(default=1e-10, gt=0.0)
    max_iter: int = Field(default=50, gt=0)


class EmitConfig(_Strict):
    paths: bool = True
    summary: bool = True
    grid: bool = False


class GridConfig(_Strict):
    tau: tuple[float, float] = (0.0, 0.6)
    lam: tuple[float, float] = (0.4, 1.0)
    n_tau: int = Field(default=61, ge=2)
    n_lambda: int = Field(default=61, ge=2)
    alpha: float = Field(default=0.35, gt=0.0, lt=1.0)
    beta: float = Field(default=0.94, gt=0.0, lt=1.0)

    @field_validator("tau", "lam")
    @classmethod
    def _in_unit(cls, v):
        if not all(0.0 <= x <= 1.0 for x in v) or v[0] >= v[1]:
            raise ValueError("expected increasing [lo, hi] within [0, 1]")
        return v


class RunConfig(_Strict):
    scenario: Union[str, InlineScenario]
    out: str = "results"
    horizon: int = Field(default=300, ge=2)
    cumulative_horizon: int = Field(default=20, ge=1)
    cut_mode: Literal["percentage_point", "proportional"] = "percentage_point"
    solver: SolverConfig = Field(default_factory=SolverConfig)
    emit: EmitConfig = Field(default_factory=EmitConfig)
    grid: GridConfig = Field(default_factory=GridConfig)

    @field_validator("scenario")
    @classmethod
    def _known(cls, v):
        if isinstance(v, str) and v not in SCENARIOS and v not in EXPERIMENTS:
            raise ValueError(f"unknown scenario; expected one of {sorted(SCENARIOS) + list(EXPERIMENTS)}")
        return v

    @property
    def scenario_name(self) -> str:
        return self.scenario if isinstance(self.scenario, str) else self.scenario.name

    @property
    def is_experiment(self) -> bool:
        return isinstance(self.scenario, str) and self.scenario in EXPERIMENTS

    def build_scenario(self) -> Scenario:
        if self.is_experiment:
            raise ConfigError([f"scenario: {self.scenario!r} is an experiment, not a single scenario"])
        if isinstance(self.scenario, str):
            s = SCENARIOS[self.scenario]()
        else:
            inl = self.scenario
            overrides = {k: v for k, v in inl.overrides.model_dump().items() if v is not None}
            s = Scenario(inl.name, inl.pre.policy(), inl.post.policy(), variant=inl.variant,
                         new_investment_only=inl.new_investment_only, overrides=overrides)
        return s.with_(horizon=self.horizon, cumulative_horizon=self.cumulative_horizon)

    def echo(self) -> dict:
        """Plain-data form of the configuration (parses back to an equal config)."""
        return self.model_dump(mode="json")


def _describe(err) -> str:
    loc = ".".join(str(p) for p in err["loc"]) or "<root>"
    if err["type"] == "missing":
        return f"{loc}: required key missing"
    if err["type"] == "extra_forbidden":
        return f"{loc}: unknown key (got {err['input']!r})"
    return f"{loc}: {err['msg']} (got {err['input']!r})"


def _merge(base: dict, extra: dict) -> None:
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _merge(base[k], v)
        else:
            base[k] = v


def parse_config(text: str, **overrides) -> RunConfig:
    """Parse and validate YAML text; ``overrides`` are applied to the top level."""
    try:
        data = yaml.safe_load(text) if text.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigError([f"<root>: not valid YAML ({exc})"]) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError([f"<root>: expected a mapping (got {type(data).__name__})"])
    _merge(data, {k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError([_describe(e) for e in exc.errors()]) from None
    if cfg.cumulative_horizon > cfg.horizon:
        raise ConfigError([f"cumulative_horizon: must not exceed horizon {cfg.horizon} (got {cfg.cumulative_horizon})"])
    return cfg


def load_config(path, **overrides) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), **overrides)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.echo(), sort_keys=False)
