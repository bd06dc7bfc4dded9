"""Two-sector general-equilibrium model of corporate tax reforms."""

__version__ = "0.1.0"

from .taxcode import (  # noqa: E402
    DepreciationSchedule, TaxPolicy, apply_bonus, distortion_grid, pdv_of_schedule,
    rate_from_pdv, wedge_report,
)
from .model import ModelSpec, VintagePolicy  # noqa: E402
from .steady_state import analytic_steady_state, calibrate_eta, solve_steady_state  # noqa: E402
from .transition import make_problem, solve_transition  # noqa: E402
from .scenarios import Scenario, decompose_factors, decompose_provisions, run_scenario  # noqa: E402
