"""Shared fixtures. Reform runs are expensive, so each is solved once per session."""
import pytest

from corptax.model import ModelSpec
from corptax.scenarios import (
    ETA_2017, POLICY_2017, decompose_factors, decompose_provisions, kennedy, run_scenario, tcja17,
)
from corptax.steady_state import solve_steady_state

ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def ss2017():
    return solve_steady_state(ModelSpec(POLICY_2017))


@pytest.fixture(scope="session")
def ss2017_ext():
    return solve_steady_state(ModelSpec(POLICY_2017, variant="extended", eta=ETA_2017))


@pytest.fixture(scope="session")
def provisions():
    return decompose_provisions(tcja17())


@pytest.fixture(scope="session")
def tcja(provisions):
    return provisions.combined


@pytest.fixture(scope="session")
def kennedy_result():
    return run_scenario(kennedy())


@pytest.fixture(scope="session")
def factors():
    return decompose_factors(mode="percentage_point")
