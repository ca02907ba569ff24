"""Fixtures compartidas de la suite"""
from pathlib import Path
import sys

import pytest

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from services.ode_service import IntegrationConfig  # noqa: E402
from services.pss_service import PssConfig, solve  # noqa: E402
from services.rates import constant_scenario, table1_scenario  # noqa: E402

SCENARIOS = ROOT / "scenarios"


@pytest.fixture
def table1():
    return table1_scenario()


@pytest.fixture
def single_class():
    return constant_scenario([1.0], [2.0], period=1.0, name="una_clase")


@pytest.fixture(scope="session")
def single_class_solution():
    escenario = constant_scenario([1.0], [2.0], period=1.0, name="una_clase")
    return solve(escenario, PssConfig(integration=IntegrationConfig(steps_per_period=200)))


@pytest.fixture(scope="session")
def table1_solution():
    return solve(table1_scenario(), PssConfig(epsilon=1e-10, alpha=1.0))


@pytest.fixture
def scenarios_dir():
    return SCENARIOS
