import sys
from pathlib import Path

import pytest

import durcheck

sys.path.insert(0, str(Path(__file__).parent))

MODELS = Path(__file__).parent.parent / "models"


@pytest.fixture(scope="session")
def models_dir() -> Path:
    return MODELS


@pytest.fixture(scope="session")
def gas_rta():
    return durcheck.parse_model((MODELS / "gas_burner.rta").read_text())


@pytest.fixture(scope="session")
def gas_prta():
    return durcheck.parse_model((MODELS / "gas_burner.prta").read_text())


@pytest.fixture(scope="session")
def gas_ldi():
    return durcheck.parse_ldi((MODELS / "gas_burner.ldi").read_text())


@pytest.fixture(scope="session")
def gas_pldi():
    return durcheck.parse_pldi((MODELS / "gas_burner.pldi").read_text())


@pytest.fixture
def rho1(gas_rta):
    """s1 -> s2 over [30, inf]."""
    return gas_rta.transitions[0]


@pytest.fixture
def rho2(gas_rta):
    """s2 -> s1 over [0, 1]."""
    return gas_rta.transitions[1]
