import math
import logging
import pytest # type: ignore
from src.schemas.trap_model import TrapModel
from src.services.trap_spectrum import restricted_spectrum
from src.utils.constants import AMU, HBAR, K_B

logger: logging.Logger = logging.getLogger(__name__)

# Global test counter
test_counter = 0

def pytest_runtest_logstart(nodeid, location):
    """Log test start with sequence number"""
    global test_counter
    test_counter += 1
    test_name = location[2]  # Get the test function name
    logger.info(f"===================== Start #{test_counter} - {test_name} =====================")

def pytest_runtest_logfinish(nodeid, location):
    """Log test finish with sequence number"""
    global test_counter
    test_name = location[2]  # Get the test function name
    logger.info(f"===================== Finish #{test_counter} - {test_name} =====================")

RB87_MASS: float = 86.909 * AMU
TOY_GAMMA: float = 1.0
# beta*hbar*Gamma = 1e-4 for the toy system
TOY_TEMPERATURE: float = HBAR * TOY_GAMMA / (K_B * 1e-4)

@pytest.fixture(scope="session")
def formation_trap() -> TrapModel:
    """Trap, gas and bath of the formation run: 2000 Rb-87 atoms at 20.31 nK."""
    return TrapModel(
        omega_x=2 * math.pi * 42.0,
        omega_y=2 * math.pi * 42.0,
        omega_z=2 * math.pi * 120.0,
        mass=RB87_MASS,
        scattering_length=5.7e-9,
        n_total=2000,
        temperature=20.31e-9,
        gamma=34.0,
    )

@pytest.fixture
def small_trap() -> TrapModel:
    """Anisotropic trap with a spectrum of a few dozen modes."""
    return TrapModel(
        omega_x=2 * math.pi * 40.0,
        omega_y=2 * math.pi * 50.0,
        omega_z=2 * math.pi * 65.0,
        mass=RB87_MASS,
        scattering_length=5.7e-9,
        n_total=12,
        temperature=HBAR * 2 * math.pi * 40.0 / K_B,
        gamma=2 * math.pi * 5.0,
        energy_cutoff=4.0,
    )

@pytest.fixture
def toy_trap() -> TrapModel:
    """Trap for the three-mode toy system: omega_x = 2 Gamma, beta*hbar*Gamma = 1e-4."""
    return TrapModel(
        omega_x=2.0 * TOY_GAMMA,
        omega_y=2 * math.pi * 100.0,
        omega_z=2 * math.pi * 100.0,
        mass=RB87_MASS,
        scattering_length=5.7e-9,
        n_total=4,
        temperature=TOY_TEMPERATURE,
        gamma=TOY_GAMMA,
    )

@pytest.fixture
def toy_spectrum(toy_trap):
    """Excited modes (1,0,0), (2,0,0), (3,0,0): on-shell collisions 1+1->2 and 1+2->3."""
    return restricted_spectrum(toy_trap, [(1, 0, 0), (2, 0, 0), (3, 0, 0)])

