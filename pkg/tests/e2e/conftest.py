import logging
import time
from dataclasses import dataclass
from pathlib import Path
import pytest # type: ignore
from src.api.config_parser import parse_config
from src.schemas.rates import RateTable
from src.schemas.run_config import RunConfig
from src.schemas.spectrum import SpectrumTable
from src.schemas.statistics import CanonicalMarginal, OccupationProfile
from src.schemas.trap_model import TrapModel
from src.services.canonical_stats import profile_ladder
from src.services.collision_rates import build_rate_table
from src.services.ensemble_oracle import thermal_marginal
from src.services.overlaps import OverlapProvider
from src.services.trap_spectrum import enumerate_modes
from tests.config import config

logger: logging.Logger = logging.getLogger(__name__)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

@dataclass(frozen=True)
class SteadyRun:
    """Discrete rate table of one steady-state fixture with its canonical reference."""
    run_config: RunConfig
    trap: TrapModel
    spectrum: SpectrumTable
    profiles: tuple[OccupationProfile, ...]
    table: RateTable
    oracle: CanonicalMarginal
    build_seconds: float

def _resized(name: str, n_total: int, cutoff: float) -> RunConfig:
    base = parse_config(FIXTURES / name)
    return RunConfig(**{
        **base.model_dump(),
        "n_total": n_total,
        "energy_cutoff": cutoff,
        "threads": config.E2E_THREADS,
    })

def _steady_run(run_config: RunConfig) -> SteadyRun:
    trap = run_config.to_trap_model()
    spectrum = enumerate_modes(trap)
    started = time.perf_counter()
    provider = OverlapProvider(spectrum, trap).warm()
    profiles = profile_ladder(spectrum, trap.n_total, trap.temperature, config.E2E_THREADS)
    table = build_rate_table(
        spectrum, provider, trap, window=run_config.window, profiles=profiles, threads=config.E2E_THREADS,
    )
    elapsed = time.perf_counter() - started
    logger.info(f"Rate table for N={trap.n_total}, {len(spectrum)} modes built in {elapsed:.1f} s")
    return SteadyRun(
        run_config=run_config,
        trap=trap,
        spectrum=spectrum,
        profiles=tuple(profiles),
        table=table,
        oracle=thermal_marginal(spectrum, trap.n_total, trap.temperature),
        build_seconds=elapsed,
    )

@pytest.fixture(scope="session")
def desk_config() -> RunConfig:
    """Steady-state desk run, resized through the E2E_* environment."""
    run_config = _resized("desk.ini", config.E2E_DESK_N, config.E2E_DESK_CUTOFF)
    logger.info(f"Desk run: N={run_config.n_total}, T={run_config.temperature_nk} nK, cutoff={run_config.energy_cutoff}")
    return run_config

@pytest.fixture(scope="session")
def desk_trap(desk_config: RunConfig) -> TrapModel:
    return desk_config.to_trap_model()

@pytest.fixture(scope="session")
def desk_run(desk_config: RunConfig) -> SteadyRun:
    return _steady_run(desk_config)

@pytest.fixture(scope="session")
def large_run() -> SteadyRun:
    """2000 atoms at 25 nK; size and cutoff come from E2E_LARGE_N and E2E_LARGE_CUTOFF."""
    run_config = _resized("large_steady.ini", config.E2E_LARGE_N, config.E2E_LARGE_CUTOFF)
    logger.info(f"Large run: N={run_config.n_total}, T={run_config.temperature_nk} nK, cutoff={run_config.energy_cutoff}")
    return _steady_run(run_config)

@pytest.fixture(scope="session")
def formation_config() -> RunConfig:
    base = parse_config(FIXTURES / "formation.ini")
    return RunConfig(**{
        **base.model_dump(),
        "t_final_s": config.E2E_FORMATION_HORIZON_S,
        "threads": config.E2E_THREADS,
    })
