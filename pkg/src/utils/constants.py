from scipy import constants as sc  # type: ignore

HBAR: float = sc.hbar
K_B: float = sc.k
AMU: float = sc.physical_constants["atomic mass constant"][0]

# Lab-unit conversions used by the run configuration.
NANOKELVIN: float = 1e-9
NANOMETER: float = 1e-9

DEFAULT_ENERGY_CUTOFF: float = 12.0
DEFAULT_WINDOW: float = 8.0

# Relative tolerance for grouping degenerate single-particle energies.
LEVEL_RTOL: float = 1e-12

# CSV output: 17 significant digits round-trip a double.
CSV_FLOAT_FORMAT: str = "%.16e"
CSV_INT_FORMAT: str = "%d"

EXIT_OK: int = 0
EXIT_CONFIG_ERROR: int = 2
EXIT_NUMERIC_FAILURE: int = 3
EXIT_STRUCTURAL_ERROR: int = 4

RUN_MODES: tuple[str, ...] = ("spectrum", "rates", "evolve", "steady", "oracle", "sweep")
