import logging
import math
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations_with_replacement
from typing import Callable, Sequence
import numpy as np
from scipy.special import logsumexp, zeta  # type: ignore
from src.schemas.distribution import Distribution
from src.schemas.spectrum import SpectrumTable
from src.schemas.statistics import CanonicalMarginal, CanonicalTables, CondensateCurves
from src.schemas.trap_model import TrapModel
from src.services.canonical_stats import MAX_BRUTE_FORCE_STATES, partition_tables
from src.utils.constants import HBAR, K_B
from src.utils.exceptions import StateSpaceTooLargeError
from src.utils.validation_utils import validate_count, validate_positive

logger: logging.Logger = logging.getLogger(__name__)

ZETA3: float = float(zeta(3.0, 1.0))
TRANSITION_FRACTION: float = 0.05

def _marginal(log_p: np.ndarray, temperature: float) -> CanonicalMarginal:
    p = np.exp(log_p - logsumexp(log_p))
    p /= p.sum()
    n0 = np.arange(p.size)
    mean = float(n0 @ p)
    std = math.sqrt(max(float(((n0 - mean) ** 2) @ p), 0.0))
    return CanonicalMarginal(p_th=p, temperature=temperature, mean=mean, std=std)

def thermal_marginal(
    spectrum: SpectrumTable,
    n_total: int,
    temperature: float,
    tables: CanonicalTables | None = None,
    ) -> CanonicalMarginal:
    """
    Condensate-number marginal of the N-particle canonical state.

    ln p(N0) = -beta*eps0*N0 + ln Z_perp(N - N0) up to normalization, which is
    the recursion p(N0)/p(N0+1) = exp(beta*eps0) Z_perp(N-N0)/Z_perp(N-N0-1)
    written in closed form.
    """
    validate_count(n_total, "N", minimum=1)
    validate_positive(temperature, "Temperature")
    if tables is None or tables.n_max < n_total or tables.temperature != temperature:
        tables = partition_tables(spectrum, n_total, temperature)
    beta = 1.0 / (K_B * temperature)
    n0 = np.arange(n_total + 1)
    log_p = -beta * spectrum.ground_energy * n0 + tables.ln_z[n_total - n0]
    return _marginal(log_p, temperature)

def critical_temperature(trap: TrapModel, n_total: int | None = None) -> float:
    """Semiclassical T_c = (hbar omega_bar / k_B) (N / zeta(3))^(1/3) in K."""
    n = trap.n_total if n_total is None else n_total
    validate_count(n, "N", minimum=1)
    return HBAR * trap.omega_bar / K_B * (n / ZETA3) ** (1.0 / 3.0)

def enumerate_condensate_marginal(
    spectrum: SpectrumTable,
    n_total: int,
    temperature: float,
    max_states: int = MAX_BRUTE_FORCE_STATES,
    ) -> np.ndarray:
    """
    Brute-force p(N0) over every Fock state of the ground mode plus the excited modes.

    Raises:
        StateSpaceTooLargeError: If the number of microstates exceeds max_states
    """
    modes = len(spectrum) + 1
    states = math.comb(modes + n_total - 1, n_total)
    if states > max_states:
        raise StateSpaceTooLargeError(
            f"{states} microstates for {n_total} particles in {modes} modes exceed the limit of {max_states}"
        )
    beta = 1.0 / (K_B * temperature)
    energies = np.concatenate(([spectrum.ground_energy], spectrum.energies))
    combos = np.array(list(combinations_with_replacement(range(modes), n_total)), dtype=np.int64)
    log_weight = -beta * energies[combos].sum(axis=1)
    n0 = (combos == 0).sum(axis=1)
    log_p = np.array([
        logsumexp(log_weight[n0 == k]) if np.any(n0 == k) else -np.inf for k in range(n_total + 1)
    ])
    p = np.exp(log_p - logsumexp(log_p))
    return p / p.sum()

def condensate_curves(
    trap: TrapModel,
    t_grid: Sequence[float],
    spectrum_for: Callable[[TrapModel], SpectrumTable],
    kinetics_for: Callable[[TrapModel, SpectrumTable], Distribution] | None = None,
    threads: int = 1,
    ) -> CondensateCurves:
    """
    Oracle (and optionally kinetics) condensate fraction and fluctuation on a temperature grid.

    The spectrum is rebuilt at every temperature because the cutoff scales
    with k_B*T.

    Args:
        trap: Trap and gas; its temperature is replaced by each grid value.
        t_grid: Temperatures in K, within (0, 1.5 T_c].
        spectrum_for: Builds the spectrum for a trap.
        kinetics_for: Returns the kinetics steady state for a trap and spectrum.
        threads: Workers over the grid.

    Raises:
        ValueError: If a grid temperature lies outside (0, 1.5 T_c]
    """
    tc = critical_temperature(trap)
    temps = np.asarray(t_grid, dtype=float)
    if temps.size == 0 or np.any(temps <= 0) or np.any(temps > 1.5 * tc * (1.0 + 1e-12)):
        raise ValueError(f"Temperature grid must lie within (0, {1.5 * tc:.4e}] K")
    n = trap.n_total

    def point(t: float) -> tuple[float, float, float, float]:
        local = trap.with_updates(temperature=float(t))
        spectrum = spectrum_for(local)
        marginal = thermal_marginal(spectrum, n, float(t))
        if kinetics_for is None:
            return marginal.mean / n, marginal.std, math.nan, math.nan
        steady = kinetics_for(local, spectrum)
        return marginal.mean / n, marginal.std, steady.mean / n, steady.std

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(point, temps))
    else:
        rows = [point(t) for t in temps]
    data = np.array(rows, dtype=float).reshape(-1, 4)
    logger.info(f"Condensate curves on {temps.size} temperatures, T_c={tc:.4e} K")
    return CondensateCurves(
        temperatures=temps,
        t_over_tc=temps / tc,
        fraction_oracle=data[:, 0],
        std_oracle=data[:, 1],
        fraction_kinetics=data[:, 2],
        std_kinetics=data[:, 3],
        critical_temperature=tc,
    )

def apparent_transition_temperature(
    t_over_tc: np.ndarray,
    fraction: np.ndarray,
    threshold: float = TRANSITION_FRACTION,
    ) -> float:
    """
    T/T_c where the condensate fraction first drops below ``threshold``, linearly interpolated.

    Returns nan when the curve never crosses.
    """
    x = np.asarray(t_over_tc, dtype=float)
    y = np.asarray(fraction, dtype=float)
    order = np.argsort(x)
    x, y = x[order], y[order]
    below = np.flatnonzero(y < threshold)
    if below.size == 0 or below[0] == 0:
        return math.nan
    i = int(below[0])
    return float(x[i - 1] + (threshold - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1]))

def fluctuation_peak(t_over_tc: np.ndarray, std: np.ndarray) -> tuple[float, bool]:
    """(T/T_c at the largest std, whether that maximum is interior to the grid)."""
    s = np.asarray(std, dtype=float)
    i = int(np.nanargmax(s))
    return float(np.asarray(t_over_tc)[i]), 0 < i < s.size - 1

def curve_rows(curves: CondensateCurves) -> dict[str, np.ndarray]:
    """Columns of the curves CSV dump."""
    return {
        "t_kelvin": curves.temperatures,
        "t_over_tc": curves.t_over_tc,
        "mean_fraction_oracle": curves.fraction_oracle,
        "std_oracle": curves.std_oracle,
        "mean_fraction_kinetics": curves.fraction_kinetics,
        "std_kinetics": curves.std_kinetics,
    }
