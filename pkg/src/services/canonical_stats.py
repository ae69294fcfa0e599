import logging
import math
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations_with_replacement
from typing import Sequence
import numpy as np
from scipy.optimize import brentq  # type: ignore
from scipy.special import logsumexp  # type: ignore
from src.schemas.spectrum import EnergyLevels, SpectrumTable
from src.schemas.statistics import CanonicalTables, OccupationProfile
from src.services.trap_spectrum import group_levels
from src.utils.constants import K_B
from src.utils.exceptions import NumericRangeError, SolverConvergenceError, StateSpaceTooLargeError
from src.utils.validation_utils import validate_count, validate_positive

logger: logging.Logger = logging.getLogger(__name__)

SOLVER_RTOL: float = 1e-10
MAX_BRACKET_STEPS: int = 400
MAX_BRUTE_FORCE_STATES: int = 1_000_000
_LNZ1_CHUNK: int = 256

def bose_occupations(excitation: np.ndarray, shift: float, beta: float) -> np.ndarray:
    """1 / (exp(beta*e + shift) - 1) for excitation energies e above the ground energy."""
    if math.isinf(shift):
        return np.zeros_like(np.asarray(excitation, dtype=float))
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(beta * np.asarray(excitation, dtype=float) + shift)

def solve_shift(excitation: np.ndarray, weights: np.ndarray, n_perp: float, beta: float) -> float:
    """
    Solve sum_i w_i / (exp(beta*e_i + a) - 1) = n_perp for the shifted parameter a.

    The root is sought in u = ln(beta*e_min + a), which keeps every occupation
    finite and positive for any real u. The constraint sum is strictly
    decreasing in u; the bracket is widened until the signs differ and then
    handed to Brent's method.

    Args:
        excitation: Energies above the ground energy (J), all > 0.
        weights: Degeneracies or density-of-states weights, all > 0.
        n_perp: Target particle number, > 0.
        beta: 1 / (k_B T).

    Returns:
        The shift a = alpha + beta*eps0.

    Raises:
        SolverConvergenceError: If no bracket is found or the residual exceeds 1e-10 relative
    """
    e = np.asarray(excitation, dtype=float)
    w = np.asarray(weights, dtype=float)
    order = int(np.argmin(e))
    e_min = float(e[order])
    rel = beta * (e - e_min)

    def residual(u: float) -> float:
        with np.errstate(over="ignore"):
            return float(np.sum(w / np.expm1(rel + math.exp(u)))) - n_perp

    u_lo = math.log(w[order] / (n_perp + w[order]))
    steps = 0
    while residual(u_lo) <= 0.0:
        u_lo -= 2.0
        steps += 1
        if steps > MAX_BRACKET_STEPS:
            raise SolverConvergenceError(f"No lower bracket for n_perp={n_perp}", bracket=(u_lo, u_lo))
    u_hi = u_lo + 1.0
    while residual(u_hi) >= 0.0:
        u_hi += 1.0
        steps += 1
        if steps > MAX_BRACKET_STEPS or u_hi > 700.0:
            raise SolverConvergenceError(f"No upper bracket for n_perp={n_perp}", bracket=(u_lo, u_hi))
    logger.debug(f"Bracket for n_perp={n_perp}: u in [{u_lo:.6g}, {u_hi:.6g}]")

    try:
        u = brentq(residual, u_lo, u_hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=500)
    except RuntimeError as e:
        raise SolverConvergenceError(
            f"Root finder failed for n_perp={n_perp}: {e}",
            bracket=(math.exp(u_lo) - beta * e_min, math.exp(u_hi) - beta * e_min),
        ) from e
    res = abs(residual(u)) / n_perp
    if res > SOLVER_RTOL:
        raise SolverConvergenceError(
            f"Constraint residual {res:.3e} above {SOLVER_RTOL} for n_perp={n_perp}",
            bracket=(math.exp(u_lo) - beta * e_min, math.exp(u_hi) - beta * e_min),
            residual=res,
        )
    return math.exp(u) - beta * e_min

def weighted_profile(
    excitation: np.ndarray,
    weights: np.ndarray,
    n_perp: float,
    temperature: float,
    ground_energy: float,
    ) -> OccupationProfile:
    """
    Occupation profile over weighted energies (levels or a density-of-states grid).

    ``occupations`` are per unit weight; multiply by the weights to get the
    particle count per entry.
    """
    beta = 1.0 / (K_B * temperature)
    e = np.asarray(excitation, dtype=float)
    if n_perp == 0:
        return OccupationProfile(
            n_perp=0,
            alpha=math.inf,
            shift=math.inf,
            mu_perp=-math.inf,
            occupations=np.zeros_like(e),
            temperature=temperature,
        )
    shift = solve_shift(e, weights, n_perp, beta)
    return OccupationProfile(
        n_perp=int(n_perp),
        alpha=shift - beta * ground_energy,
        shift=shift,
        mu_perp=ground_energy - shift / beta,
        occupations=bose_occupations(e, shift, beta),
        temperature=temperature,
    )

def solve_alpha(
    spectrum: SpectrumTable,
    n_perp: int,
    temperature: float,
    levels: EnergyLevels | None = None,
    ) -> OccupationProfile:
    """
    Constrained canonical occupations of the excited modes at n_perp particles.

    Solved on degenerate energy levels and expanded to one entry per mode in
    spectrum order. n_perp = 0 yields the empty profile (alpha = +inf,
    mu_perp = -inf, all occupations zero).

    Raises:
        ValueError: If n_perp is negative or T is not positive
        SolverConvergenceError: If the root finder does not converge
    """
    validate_count(n_perp, "n_perp")
    validate_positive(temperature, "Temperature")
    levels = group_levels(spectrum) if levels is None else levels
    on_levels = weighted_profile(
        levels.excitation, levels.degeneracy, n_perp, temperature, spectrum.ground_energy
    )
    return OccupationProfile(
        n_perp=on_levels.n_perp,
        alpha=on_levels.alpha,
        shift=on_levels.shift,
        mu_perp=on_levels.mu_perp,
        occupations=on_levels.occupations[levels.level_of_mode],
        temperature=temperature,
    )

def profile_ladder(
    spectrum: SpectrumTable,
    n_total: int,
    temperature: float,
    threads: int = 1,
    ) -> list[OccupationProfile]:
    """Profiles for every N_perp = 0..n_total, in order."""
    levels = group_levels(spectrum)

    def solve(n: int) -> OccupationProfile:
        return solve_alpha(spectrum, n, temperature, levels)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            profiles = list(pool.map(solve, range(n_total + 1)))
    else:
        profiles = [solve(n) for n in range(n_total + 1)]
    logger.info(f"Solved {n_total + 1} occupation profiles at T={temperature:.4e} K")
    return profiles

def chemical_potential_difference(profile: OccupationProfile) -> float:
    """mu_perp - eps0 in J; -inf for the empty profile."""
    if profile.is_empty:
        return -math.inf
    beta = 1.0 / (K_B * profile.temperature)
    return -profile.shift / beta

def _ln_z1(energies: np.ndarray, degeneracy: np.ndarray, beta: float, n_max: int) -> np.ndarray:
    """ln z1(j*beta) for j = 1..n_max, computed in chunks of j."""
    out = np.empty(n_max)
    be = beta * energies
    for start in range(1, n_max + 1, _LNZ1_CHUNK):
        j = np.arange(start, min(start + _LNZ1_CHUNK, n_max + 1), dtype=float)
        out[start - 1:start - 1 + j.size] = logsumexp(-np.outer(j, be), b=degeneracy, axis=1)
    return out

def partition_tables(spectrum: SpectrumTable, n_max: int, temperature: float) -> CanonicalTables:
    """
    ln Z_perp(n) of ideal bosons in the excited modes, n = 0..n_max.

    Uses Z(n) = (1/n) sum_{j=1..n} z1(j*beta) Z(n-j) with absolute mode
    energies, carried out entirely in log space.

    Raises:
        NumericRangeError: If a table entry is not finite
    """
    validate_count(n_max, "n_max")
    validate_positive(temperature, "Temperature")
    beta = 1.0 / (K_B * temperature)
    levels = group_levels(spectrum)
    energies = levels.excitation + spectrum.ground_energy
    ln_z = np.zeros(n_max + 1)
    if n_max > 0:
        ln_z1 = _ln_z1(energies, levels.degeneracy.astype(float), beta, n_max)
        for n in range(1, n_max + 1):
            ln_z[n] = logsumexp(ln_z1[:n] + ln_z[n - 1::-1]) - math.log(n)
    if not np.all(np.isfinite(ln_z)):
        bad = int(np.flatnonzero(~np.isfinite(ln_z))[0])
        raise NumericRangeError(f"ln Z_perp({bad}) is not finite at T={temperature:.4e} K")
    logger.debug(f"Partition tables to n={n_max}: ln Z(n_max)={ln_z[-1]:.6e}")
    return CanonicalTables(ln_z=ln_z, temperature=temperature)

def brute_force_canonical(
    spectrum: SpectrumTable,
    n: int,
    temperature: float,
    max_states: int = MAX_BRUTE_FORCE_STATES,
    ) -> tuple[float, np.ndarray]:
    """
    Exact canonical ln Z and mean occupations by enumerating every Fock state.

    Returns:
        (ln Z, occupations) with occupations aligned with the spectrum.

    Raises:
        StateSpaceTooLargeError: If the number of microstates exceeds max_states
    """
    validate_count(n, "n")
    modes = len(spectrum)
    states = math.comb(modes + n - 1, n)
    if states > max_states:
        raise StateSpaceTooLargeError(
            f"{states} microstates for {n} particles in {modes} modes exceed the limit of {max_states}"
        )
    beta = 1.0 / (K_B * temperature)
    if n == 0:
        return 0.0, np.zeros(modes)
    combos = np.array(list(combinations_with_replacement(range(modes), n)), dtype=np.int64)
    log_weight = -beta * spectrum.energies[combos].sum(axis=1)
    ln_z = float(logsumexp(log_weight))
    prob = np.exp(log_weight - ln_z)
    counts = np.zeros((combos.shape[0], modes))
    np.add.at(counts, (np.repeat(np.arange(combos.shape[0]), n), combos.ravel()), 1.0)
    return ln_z, prob @ counts

def mu_consistency(profiles: Sequence[OccupationProfile], tables: CanonicalTables) -> np.ndarray:
    """
    alpha(n) - [ln Z(n) - ln Z(n-1)] for n = 1..len(profiles)-1.

    Both terms estimate -beta*mu_perp(n); their difference shrinks like 1/n.
    """
    top = min(len(profiles) - 1, tables.n_max)
    alpha = np.array([profiles[n].alpha for n in range(1, top + 1)])
    return alpha - np.diff(tables.ln_z[: top + 1])

def profile_rows(profiles: Sequence[OccupationProfile]) -> dict[str, np.ndarray]:
    """Columns of the occupation-profile CSV dump."""
    return {
        "n_perp": np.array([p.n_perp for p in profiles]),
        "alpha": np.array([p.alpha for p in profiles]),
        "mu_perp_joule": np.array([p.mu_perp for p in profiles]),
    }
