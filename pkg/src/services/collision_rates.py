import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence
import numpy as np
from src.schemas.rates import RATE_MODES, RateTable
from src.schemas.spectrum import EnergyLevels, SpectrumTable
from src.schemas.statistics import OccupationProfile
from src.schemas.trap_model import TrapModel
from src.services.canonical_stats import profile_ladder
from src.services.overlaps import OverlapProvider
from src.services.trap_spectrum import group_levels
from src.utils.constants import DEFAULT_WINDOW, HBAR, K_B
from src.utils.validation_utils import validate_positive

logger: logging.Logger = logging.getLogger(__name__)

# Largest |delta_omega|/Gamma for which exp(-x^2/4) stays a normal double.
DELTA_RANGE: float = 2.0 * math.sqrt(700.0)
_PAIR_CHUNK: int = 2_000_000

def delta_gamma(delta_omega: float | np.ndarray, gamma: float) -> float | np.ndarray:
    """
    Broadened energy-conservation factor in seconds.

    Re of the half-line integral of exp(-Gamma^2 tau^2) exp(i delta_omega tau),
    i.e. sqrt(pi)/(2 Gamma) * exp(-delta_omega^2 / (4 Gamma^2)).
    """
    if gamma <= 0:
        raise ValueError(f"Gamma must be strictly positive (got {gamma})")
    x = np.asarray(delta_omega, dtype=float) / gamma
    value = math.sqrt(math.pi) / (2.0 * gamma) * np.exp(-0.25 * x * x)
    return float(value) if value.ndim == 0 else value

def single_particle_prefactor(trap: TrapModel) -> float:
    """16 pi^3 hbar^2 a^2 / m^2 in m^6/s^2."""
    return 16.0 * math.pi ** 3 * HBAR ** 2 * trap.scattering_length ** 2 / trap.mass ** 2

def pair_prefactor(trap: TrapModel) -> float:
    """4 pi^3 hbar^2 a^2 / m^2 in m^6/s^2."""
    return 4.0 * math.pi ** 3 * HBAR ** 2 * trap.scattering_length ** 2 / trap.mass ** 2

@dataclass(frozen=True)
class CollisionKernel:
    """
    Single-particle collision sum reduced to level triples.

    For every kept triple (a, b, c) of energy levels, ``weights`` holds
    mult * delta * sum |zeta_{kl}^{m0}|^2 over member modes k in a, l in b,
    m in c, where mult = 2 for a != b accounts for the (b, a) ordering.
    """
    gamma: float
    window: float
    level_starts: np.ndarray
    level_a: np.ndarray
    level_b: np.ndarray
    level_c: np.ndarray
    weights: np.ndarray
    g_modes: np.ndarray | None = None
    g_level_of_mode: np.ndarray | None = None
    g_overlaps: np.ndarray | None = None
    g_delta: np.ndarray | None = None

    def level_occupations(self, profile: OccupationProfile) -> np.ndarray:
        return np.asarray(profile.occupations)[self.level_starts[:-1]]

    @property
    def has_g_terms(self) -> bool:
        return self.g_overlaps is not None

@dataclass(frozen=True)
class PairKernel:
    """Pair-event sum reduced to level pairs a <= b with the same conventions as CollisionKernel."""
    gamma: float
    level_starts: np.ndarray
    level_a: np.ndarray
    level_b: np.ndarray
    weights: np.ndarray

def _ragged_pairs(
    l_start: np.ndarray, l_size: np.ndarray, m_start: np.ndarray, m_size: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All (l, m) index pairs per owner row, flattened; returns (owner, l, m)."""
    counts = l_size * m_size
    total = int(counts.sum())
    owner = np.repeat(np.arange(counts.size), counts)
    offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    per = m_size[owner]
    return owner, l_start[owner] + offsets // per, m_start[owner] + offsets % per

def _parity_code(q: np.ndarray) -> np.ndarray:
    p = q % 2
    return p[..., 0] * 4 + p[..., 1] * 2 + p[..., 2]

def _summed_squares(
    overlaps: OverlapProvider,
    k_modes: np.ndarray,
    owner: np.ndarray,
    l_modes: np.ndarray,
    m_modes: np.ndarray,
    n_owners: int,
    ) -> np.ndarray:
    """sum over k of zeta(k, l, m)^2, accumulated per owner row; parity-forbidden combinations are skipped."""
    q = overlaps.spectrum.quantum_numbers
    out = np.zeros(n_owners)
    if owner.size == 0:
        return out
    lm_code = _parity_code(q[l_modes] + q[m_modes])
    k_code = _parity_code(q[k_modes])
    for code in np.unique(k_code):
        ks = k_modes[k_code == code]
        sel = np.flatnonzero(lm_code == code)
        if sel.size == 0:
            continue
        qk = q[ks][:, None, :]
        step = max(1, _PAIR_CHUNK // ks.size)
        for start in range(0, sel.size, step):
            part = sel[start:start + step]
            z = overlaps.zeta_numbers(qk, q[l_modes[part]][None, :, :], q[m_modes[part]][None, :, :])
            out += np.bincount(owner[part], weights=np.einsum("kp,kp->p", z, z), minlength=n_owners)
    return out

def _kernel_rows(
    a: int,
    levels: EnergyLevels,
    overlaps: OverlapProvider,
    gamma: float,
    tol: float,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    e = levels.excitation
    deg = levels.degeneracy
    starts = levels.starts
    b_hi = int(np.searchsorted(e, e[-1] - e[a] + tol, side="right"))
    bs = np.arange(a, max(a, b_hi))
    empty = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64), np.empty(0))
    if bs.size == 0:
        return empty
    target = e[a] + e[bs]
    c_lo = np.searchsorted(e, target - tol, side="left")
    c_hi = np.searchsorted(e, target + tol, side="right")
    counts = c_hi - c_lo
    if counts.sum() == 0:
        return empty
    b_t = np.repeat(bs, counts)
    c_t = np.repeat(c_lo, counts) + (np.arange(int(counts.sum())) - np.repeat(np.cumsum(counts) - counts, counts))

    k_modes = levels.members(a)
    pair_counts = deg[b_t] * deg[c_t]
    summed = np.zeros(b_t.size)
    bounds = np.searchsorted(np.cumsum(pair_counts), np.arange(_PAIR_CHUNK, int(pair_counts.sum()), _PAIR_CHUNK))
    for lo, hi in zip(np.concatenate(([0], bounds)), np.concatenate((bounds, [b_t.size]))):
        if hi <= lo:
            continue
        rows = slice(int(lo), int(hi))
        owner, l_modes, m_modes = _ragged_pairs(starts[b_t[rows]], deg[b_t[rows]], starts[c_t[rows]], deg[c_t[rows]])
        summed[rows] = _summed_squares(overlaps, k_modes, owner, l_modes, m_modes, int(hi - lo))

    delta = delta_gamma((e[a] + e[b_t] - e[c_t]) / HBAR, gamma)
    weights = np.where(b_t == a, 1.0, 2.0) * summed * delta
    keep = weights > 0
    return b_t[keep], c_t[keep], weights[keep]

def build_collision_kernel(
    spectrum: SpectrumTable,
    overlaps: OverlapProvider,
    gamma: float,
    window: float = DEFAULT_WINDOW,
    levels: EnergyLevels | None = None,
    threads: int = 1,
    include_g_terms: bool = False,
    ) -> CollisionKernel:
    """
    Precompute the occupation-independent part of the single-particle rates.

    Triples are kept when the energy mismatch satisfies |e_k + e_l - e_m| <=
    window * hbar * Gamma and at least one member combination passes parity
    selection. ``window=math.inf`` keeps every triple.

    Args:
        spectrum: Excited modes.
        overlaps: Overlap provider for the same spectrum.
        gamma: Correlation decay rate (1/s).
        window: Pruning half-width in units of Gamma.
        levels: Pre-grouped levels of the spectrum.
        threads: Worker count; the result does not depend on it.
        include_g_terms: Also precompute the overlap sums of the g-type terms.

    Returns:
        CollisionKernel
    """
    validate_positive(gamma, "Gamma")
    levels = group_levels(spectrum) if levels is None else levels
    overlaps.warm()
    tol = window * HBAR * gamma

    def rows(a: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return _kernel_rows(a, levels, overlaps, gamma, tol)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(rows, range(len(levels))))
    else:
        parts = [rows(a) for a in range(len(levels))]

    level_a = np.concatenate([np.full(p[0].size, a, dtype=np.int64) for a, p in enumerate(parts)])
    level_b = np.concatenate([p[0] for p in parts]).astype(np.int64)
    level_c = np.concatenate([p[1] for p in parts]).astype(np.int64)
    weights = np.concatenate([p[2] for p in parts])
    logger.info(
        f"Collision kernel: {weights.size} level triples over {len(levels)} levels "
        f"(window {window} Gamma, Gamma={gamma} 1/s)"
    )

    g_fields: dict = {}
    if include_g_terms:
        g_fields = _g_term_data(spectrum, overlaps, levels, gamma, tol)
    return CollisionKernel(
        gamma=gamma,
        window=window,
        level_starts=levels.starts,
        level_a=level_a,
        level_b=level_b,
        level_c=level_c,
        weights=weights,
        **g_fields,
    )

def _g_term_data(
    spectrum: SpectrumTable,
    overlaps: OverlapProvider,
    levels: EnergyLevels,
    gamma: float,
    tol: float,
    ) -> dict:
    """
    Overlap sums D[l, g] = sum over k in level g of integral chi_0 chi_k^2 chi_l.

    Only modes l with even quantum numbers on every axis can have a non-zero
    overlap, and only those with e_l <= tol survive the delta factor.
    """
    q = spectrum.quantum_numbers
    candidates = np.flatnonzero(np.all(q % 2 == 0, axis=1) & (spectrum.excitation <= tol))
    if candidates.size == 0:
        logger.debug("No mode qualifies for the g-type terms")
        return {
            "g_modes": candidates,
            "g_level_of_mode": candidates,
            "g_overlaps": np.zeros((0, len(levels))),
            "g_delta": np.zeros(0),
        }
    all_modes = np.arange(len(spectrum))
    d = overlaps.g_term_overlaps(all_modes[None, :], candidates[:, None])
    per_level = np.add.reduceat(d, levels.starts[:-1], axis=1)
    return {
        "g_modes": candidates,
        "g_level_of_mode": levels.level_of_mode[candidates],
        "g_overlaps": per_level,
        "g_delta": np.asarray(delta_gamma(spectrum.excitation[candidates] / HBAR, gamma)),
    }

def single_particle_rates(
    kernel: CollisionKernel,
    profile: OccupationProfile,
    trap: TrapModel,
    include_g_terms: bool = False,
    ) -> tuple[float, float]:
    """
    Feeding and loss rates lambda+/- for one occupation profile (1/s).

    The empty profile yields (0, 0) because every weight carries an
    occupation factor.
    """
    if profile.is_empty:
        return 0.0, 0.0
    n = kernel.level_occupations(profile)
    na, nb, nc = n[kernel.level_a], n[kernel.level_b], n[kernel.level_c]
    pref = single_particle_prefactor(trap)
    plus = pref * float(np.sum(kernel.weights * na * nb * (nc + 1.0)))
    minus = pref * float(np.sum(kernel.weights * (na + 1.0) * (nb + 1.0) * nc))
    if include_g_terms:
        g_plus, g_minus = g_term_rates(kernel, profile, trap)
        plus += g_plus
        minus += g_minus
    return plus, minus

def g_term_rates(kernel: CollisionKernel, profile: OccupationProfile, trap: TrapModel) -> tuple[float, float]:
    """Contribution of the g-type weights to lambda+/- (1/s)."""
    if not kernel.has_g_terms:
        raise ValueError("Collision kernel was built without g-type terms")
    if profile.is_empty or kernel.g_delta.size == 0:  # type: ignore[union-attr]
        return 0.0, 0.0
    n = kernel.level_occupations(profile)
    amplitude = kernel.g_overlaps @ n  # type: ignore[operator]
    n_l = n[kernel.g_level_of_mode]
    pref = single_particle_prefactor(trap)
    plus = 2.0 * pref * float(np.sum(kernel.g_delta * n_l * amplitude ** 2))
    minus = 2.0 * pref * float(np.sum(kernel.g_delta * (n_l + 1.0) * amplitude ** 2))
    return plus, minus

def g_term_ratio(kernel: CollisionKernel, profile: OccupationProfile, trap: TrapModel) -> tuple[float, float]:
    """(g+/f+, g-/f-) for one profile; nan where the f rate vanishes."""
    f_plus, f_minus = single_particle_rates(kernel, profile, trap)
    g_plus, g_minus = g_term_rates(kernel, profile, trap)
    return (
        g_plus / f_plus if f_plus > 0 else math.nan,
        g_minus / f_minus if f_minus > 0 else math.nan,
    )

def build_pair_kernel(
    spectrum: SpectrumTable,
    overlaps: OverlapProvider,
    gamma: float,
    levels: EnergyLevels | None = None,
    ) -> PairKernel:
    """
    Level pairs a <= b for the pair events.

    Every pair whose delta factor is representable is kept; pair events are
    far off-shell in a three-dimensional trap, so the kernel is usually tiny
    or empty.
    """
    validate_positive(gamma, "Gamma")
    levels = group_levels(spectrum) if levels is None else levels
    overlaps.warm()
    e = levels.excitation
    tol = DELTA_RANGE * HBAR * gamma
    q = spectrum.quantum_numbers
    zero = np.zeros(3, dtype=np.int64)
    rows_a: list[int] = []
    rows_b: list[int] = []
    rows_w: list[float] = []
    for a in range(len(levels)):
        if 2.0 * e[a] > tol:
            break
        b_hi = int(np.searchsorted(e, tol - e[a], side="right"))
        ks = levels.members(a)
        for b in range(a, b_hi):
            ls = levels.members(b)
            z = overlaps.zeta_numbers(q[ks][:, None, :], q[ls][None, :, :], zero)
            total = float(np.sum(z * z)) * (1.0 if a == b else 2.0)
            weight = total * float(delta_gamma((e[a] + e[b]) / HBAR, gamma))
            if weight > 0:
                rows_a.append(a)
                rows_b.append(b)
                rows_w.append(weight)
    logger.info(f"Pair kernel: {len(rows_w)} level pairs within {DELTA_RANGE:.1f} Gamma")
    return PairKernel(
        gamma=gamma,
        level_starts=levels.starts,
        level_a=np.asarray(rows_a, dtype=np.int64),
        level_b=np.asarray(rows_b, dtype=np.int64),
        weights=np.asarray(rows_w, dtype=float),
    )

def pair_rates(kernel: PairKernel, profile: OccupationProfile, trap: TrapModel) -> tuple[float, float]:
    """Pair feeding and loss rates lambda+/- for one profile (1/s)."""
    if kernel.weights.size == 0:
        return 0.0, 0.0
    n = np.asarray(profile.occupations)[kernel.level_starts[:-1]]
    na, nb = n[kernel.level_a], n[kernel.level_b]
    pref = pair_prefactor(trap)
    plus = pref * float(np.sum(kernel.weights * na * nb))
    minus = pref * float(np.sum(kernel.weights * (na + 1.0) * (nb + 1.0)))
    return plus, minus

def minimal_pair_mismatch(spectrum: SpectrumTable) -> float:
    """min over k, l of |omega_k + omega_l - 2 omega_0| (rad/s)."""
    return 2.0 * float(np.min(spectrum.excitation)) / HBAR

def thermal_peak_density(trap: TrapModel) -> float:
    """Peak density N (m omega_bar^2 / (2 pi k_B T))^(3/2) of a classical cloud (m^-3)."""
    return trap.n_total * (trap.mass * trap.omega_bar ** 2 / (2.0 * math.pi * K_B * trap.temperature)) ** 1.5

def kinetic_gamma_estimate(trap: TrapModel, density: float | None = None) -> float:
    """
    Kinetic collision-rate estimate a^2 * density * v with v = sqrt(3 k_B T / m).

    Reported next to the configured Gamma for comparison only.
    """
    rho = thermal_peak_density(trap) if density is None else density
    v = math.sqrt(3.0 * K_B * trap.temperature / trap.mass)
    return trap.scattering_length ** 2 * rho * v

def gamma_sensitivity(
    spectrum: SpectrumTable,
    overlaps: OverlapProvider,
    trap: TrapModel,
    profile: OccupationProfile,
    factors: Sequence[float] = (0.5, 1.0, 2.0),
    window: float = DEFAULT_WINDOW,
    ) -> list[tuple[float, float, float]]:
    """(factor, lambda+, lambda-) for Gamma scaled by each factor, profile held fixed."""
    levels = group_levels(spectrum)
    out: list[tuple[float, float, float]] = []
    for factor in factors:
        kernel = build_collision_kernel(spectrum, overlaps, trap.gamma * factor, window, levels)
        plus, minus = single_particle_rates(kernel, profile, trap)
        out.append((float(factor), plus, minus))
    return out

def detailed_balance_residual(table: RateTable, profiles: Sequence[OccupationProfile]) -> np.ndarray:
    """
    r(N_perp) = lambda+ / (lambda- exp(beta*dmu)) - 1 over N_perp = 0..N.

    beta*dmu = -shift exactly, so r = expm1(ln lambda+ - ln lambda- + shift).
    Entries with lambda- = 0 are nan.
    """
    if len(profiles) != table.n_total + 1:
        raise ValueError(f"Expected {table.n_total + 1} profiles, got {len(profiles)}")
    out = np.full(table.n_total + 1, np.nan)
    for n, profile in enumerate(profiles):
        lp, lm = table.lambda_plus[n], table.lambda_minus[n]
        if lm <= 0 or profile.is_empty:
            continue
        if lp <= 0:
            out[n] = -1.0
            continue
        out[n] = math.expm1(math.log(lp) - math.log(lm) + profile.shift)
    return out

def build_rate_table(
    spectrum: SpectrumTable,
    overlaps: OverlapProvider,
    trap: TrapModel,
    mode: str = "discrete",
    window: float = DEFAULT_WINDOW,
    profiles: Sequence[OccupationProfile] | None = None,
    include_g_terms: bool = False,
    include_pair_rates: bool = False,
    threads: int = 1,
    kernel_bins: int = 24,
    kernel_samples: int = 16,
    ) -> RateTable:
    """
    Feeding and loss rates for every N_perp = 0..N, assembled into a RateTable.

    Discrete mode sums over the enumerated modes through a CollisionKernel;
    semiclassical mode replaces the mode sums by density-of-states integrals
    (see ``src.services.semiclassical``). Pair rates are evaluated on the
    same discrete profiles when requested.

    Raises:
        ValueError: If the mode is unknown
    """
    if mode not in RATE_MODES:
        raise ValueError(f"Unknown rate mode '{mode}' (expected one of {RATE_MODES})")
    n_total = trap.n_total
    temperature = trap.temperature
    levels = group_levels(spectrum)
    if profiles is None:
        profiles = profile_ladder(spectrum, n_total, temperature, threads)

    if mode == "semiclassical":
        from src.services.semiclassical import semiclassical_rates

        lp, lm, mu = semiclassical_rates(
            spectrum, overlaps, trap, window=window, kernel_bins=kernel_bins,
            kernel_samples=kernel_samples, threads=threads, profiles=profiles,
        )
    else:
        kernel = build_collision_kernel(
            spectrum, overlaps, trap.gamma, window, levels, threads, include_g_terms
        )
        pairs = [single_particle_rates(kernel, p, trap, include_g_terms) for p in profiles]
        lp = np.array([p[0] for p in pairs])
        lm = np.array([p[1] for p in pairs])
        mu = np.array([p.mu_perp for p in profiles])

    pair_plus = pair_minus = None
    if include_pair_rates:
        pair_kernel = build_pair_kernel(spectrum, overlaps, trap.gamma, levels)
        pr = [pair_rates(pair_kernel, p, trap) for p in profiles]
        pair_plus = np.array([r[0] for r in pr])
        pair_minus = np.array([r[1] for r in pr])

    table = RateTable.from_lambdas(
        lp, lm, temperature, trap.gamma, mode=mode, mu_perp=mu,
        pair_plus=pair_plus, pair_minus=pair_minus,
    )
    logger.info(
        f"Rate table ({mode}) for N={n_total}, T={temperature:.4e} K: "
        f"max lambda+={lp.max():.4e} 1/s, max lambda-={lm.max():.4e} 1/s"
    )
    return table

def rate_rows(table: RateTable) -> dict[str, np.ndarray]:
    """Columns of the rate-table CSV dump, one row per N0."""
    n0 = np.arange(table.n_total + 1)
    rows: dict[str, np.ndarray] = {
        "n0": n0,
        "n_perp": table.n_total - n0,
        "lambda_plus": table.lambda_plus[::-1],
        "lambda_minus": table.lambda_minus[::-1],
        "xi_plus": table.xi_plus,
        "xi_minus": table.xi_minus,
    }
    if table.gamma_plus is not None and table.gamma_minus is not None:
        rows["gamma_plus"] = table.gamma_plus
        rows["gamma_minus"] = table.gamma_minus
    rows["mu_perp_joule"] = table.mu_perp[::-1]
    return rows
