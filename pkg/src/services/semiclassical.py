"""
Density-of-states reduction of the single-particle collision rates.

Mode sums are replaced by sums over an energy grid E_i = i * hbar * Gamma with
weights g(E_i) * hbar * Gamma, g(E) = E^2 / (2 hbar^3 omega_x omega_y omega_z).
The sum over the outgoing mode m becomes a discrete convolution with the
broadened delta factor, and |zeta|^2 is replaced by a kernel averaged over
sampled mode pairs of the discrete spectrum on a coarse energy grid.
Occupations on the grid reuse the Lagrange shift of the discrete-spectrum
profiles, so mu_perp(N_perp) is the same in both rate modes.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence
import numpy as np
from src.schemas.spectrum import SpectrumTable
from src.schemas.statistics import OccupationProfile
from src.schemas.trap_model import TrapModel
from src.services.canonical_stats import bose_occupations, profile_ladder
from src.services.collision_rates import delta_gamma, single_particle_prefactor
from src.services.overlaps import OverlapProvider
from src.utils.constants import DEFAULT_WINDOW, HBAR, K_B

logger: logging.Logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class EnergyGrid:
    """Fine grid of excitation energies with density-of-states weights."""
    index_offset: int
    energies: np.ndarray
    weights: np.ndarray
    step: float

    def __len__(self) -> int:
        return int(self.energies.shape[0])

def density_of_states(energy: np.ndarray, trap: TrapModel) -> np.ndarray:
    """g(E) = E^2 / (2 hbar^3 omega_x omega_y omega_z) in 1/J."""
    wx, wy, wz = trap.omegas
    return np.asarray(energy, dtype=float) ** 2 / (2.0 * HBAR ** 3 * wx * wy * wz)

def energy_grid(trap: TrapModel, lowest_excitation: float) -> EnergyGrid:
    """
    Grid points i * hbar * Gamma from the lowest trap excitation up to the cutoff.

    Raises:
        ValueError: If the cutoff lies below the lowest excitation
    """
    step = HBAR * trap.gamma
    cutoff = trap.energy_cutoff * K_B * trap.temperature
    i_min = max(1, int(math.ceil(lowest_excitation / step)))
    i_max = int(math.floor(cutoff / step))
    if i_max < i_min:
        raise ValueError("Energy cutoff lies below the lowest trap excitation")
    idx = np.arange(i_min, i_max + 1)
    energies = idx * step
    return EnergyGrid(
        index_offset=i_min,
        energies=energies,
        weights=density_of_states(energies, trap) * step,
        step=step,
    )

def _sample_indices(members: np.ndarray, count: int) -> np.ndarray:
    """Evenly spaced, deterministic subsample of a sorted index array."""
    if members.size <= count:
        return members
    picks = np.unique(np.linspace(0, members.size - 1, count).round().astype(np.int64))
    return members[picks]

def _pair_kernel_value(
    spectrum: SpectrumTable,
    overlaps: OverlapProvider,
    ks: np.ndarray,
    ls: np.ndarray,
    gamma: float,
    tol: float,
    ) -> float:
    """Mean over the pairs (ks[i], ls[i]) of sum_m zeta^2 delta / sum_m delta."""
    e = spectrum.excitation
    q = spectrum.quantum_numbers
    values: list[float] = []
    for k, l in zip(ks, ls):
        target = e[k] + e[l]
        lo = int(np.searchsorted(e, target - tol, side="left"))
        hi = int(np.searchsorted(e, target + tol, side="right"))
        if hi <= lo:
            continue
        ms = np.arange(lo, hi)
        delta = delta_gamma((target - e[ms]) / HBAR, gamma)
        norm = float(np.sum(delta))
        if norm <= 0:
            continue
        z = overlaps.zeta_numbers(q[k], q[l], q[ms])
        values.append(float(np.sum(z * z * delta)) / norm)
    return float(np.mean(values)) if values else 0.0

def coarse_kernel(
    spectrum: SpectrumTable,
    overlaps: OverlapProvider,
    trap: TrapModel,
    edges: np.ndarray,
    kernel_samples: int = 16,
    window: float = DEFAULT_WINDOW,
    threads: int = 1,
    ) -> np.ndarray:
    """
    Averaged |zeta_{kl}^{m0}|^2 per pair of coarse energy bins (m^-6).

    For bins (u, v), up to ``kernel_samples`` modes k in u and l in v are
    paired deterministically. Each pair contributes its delta-weighted mean of
    |zeta|^2 over outgoing modes m within the window. Bins without modes or
    without admissible m keep a zero kernel.
    """
    overlaps.warm()
    e = spectrum.excitation
    tol = window * HBAR * trap.gamma
    n_bins = edges.size - 1
    bin_of_mode = np.clip(np.searchsorted(edges, e, side="right") - 1, 0, n_bins - 1)
    samples = [_sample_indices(np.flatnonzero(bin_of_mode == b), kernel_samples) for b in range(n_bins)]

    def row(u: int) -> np.ndarray:
        out = np.zeros(n_bins)
        for v in range(u, n_bins):
            ks, ls = samples[u], samples[v]
            if ks.size == 0 or ls.size == 0:
                continue
            count = max(ks.size, ls.size)
            out[v] = _pair_kernel_value(
                spectrum, overlaps, np.resize(ks, count), np.resize(ls, count), trap.gamma, tol
            )
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, range(n_bins)))
    else:
        rows = [row(u) for u in range(n_bins)]
    upper = np.vstack(rows)
    kernel = np.triu(upper) + np.triu(upper, 1).T
    logger.info(f"Semiclassical kernel on {n_bins} bins, {int(np.count_nonzero(kernel))} non-zero entries")
    return kernel

def fine_kernel(grid: EnergyGrid, edges: np.ndarray, coarse: np.ndarray) -> np.ndarray:
    """Piecewise-constant lookup of the coarse kernel on the fine grid."""
    n_bins = edges.size - 1
    b = np.clip(np.searchsorted(edges, grid.energies, side="right") - 1, 0, n_bins - 1)
    return coarse[np.ix_(b, b)]

def convolved_factor(grid: EnergyGrid, x: np.ndarray, window: float) -> np.ndarray:
    """
    h[t] = sum_d x[t + i0 - d] * delta(d * Gamma) for pair-index sums t = i + j.

    ``x`` lives on the grid; outgoing energies beyond the grid contribute zero.
    """
    gamma = grid.step / HBAR
    w = int(math.ceil(window))
    d = np.arange(-w, w + 1)
    kernel = np.asarray(delta_gamma(d * gamma, gamma))
    full = np.convolve(x, kernel)
    size = 2 * len(grid) - 1
    t = np.arange(size) + grid.index_offset + w
    h = np.zeros(size)
    inside = t < full.size
    h[inside] = full[t[inside]]
    return h

def semiclassical_rates(
    spectrum: SpectrumTable,
    overlaps: OverlapProvider,
    trap: TrapModel,
    window: float = DEFAULT_WINDOW,
    kernel_bins: int = 24,
    kernel_samples: int = 16,
    threads: int = 1,
    profiles: Sequence[OccupationProfile] | None = None,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    lambda+/- and mu_perp for N_perp = 0..N in the density-of-states picture.

    The occupations on the grid are Bose factors with the Lagrange shift of
    the discrete-spectrum profile at each N_perp, so both rate modes share
    mu_perp(N_perp) and the feeding/loss ratio exp(beta*(mu_perp - eps0)).

    Args:
        profiles: Discrete profiles for N_perp = 0..N; solved when omitted.

    Returns:
        (lambda_plus, lambda_minus, mu_perp), each indexed by N_perp.

    Raises:
        ValueError: If the profiles do not cover 0..N
    """
    n_total = trap.n_total
    if profiles is None:
        profiles = profile_ladder(spectrum, n_total, trap.temperature, threads)
    if len(profiles) != n_total + 1:
        raise ValueError(f"Expected {n_total + 1} profiles, got {len(profiles)}")
    e_min = float(spectrum.excitation[0])
    grid = energy_grid(trap, e_min)
    cutoff = trap.energy_cutoff * K_B * trap.temperature
    edges = np.linspace(grid.energies[0], cutoff, kernel_bins + 1)
    edges[-1] = max(edges[-1], float(spectrum.excitation[-1])) * (1.0 + 1e-12)
    coarse = coarse_kernel(spectrum, overlaps, trap, edges, kernel_samples, window, threads)
    kernel = fine_kernel(grid, edges, coarse)
    pair_sum = np.add.outer(np.arange(len(grid)), np.arange(len(grid)))
    pref = single_particle_prefactor(trap)
    beta = 1.0 / (K_B * trap.temperature)
    # no grid point may sit below the lowest mode the shift was solved for
    energies = np.maximum(grid.energies, e_min)
    logger.info(f"Semiclassical grid: {len(grid)} points of {grid.step:.4e} J")

    plus = np.zeros(n_total + 1)
    minus = np.zeros(n_total + 1)
    mu = np.array([p.mu_perp for p in profiles])
    for n in range(1, n_total + 1):
        occ = bose_occupations(energies, profiles[n].shift, beta)
        filled = grid.weights * occ
        empty = grid.weights * (occ + 1.0)
        h_plus = convolved_factor(grid, empty, window)
        h_minus = convolved_factor(grid, filled, window)
        plus[n] = pref * float(filled @ (kernel * h_plus[pair_sum]) @ filled)
        minus[n] = pref * float(empty @ (kernel * h_minus[pair_sum]) @ empty)
    return plus, minus, mu
