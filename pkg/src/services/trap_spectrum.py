import logging
import math
from typing import Iterable, Sequence
import numpy as np
from src.schemas.spectrum import EnergyLevels, SpectrumTable
from src.schemas.trap_model import TrapModel
from src.utils.constants import HBAR, K_B, LEVEL_RTOL
from src.utils.exceptions import EmptySpectrumError

logger: logging.Logger = logging.getLogger(__name__)

def _sort_key_energy(excitation: np.ndarray, omega_min: float) -> np.ndarray:
    """Excitation in units of hbar*omega_min, rounded so exact degeneracies compare equal."""
    return np.round(excitation / (HBAR * omega_min), 9)

def build_spectrum(trap: TrapModel, numbers: np.ndarray, cutoff_energy: float | None = None) -> SpectrumTable:
    """
    Build a sorted SpectrumTable from an array of (nx, ny, nz) quantum numbers.

    Args:
        trap: Trap whose frequencies define the energies.
        numbers: (M, 3) non-negative integers; (0, 0, 0) must not be included.
        cutoff_energy: Recorded cutoff; defaults to the largest excitation.

    Returns:
        SpectrumTable sorted by energy, ties broken by (nx, ny, nz).

    Raises:
        ValueError: If numbers are malformed or contain the ground mode
        EmptySpectrumError: If no mode is given
    """
    q = np.asarray(numbers, dtype=np.int64).reshape(-1, 3)
    if q.shape[0] == 0:
        raise EmptySpectrumError("Spectrum has no excited modes; the master equation needs a non-condensate")
    if np.any(q < 0):
        raise ValueError("Quantum numbers must be non-negative")
    if np.any(np.all(q == 0, axis=1)):
        raise ValueError("The ground mode (0, 0, 0) is the condensate mode and cannot be an excited mode")
    if np.unique(q, axis=0).shape[0] != q.shape[0]:
        raise ValueError("Quantum number triples must be unique")

    wx, wy, wz = trap.omegas
    excitation = HBAR * (wx * q[:, 0] + wy * q[:, 1] + wz * q[:, 2])
    energies = HBAR * (wx * (q[:, 0] + 0.5) + wy * (q[:, 1] + 0.5) + wz * (q[:, 2] + 0.5))

    key = _sort_key_energy(excitation, min(trap.omegas))
    order = np.lexsort((q[:, 2], q[:, 1], q[:, 0], key))
    q = q[order]
    excitation = excitation[order]
    energies = energies[order]
    for arr in (q, excitation, energies):
        arr.setflags(write=False)

    return SpectrumTable(
        quantum_numbers=q,
        energies=energies,
        excitation=excitation,
        ground_energy=trap.ground_energy,
        cutoff_energy=float(excitation[-1]) if cutoff_energy is None else float(cutoff_energy),
        omegas=trap.omegas,
    )

def enumerate_modes(trap: TrapModel) -> SpectrumTable:
    """
    Enumerate every excited trap eigenmode below the energy cutoff.

    A mode is admitted when its excitation energy above the ground state does
    not exceed ``trap.energy_cutoff * k_B * T``.

    Raises:
        EmptySpectrumError: If the cutoff admits no excited mode
    """
    cutoff = trap.energy_cutoff * K_B * trap.temperature
    wx, wy, wz = trap.omegas
    n_top = [int(math.floor(cutoff / (HBAR * w))) for w in trap.omegas]
    logger.debug(f"Enumerating modes up to {trap.energy_cutoff} k_B*T, per-axis limits {n_top}")

    nx, ny = np.meshgrid(np.arange(n_top[0] + 1), np.arange(n_top[1] + 1), indexing="ij")
    nx = nx.ravel()
    ny = ny.ravel()
    e_xy = HBAR * (wx * nx + wy * ny)
    blocks: list[np.ndarray] = []
    for nz in range(n_top[2] + 1):
        e = e_xy + HBAR * wz * nz
        keep = e <= cutoff
        if nz == 0:
            keep &= (nx + ny) > 0
        if np.any(keep):
            blocks.append(np.column_stack([nx[keep], ny[keep], np.full(int(keep.sum()), nz)]))

    if not blocks:
        raise EmptySpectrumError(
            f"Energy cutoff {trap.energy_cutoff} k_B*T admits no excited mode "
            f"(lowest excitation {HBAR * min(trap.omegas) / (K_B * trap.temperature):.3f} k_B*T)"
        )
    spectrum = build_spectrum(trap, np.vstack(blocks), cutoff_energy=cutoff)
    logger.info(f"Spectrum: {len(spectrum)} excited modes below {trap.energy_cutoff} k_B*T, n_max={spectrum.n_max}")
    return spectrum

def restricted_spectrum(trap: TrapModel, numbers: Iterable[Sequence[int]]) -> SpectrumTable:
    """Spectrum made of an explicit list of excited modes (toy systems and oracles)."""
    return build_spectrum(trap, np.array(list(numbers), dtype=np.int64))

def group_levels(spectrum: SpectrumTable, rtol: float = LEVEL_RTOL) -> EnergyLevels:
    """
    Group exactly degenerate modes into energy levels.

    Two neighbouring modes belong to the same level when their excitation
    energies agree to ``rtol`` relative to the largest excitation.
    """
    e = spectrum.excitation
    tol = rtol * float(np.max(e))
    breaks = np.flatnonzero(np.abs(np.diff(e)) > tol) + 1
    starts = np.concatenate(([0], breaks, [e.shape[0]])).astype(np.int64)
    level_of_mode = np.repeat(np.arange(starts.shape[0] - 1), np.diff(starts))
    excitation = e[starts[:-1]].copy()
    logger.debug(f"Grouped {len(spectrum)} modes into {excitation.shape[0]} levels")
    return EnergyLevels(excitation=excitation, starts=starts, level_of_mode=level_of_mode)

def oscillator_lengths(trap: TrapModel) -> tuple[float, float, float]:
    """Per-axis oscillator lengths sqrt(hbar / (m * omega))."""
    return tuple(math.sqrt(HBAR / (trap.mass * w)) for w in trap.omegas)  # type: ignore[return-value]

def interaction_parameter(trap: TrapModel) -> float:
    """Weak-interaction diagnostic a * N * sqrt(m * omega_bar / hbar)."""
    return trap.scattering_length * trap.n_total * math.sqrt(trap.mass * trap.omega_bar / HBAR)

def spectrum_rows(spectrum: SpectrumTable, temperature: float) -> dict[str, np.ndarray]:
    """Columns of the spectrum CSV dump."""
    return {
        "index": np.arange(len(spectrum)),
        "nx": spectrum.quantum_numbers[:, 0],
        "ny": spectrum.quantum_numbers[:, 1],
        "nz": spectrum.quantum_numbers[:, 2],
        "energy_joule": spectrum.energies,
        "excitation_over_kbt": spectrum.excitation / (K_B * temperature),
    }
