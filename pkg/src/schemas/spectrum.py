from dataclasses import dataclass, field
import numpy as np

@dataclass(frozen=True)
class Mode:
    """A single excited eigenmode of the harmonic trap."""
    nx: int
    ny: int
    nz: int
    energy: float

@dataclass(frozen=True)
class SpectrumTable:
    """
    Excited single-particle modes sorted by energy (ties broken by (nx, ny, nz)).

    Attributes:
        quantum_numbers: (M, 3) integer array of (nx, ny, nz).
        energies: (M,) absolute mode energies in J.
        excitation: (M,) energies above the ground energy, computed from the
            quantum numbers directly so that no cancellation occurs.
        ground_energy: energy of the condensate mode (0, 0, 0) in J.
        cutoff_energy: largest admitted excitation energy in J.
        omegas: trap angular frequencies the spectrum was built for.
    """
    quantum_numbers: np.ndarray
    energies: np.ndarray
    excitation: np.ndarray
    ground_energy: float
    cutoff_energy: float
    omegas: tuple[float, float, float]
    _modes: tuple[Mode, ...] | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return int(self.energies.shape[0])

    @property
    def n_max(self) -> tuple[int, int, int]:
        """Largest quantum number per axis (0 for an axis never excited)."""
        if len(self) == 0:
            return (0, 0, 0)
        top = self.quantum_numbers.max(axis=0)
        return (int(top[0]), int(top[1]), int(top[2]))

    @property
    def modes(self) -> tuple[Mode, ...]:
        if self._modes is None:
            built = tuple(
                Mode(int(q[0]), int(q[1]), int(q[2]), float(e))
                for q, e in zip(self.quantum_numbers, self.energies)
            )
            object.__setattr__(self, "_modes", built)
        return self._modes  # type: ignore[return-value]

    def index_of(self, numbers: tuple[int, int, int]) -> int:
        """Position of a mode given its quantum numbers."""
        hits = np.flatnonzero(np.all(self.quantum_numbers == np.asarray(numbers), axis=1))
        if hits.size == 0:
            raise ValueError(f"Mode {numbers} is not part of the spectrum")
        return int(hits[0])

@dataclass(frozen=True)
class EnergyLevels:
    """
    Exactly degenerate groups of modes.

    ``members[starts[g]:starts[g+1]]`` are the mode indices of level ``g``;
    modes are contiguous because the spectrum is sorted by energy.
    """
    excitation: np.ndarray
    starts: np.ndarray
    level_of_mode: np.ndarray

    def __len__(self) -> int:
        return int(self.excitation.shape[0])

    def members(self, g: int) -> np.ndarray:
        return np.arange(self.starts[g], self.starts[g + 1])

    @property
    def degeneracy(self) -> np.ndarray:
        return np.diff(self.starts)
