from dataclasses import dataclass
import numpy as np
from src.utils.validation_utils import validate_distribution

@dataclass(frozen=True)
class Distribution:
    """Condensate number distribution p(N0) for N0 = 0..N."""
    p: np.ndarray
    n_total: int

    def __post_init__(self):
        p = validate_distribution(self.p)
        if p.shape[0] != self.n_total + 1:
            raise ValueError(f"Distribution length {p.shape[0]} does not match N={self.n_total}")
        object.__setattr__(self, "p", p)

    @classmethod
    def delta(cls, n_total: int, n0: int = 0) -> "Distribution":
        if not 0 <= n0 <= n_total:
            raise ValueError(f"Initial N0={n0} outside 0..{n_total}")
        p = np.zeros(n_total + 1)
        p[n0] = 1.0
        return cls(p, n_total)

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.n_total + 1), self.p))

    @property
    def std(self) -> float:
        n0 = np.arange(self.n_total + 1)
        var = float(np.dot((n0 - self.mean) ** 2, self.p))
        return float(np.sqrt(max(var, 0.0)))

@dataclass(frozen=True)
class Trajectory:
    """
    Time series of the condensate distribution.

    ``times``/``means``/``stds`` cover every output point; ``snapshots`` hold
    full distributions at ``snapshot_times`` (a decimated subset).
    """
    times: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    snapshot_times: np.ndarray
    snapshots: tuple[Distribution, ...]
    clipped_mass: float
    steps: int
