from dataclasses import dataclass
import numpy as np

@dataclass(frozen=True)
class OccupationProfile:
    """
    Constrained canonical occupations of the non-condensate at N_perp particles.

    ``shift`` is the Lagrange parameter measured from the ground energy,
    shift = alpha + beta*eps0, so that beta*(mu_perp - eps0) = -shift exactly.
    For the empty non-condensate alpha and shift are +inf and mu_perp is -inf.
    """
    n_perp: int
    alpha: float
    shift: float
    mu_perp: float
    occupations: np.ndarray
    temperature: float

    @property
    def is_empty(self) -> bool:
        return self.n_perp == 0

@dataclass(frozen=True)
class CanonicalTables:
    """Log partition sums ln Z_perp(n) of the excited modes for n = 0..n_max."""
    ln_z: np.ndarray
    temperature: float

    @property
    def n_max(self) -> int:
        return int(self.ln_z.shape[0] - 1)

@dataclass(frozen=True)
class CanonicalMarginal:
    """Condensate-number marginal of the N-particle canonical state."""
    p_th: np.ndarray
    temperature: float
    mean: float
    std: float

    @property
    def n_total(self) -> int:
        return int(self.p_th.shape[0] - 1)

@dataclass(frozen=True)
class CondensateCurves:
    """
    Condensate fraction and fluctuation versus temperature.

    The kinetics columns hold nan when the steady state was not computed.
    """
    temperatures: np.ndarray
    t_over_tc: np.ndarray
    fraction_oracle: np.ndarray
    std_oracle: np.ndarray
    fraction_kinetics: np.ndarray
    std_kinetics: np.ndarray
    critical_temperature: float
