import math
import logging
import numpy as np

logger: logging.Logger = logging.getLogger(__name__)

def validate_positive(value: float, name: str = "Value") -> float:
    """
    Validate a strictly positive, finite number.

    Raises:
        ValueError: If the value is not finite or not strictly positive
    """
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValueError(f'{name} must be a finite number')
    if value <= 0:
        raise ValueError(f'{name} must be strictly positive (got {value})')
    return value

def validate_non_negative(value: float, name: str = "Value") -> float:
    """Validate a finite number that is zero or larger."""
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValueError(f'{name} must be a finite number')
    if value < 0:
        raise ValueError(f'{name} must be non-negative (got {value})')
    return value

def validate_count(value: int, name: str = "Count", minimum: int = 0) -> int:
    """Validate an integer particle count with a lower bound."""
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise ValueError(f'{name} must be an integer')
    if value < minimum:
        raise ValueError(f'{name} must be at least {minimum} (got {value})')
    return int(value)

def validate_energy_cutoff(value: float) -> float:
    """The cutoff is a multiple of k_B*T and must admit at least one thermal unit."""
    validate_positive(value, "Energy cutoff")
    if value < 1:
        raise ValueError(f'Energy cutoff must be at least 1 k_B*T (got {value})')
    return value

def validate_distribution(p: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    """
    Validate a probability vector over N0 = 0..N.

    Raises:
        ValueError: If entries are negative or the total deviates from one
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        msg: str = 'Distribution must be a non-empty 1D array'
        logger.error(msg)
        raise ValueError(msg)
    if not np.all(np.isfinite(p)):
        raise ValueError('Distribution entries must be finite')
    if np.any(p < 0):
        raise ValueError(f'Distribution has negative entries (min {p.min():.3e})')
    total = float(p.sum())
    if abs(total - 1.0) > atol:
        raise ValueError(f'Distribution must sum to one within {atol} (sum {total:.15f})')
    return p
