from dataclasses import dataclass
import numpy as np

RATE_MODES: tuple[str, ...] = ("discrete", "semiclassical")

@dataclass(frozen=True)
class RateTable:
    """
    Feeding and loss rates at fixed N and T.

    ``lambda_*`` and ``mu_perp`` are indexed by N_perp = 0..N; ``xi_*`` and the
    optional pair rates ``gamma_*`` by N0 = 0..N. All rates are in 1/s.
    """
    n_total: int
    temperature: float
    gamma: float
    mode: str
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    xi_plus: np.ndarray
    xi_minus: np.ndarray
    mu_perp: np.ndarray
    gamma_plus: np.ndarray | None = None
    gamma_minus: np.ndarray | None = None

    @classmethod
    def from_lambdas(
        cls,
        lambda_plus: np.ndarray,
        lambda_minus: np.ndarray,
        temperature: float,
        gamma: float,
        mode: str = "discrete",
        mu_perp: np.ndarray | None = None,
        pair_plus: np.ndarray | None = None,
        pair_minus: np.ndarray | None = None,
        ) -> "RateTable":
        """
        Assemble xi+(N0) = 2(N0+1) lambda+(N-N0) and xi-(N0) = 2 N0 lambda-(N-N0).

        Pair rates, when given over N_perp, are re-indexed over N0 unchanged in
        value.
        """
        lp = np.asarray(lambda_plus, dtype=float)
        lm = np.asarray(lambda_minus, dtype=float)
        if lp.shape != lm.shape or lp.ndim != 1 or lp.size < 2:
            raise ValueError(f"Rate arrays must be 1D of equal length >= 2 (got {lp.shape}, {lm.shape})")
        if mode not in RATE_MODES:
            raise ValueError(f"Unknown rate mode '{mode}'")
        if np.any(lp < 0) or np.any(lm < 0):
            raise ValueError("Rates must be non-negative")
        n_total = lp.size - 1
        n0 = np.arange(n_total + 1, dtype=float)
        xi_plus = 2.0 * (n0 + 1.0) * lp[::-1]
        xi_minus = 2.0 * n0 * lm[::-1]
        mu = np.full(n_total + 1, np.nan) if mu_perp is None else np.asarray(mu_perp, dtype=float)
        return cls(
            n_total=n_total,
            temperature=float(temperature),
            gamma=float(gamma),
            mode=mode,
            lambda_plus=lp,
            lambda_minus=lm,
            xi_plus=xi_plus,
            xi_minus=xi_minus,
            mu_perp=mu,
            gamma_plus=None if pair_plus is None else np.asarray(pair_plus, dtype=float)[::-1].copy(),
            gamma_minus=None if pair_minus is None else np.asarray(pair_minus, dtype=float)[::-1].copy(),
        )
