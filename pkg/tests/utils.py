import numpy as np
from src.schemas.rates import RateTable

def make_table(xi_plus, xi_minus, temperature: float = 1e-8, gamma: float = 1.0) -> RateTable:
    """RateTable with hand-set xi rates; lambdas are back-filled from the xi definitions."""
    up = np.asarray(xi_plus, dtype=float)
    down = np.asarray(xi_minus, dtype=float)
    n = up.size - 1
    n0 = np.arange(n + 1)
    lambda_plus = (up / (2.0 * (n0 + 1)))[::-1].copy()
    lambda_minus = np.where(n0 > 0, down / np.maximum(2.0 * n0, 1.0), 0.0)[::-1].copy()
    return RateTable(
        n_total=n,
        temperature=temperature,
        gamma=gamma,
        mode="discrete",
        lambda_plus=lambda_plus,
        lambda_minus=lambda_minus,
        xi_plus=up,
        xi_minus=down,
        mu_perp=np.full(n + 1, np.nan),
    )
