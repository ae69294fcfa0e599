import logging
import math
import threading
from functools import lru_cache
import numpy as np
from scipy.special import roots_hermite  # type: ignore
from src.schemas.spectrum import SpectrumTable
from src.schemas.trap_model import TrapModel
from src.services.trap_spectrum import oscillator_lengths
from src.utils.config import config
from src.utils.exceptions import NumericRangeError

logger: logging.Logger = logging.getLogger(__name__)

_RESCALE_AT: float = 1e150
_PI_QUARTER: float = math.pi ** -0.25

def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """
    Normalized Hermite functions h_0..h_{n_max} at the points ``x``.

    h_n(x) = H_n(x) exp(-x^2/2) / sqrt(2^n n! sqrt(pi)), evaluated with the
    three-term recurrence on the polynomial part and a per-point log scale, so
    that neither the Gaussian nor the polynomial over- or underflows on its own.

    Returns:
        Array of shape (n_max + 1, len(x)).
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1, x.size))
    log_scale = -0.5 * x ** 2
    prev = np.zeros_like(x)
    cur = np.full_like(x, _PI_QUARTER)
    out[0] = cur * np.exp(log_scale)
    for n in range(n_max):
        nxt = math.sqrt(2.0 / (n + 1)) * x * cur - math.sqrt(n / (n + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE_AT
        if np.any(big):
            factor = np.abs(cur[big])
            cur[big] /= factor
            prev[big] /= factor
            log_scale[big] += np.log(factor)
        out[n + 1] = cur * np.exp(log_scale)
    return out

def _log_abs_hermite(n: int, x: np.ndarray) -> np.ndarray:
    """log|h_n(x)|, valid far outside the range where h_n itself is representable."""
    x = np.asarray(x, dtype=float)
    log_scale = -0.5 * x ** 2
    prev = np.zeros_like(x)
    cur = np.full_like(x, _PI_QUARTER)
    for k in range(n):
        nxt = math.sqrt(2.0 / (k + 1)) * x * cur - math.sqrt(k / (k + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE_AT
        if np.any(big):
            factor = np.abs(cur[big])
            cur[big] /= factor
            prev[big] /= factor
            log_scale[big] += np.log(factor)
    return np.log(np.abs(cur)) + log_scale

def scaled_hermite_rule(node_count: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Hermite nodes with weights multiplied by exp(y^2).

    The plain weights underflow for large rules; w_q exp(y_q^2) equals
    1 / (Q h_{Q-1}(y_q)^2) and is evaluated in that form.
    """
    nodes, _ = roots_hermite(node_count)
    scaled = np.exp(-math.log(node_count) - 2.0 * _log_abs_hermite(node_count - 1, nodes))
    return nodes, scaled

def default_node_count(n_max: int) -> int:
    """Smallest rule that integrates h0*h_i*h_j*h_c exactly for i, j, c <= n_max."""
    return 2 * n_max + 2

@lru_cache(maxsize=16)
def quartic_table(n_max: int, node_count: int | None = None) -> np.ndarray:
    """
    Dimensionless 1D quartic integrals q[i, j, c] = integral of h0 h_i h_j h_c dxi.

    Entries whose index sum is odd vanish by parity and are set to exactly 0.
    The returned array is read-only and shared between callers.

    Raises:
        NumericRangeError: If n_max exceeds the configured table limit
    """
    limit = config.BEC_OVERLAP_TABLE_LIMIT
    if n_max > limit:
        raise NumericRangeError(
            f"Quartic overlap table for n_max={n_max} exceeds BEC_OVERLAP_TABLE_LIMIT={limit}; "
            f"lower the energy cutoff or raise the limit"
        )
    q_nodes = default_node_count(n_max) if node_count is None else int(node_count)
    nodes, scaled = scaled_hermite_rule(q_nodes)
    xi = nodes / math.sqrt(2.0)
    h = hermite_functions(n_max, xi)
    weights = scaled / math.sqrt(2.0) * h[0]
    table = np.einsum("q,iq,jq,cq->ijc", weights, h, h, h, optimize=True)
    idx = np.arange(n_max + 1)
    odd = (idx[:, None, None] + idx[None, :, None] + idx[None, None, :]) % 2 == 1
    table[odd] = 0.0
    table.setflags(write=False)
    logger.debug(f"Quartic table built: n_max={n_max}, {q_nodes} nodes")
    return table

class OverlapProvider:
    """
    Overlap amplitudes zeta between three excited modes and the condensate mode.

    zeta(k, l, m) = integral of chi_0 chi_k chi_l chi_m d^3r factorizes into
    per-axis quartic integrals divided by the oscillator lengths. Per-axis
    tables are built lazily under a lock; call ``warm`` before sharing the
    provider between threads to avoid contention on first use.
    """

    def __init__(self, spectrum: SpectrumTable, trap: TrapModel, node_count: int | None = None):
        self.spectrum = spectrum
        self.lengths = oscillator_lengths(trap)
        self.node_count = node_count
        self._inv_volume: float = 1.0 / (self.lengths[0] * self.lengths[1] * self.lengths[2])
        self._tables: list[np.ndarray] | None = None
        self._cache: dict[tuple[int, int, int], float] = {}
        self._lock = threading.Lock()

    def _axis_node_count(self, n_max: int) -> int | None:
        if self.node_count is None:
            return None
        return max(self.node_count, default_node_count(n_max))

    def warm(self) -> "OverlapProvider":
        """Build all per-axis tables now."""
        with self._lock:
            if self._tables is None:
                self._tables = [
                    quartic_table(max(n, 0), self._axis_node_count(max(n, 0)))
                    for n in self.spectrum.n_max
                ]
                logger.info(f"Overlap tables ready for n_max={self.spectrum.n_max}")
        return self

    @property
    def tables(self) -> list[np.ndarray]:
        if self._tables is None:
            self.warm()
        return self._tables  # type: ignore[return-value]

    def zeta_numbers(self, qk: np.ndarray, ql: np.ndarray, qm: np.ndarray) -> np.ndarray:
        """
        Vectorized zeta from quantum-number arrays of shape (..., 3), in m^-3.

        Any of the three legs may be the ground triple (0, 0, 0).
        """
        qk = np.asarray(qk)
        ql = np.asarray(ql)
        qm = np.asarray(qm)
        tx, ty, tz = self.tables
        value = (
            tx[qk[..., 0], ql[..., 0], qm[..., 0]]
            * ty[qk[..., 1], ql[..., 1], qm[..., 1]]
            * tz[qk[..., 2], ql[..., 2], qm[..., 2]]
        )
        return value * self._inv_volume

    def zeta_block(self, k: np.ndarray, l: np.ndarray, m: np.ndarray) -> np.ndarray:
        """Vectorized zeta over broadcastable arrays of spectrum indices."""
        q = self.spectrum.quantum_numbers
        return self.zeta_numbers(q[np.asarray(k)], q[np.asarray(l)], q[np.asarray(m)])

    def overlap_zeta(self, k: int, l: int, m: int) -> float:
        """
        zeta for one triple of spectrum indices (m^-3).

        Returns exactly 0.0 when the per-axis quantum-number sums are not all
        even; no table lookup happens in that case.

        Raises:
            IndexError: If an index is outside the spectrum
        """
        size = len(self.spectrum)
        for idx in (k, l, m):
            if not 0 <= idx < size:
                raise IndexError(f"Mode index {idx} outside 0..{size - 1}")
        q = self.spectrum.quantum_numbers
        if np.any((q[k] + q[l] + q[m]) % 2):
            return 0.0
        key = tuple(sorted((int(k), int(l), int(m))))
        cached = self._cache.get(key)  # type: ignore[arg-type]
        if cached is not None:
            return cached
        value = float(self.zeta_numbers(q[k], q[l], q[m]))
        with self._lock:
            self._cache[key] = value  # type: ignore[index]
        return value

    def pair_overlap(self, k: int, l: int) -> float:
        """zeta_{kl}^{00}: two excited modes against two condensate legs."""
        q = self.spectrum.quantum_numbers
        if np.any((q[k] + q[l]) % 2):
            return 0.0
        return float(self.zeta_numbers(q[k], q[l], np.zeros(3, dtype=np.int64)))

    def g_term_overlaps(self, k: np.ndarray, l: np.ndarray) -> np.ndarray:
        """integral of chi_0 chi_k chi_k chi_l for index arrays ``k`` and ``l``."""
        q = self.spectrum.quantum_numbers
        qk = q[np.asarray(k)]
        return self.zeta_numbers(qk, qk, q[np.asarray(l)])
