import logging
import math
from typing import Sequence
import numpy as np
from scipy import sparse  # type: ignore
from scipy.integrate import BDF, RK45, solve_ivp  # type: ignore
from scipy.optimize import brentq  # type: ignore
from scipy.special import logsumexp  # type: ignore
from src.schemas.distribution import Distribution, Trajectory
from src.schemas.rates import RateTable
from src.schemas.statistics import OccupationProfile
from src.utils.exceptions import DetailedBalanceChainError, IntegrationError, ProbabilityLeakError

logger: logging.Logger = logging.getLogger(__name__)

INTEGRATORS: tuple[str, ...] = ("rk45", "bdf")
CLIP_LIMIT: float = 1e-8
STEP_CLIP_LIMIT: float = 1e-10
NEGATIVE_TOLERANCE: float = 1e-12

def _boundary_rates(table: RateTable) -> tuple[np.ndarray, np.ndarray]:
    """xi+ with the N0 = N entry and xi- with the N0 = 0 entry removed (no in-range target)."""
    up = table.xi_plus.copy()
    down = table.xi_minus.copy()
    up[-1] = 0.0
    down[0] = 0.0
    return up, down

def assemble_generator(table: RateTable) -> sparse.csr_matrix:
    """
    Tridiagonal generator G with dp/dt = G p.

    Every column sums to zero: the diagonal is minus the sum of the two
    off-diagonal entries of the same column.
    """
    up, down = _boundary_rates(table)
    return sparse.diags(
        [up[:-1], -(up + down), down[1:]],
        offsets=[-1, 0, 1],
        shape=(table.n_total + 1, table.n_total + 1),
        format="csr",
    )

def generator_apply(table: RateTable, p: Distribution | np.ndarray) -> np.ndarray:
    """
    dp/dt under the birth-death master equation.

    Raises:
        ValueError: If the distribution and the table disagree on N
    """
    values = p.p if isinstance(p, Distribution) else np.asarray(p, dtype=float)
    if values.shape != (table.n_total + 1,):
        raise ValueError(f"Distribution of shape {values.shape} does not match N={table.n_total}")
    up, down = _boundary_rates(table)
    out = -(up + down) * values
    out[1:] += up[:-1] * values[:-1]
    out[:-1] += down[1:] * values[1:]
    return out

def _clip(p: np.ndarray) -> tuple[np.ndarray, float]:
    """Zero negative entries, renormalize and report the removed mass."""
    negative = p < 0
    removed = float(-p[negative].sum()) if np.any(negative) else 0.0
    if removed == 0.0:
        return p / p.sum(), 0.0
    q = np.where(negative, 0.0, p)
    return q / q.sum(), removed

def _start_solver(integrator: str, rhs, t0: float, y0: np.ndarray, t_final: float, rtol: float, atol: float, generator):
    if integrator == "bdf":
        return BDF(rhs, t0, y0, t_final, rtol=rtol, atol=atol, jac=generator)
    return RK45(rhs, t0, y0, t_final, rtol=rtol, atol=atol)

def propagate(
    table: RateTable,
    p0: Distribution,
    t_final: float,
    output_grid: np.ndarray | None = None,
    integrator: str = "rk45",
    rtol: float = 1e-10,
    atol: float = 1e-13,
    snapshot_stride: int = 1,
    ) -> Trajectory:
    """
    Integrate the master equation from p0 up to t_final.

    The solver is stepped manually; outputs on ``output_grid`` come from its
    dense output. An accepted state with entries below -1e-12 is clipped,
    renormalized, and the solver restarts from it at the same time; the
    clipped mass is accumulated. ``snapshot_stride`` decimates the stored
    full distributions.

    Args:
        table: Rates at fixed N and T.
        p0: Initial distribution.
        t_final: Final time (s).
        output_grid: Increasing output times within [0, t_final]; defaults to 101 points.
        integrator: 'rk45' (explicit) or 'bdf' (implicit, for stiff tables).
        rtol: Relative tolerance.
        atol: Absolute tolerance.
        snapshot_stride: Keep every n-th output point as a full snapshot.

    Returns:
        Trajectory

    Raises:
        ValueError: If arguments are inconsistent
        IntegrationError: If the step size collapses
        ProbabilityLeakError: If one step clips more than 1e-10 or the accumulated clipped mass exceeds 1e-8
    """
    if p0.n_total != table.n_total:
        raise ValueError(f"Initial distribution has N={p0.n_total}, table has N={table.n_total}")
    if integrator not in INTEGRATORS:
        raise ValueError(f"Unknown integrator '{integrator}' (expected one of {INTEGRATORS})")
    if t_final <= 0:
        raise ValueError(f"t_final must be positive (got {t_final})")
    grid = np.linspace(0.0, t_final, 101) if output_grid is None else np.asarray(output_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] < 0 or grid[-1] > t_final:
        raise ValueError("Output grid must be strictly increasing within [0, t_final]")

    generator = assemble_generator(table)

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        return generator @ y

    solver = _start_solver(integrator, rhs, 0.0, p0.p.copy(), t_final, rtol, atol, generator)

    outputs = np.empty((grid.size, table.n_total + 1))
    filled = 0
    while filled < grid.size and grid[filled] <= 0.0:
        outputs[filled] = p0.p
        filled += 1
    clipped = 0.0
    steps = 0
    while filled < grid.size:
        message = solver.step()
        steps += 1
        if solver.status == "failed":
            raise IntegrationError(
                f"Integrator '{integrator}' failed at t={solver.t:.6e} s: {message}; "
                f"the rate table may be stiff, retry with integrator = bdf"
            )
        restart: np.ndarray | None = None
        if np.min(solver.y) < -NEGATIVE_TOLERANCE:
            restart, removed = _clip(solver.y)
            if removed > STEP_CLIP_LIMIT:
                raise ProbabilityLeakError(
                    f"Step to t={solver.t:.6e} s clipped {removed:.3e} of probability (limit {STEP_CLIP_LIMIT})"
                )
            clipped += removed
            if clipped > CLIP_LIMIT:
                raise ProbabilityLeakError(
                    f"Accumulated clipped probability {clipped:.3e} exceeds {CLIP_LIMIT} at t={solver.t:.6e} s"
                )
        upto = int(np.searchsorted(grid, solver.t, side="right"))
        if upto > filled:
            dense = solver.dense_output()
            for i in range(filled, upto):
                outputs[i] = dense(grid[i])
            filled = upto
        if solver.status == "finished" and filled < grid.size:
            for i in range(filled, grid.size):
                outputs[i] = solver.y if restart is None else restart
            filled = grid.size
        if restart is not None and solver.status != "finished":
            logger.debug(f"Restarting {integrator} from the clipped state at t={solver.t:.6e} s")
            solver = _start_solver(integrator, rhs, solver.t, restart, t_final, rtol, atol, generator)

    n0 = np.arange(table.n_total + 1)
    means = np.empty(grid.size)
    stds = np.empty(grid.size)
    snapshots: list[Distribution] = []
    snapshot_times: list[float] = []
    stride = max(1, int(snapshot_stride))
    for i, row in enumerate(outputs):
        p, removed = _clip(row)
        if removed > NEGATIVE_TOLERANCE:
            logger.debug(f"Clipped {removed:.3e} of negative probability at t={grid[i]:.6e} s")
        means[i] = float(n0 @ p)
        stds[i] = math.sqrt(max(float(((n0 - means[i]) ** 2) @ p), 0.0))
        outputs[i] = p
        if i % stride == 0 or i == grid.size - 1:
            snapshots.append(Distribution(p, table.n_total))
            snapshot_times.append(float(grid[i]))

    logger.info(
        f"Propagated N={table.n_total} to t={t_final:.4e} s with {integrator} in {steps} steps; "
        f"final <N0>={means[-1]:.4f}, clipped mass {clipped:.3e}"
    )
    return Trajectory(
        times=grid,
        means=means,
        stds=stds,
        snapshot_times=np.asarray(snapshot_times),
        snapshots=tuple(snapshots),
        clipped_mass=clipped,
        steps=steps,
    )

def steady_state(table: RateTable) -> Distribution:
    """
    Detailed-balance steady state.

    ln p(N0) = ln p(0) + sum_{z=1..N0} [ln xi+(z-1) - ln xi-(z)], normalized in
    log space. N0 = N has no outgoing rate; when xi-(N) = 0 it is reported as
    quasi-absorbing and receives p(N) = 0, the chain then covering 0..N-1.
    The canonical marginal keeps p_th(N) > 0, which is not negligible deep
    below T_c (a fully condensed gas at small N); that mass is missing here
    and shows up in any comparison against ``thermal_marginal``.

    Raises:
        DetailedBalanceChainError: If xi-(z) = 0 for some 1 <= z < N
    """
    n = table.n_total
    up, down = table.xi_plus, table.xi_minus
    top = n
    if n >= 1 and down[n] <= 0.0:
        logger.info(f"xi-(N={n}) = 0: N0 = N is quasi-absorbing and excluded from the steady state")
        top = n - 1
    for z in range(1, top + 1):
        if down[z] <= 0.0:
            raise DetailedBalanceChainError(f"Loss rate xi-({z}) vanishes; the detailed-balance chain breaks", link=z)
    log_p = np.full(n + 1, -np.inf)
    log_p[0] = 0.0
    with np.errstate(divide="ignore"):
        links = np.log(up[:top]) - np.log(down[1:top + 1])
    log_p[1:top + 1] = np.cumsum(links)
    p = np.exp(log_p - logsumexp(log_p))
    return Distribution(p / p.sum(), n)

def chemical_potential_steady_state(profiles: Sequence[OccupationProfile], n_total: int) -> Distribution:
    """
    Steady state from p(N0+1)/p(N0) = exp(beta*(mu_perp(N-N0) - eps0)) = exp(-shift(N-N0)).

    The empty profile at N0 = N ends the chain with p(N) = 0 as in ``steady_state``.
    """
    if len(profiles) != n_total + 1:
        raise ValueError(f"Expected {n_total + 1} profiles, got {len(profiles)}")
    shifts = np.array([profiles[n_total - z].shift for z in range(n_total + 1)])
    log_p = np.full(n_total + 1, -np.inf)
    log_p[0] = 0.0
    top = n_total - 1 if n_total >= 1 else 0
    log_p[1:top + 1] = -np.cumsum(shifts[:top])
    p = np.exp(log_p - logsumexp(log_p))
    return Distribution(p / p.sum(), n_total)

def _interp_lambdas(table: RateTable) -> tuple:
    n_perp = np.arange(table.n_total + 1, dtype=float)

    def plus(x: float) -> float:
        return float(np.interp(x, n_perp, table.lambda_plus))

    def minus(x: float) -> float:
        return float(np.interp(x, n_perp, table.lambda_minus))

    return plus, minus

def mean_growth(
    table: RateTable,
    n0_init: float,
    t_final: float,
    output_grid: np.ndarray | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    ) -> tuple[np.ndarray, np.ndarray]:
    """
    Integrate d<N0>/dt = xi+(<N0>) - xi-(<N0> + 1) = 2(<N0>+1)[lambda+(N-<N0>) - lambda-(N-<N0>)].

    The rate table is interpolated linearly between integer N0.

    Returns:
        (times, mean N0)

    Raises:
        ValueError: If n0_init is outside [0, N]
        IntegrationError: If the integrator fails
    """
    n = table.n_total
    if not 0 <= n0_init <= n:
        raise ValueError(f"n0_init={n0_init} outside 0..{n}")
    grid = np.linspace(0.0, t_final, 101) if output_grid is None else np.asarray(output_grid, dtype=float)
    plus, minus = _interp_lambdas(table)

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        x = min(max(float(y[0]), 0.0), float(n))
        return np.array([2.0 * (x + 1.0) * (plus(n - x) - minus(n - x))])

    result = solve_ivp(rhs, (0.0, t_final), [float(n0_init)], method="LSODA", t_eval=grid, rtol=rtol, atol=atol)
    if not result.success:
        raise IntegrationError(f"Mean growth integration failed: {result.message}")
    return result.t, result.y[0]

def growth_fixed_point(table: RateTable) -> float:
    """
    <N0> at which lambda+(N - <N0>) = lambda-(N - <N0>), on the interpolated table.

    Returns 0 when the non-condensate cannot feed the condensate at N0 = 0.
    """
    n = table.n_total
    plus, minus = _interp_lambdas(table)

    def balance(x: float) -> float:
        return plus(n - x) - minus(n - x)

    if balance(0.0) <= 0.0:
        return 0.0
    upper = float(n) - 1.0 if n >= 2 else float(n)
    if balance(upper) > 0.0:
        return upper
    return float(brentq(balance, 0.0, upper, xtol=1e-12))

def formation_time(times: np.ndarray, means: np.ndarray) -> float:
    """
    First time <N0> reaches 1 - 1/e of its total rise, linearly interpolated.

    Returns nan when <N0> does not rise.
    """
    times = np.asarray(times, dtype=float)
    means = np.asarray(means, dtype=float)
    rise = means[-1] - means[0]
    if rise <= 0:
        return math.nan
    level = means[0] + (1.0 - math.exp(-1.0)) * rise
    hit = int(np.argmax(means >= level))
    if hit == 0:
        return float(times[0])
    t0, t1 = times[hit - 1], times[hit]
    m0, m1 = means[hit - 1], means[hit]
    return float(t0 + (level - m0) * (t1 - t0) / (m1 - m0))

def total_variation(p: Distribution | np.ndarray, q: Distribution | np.ndarray) -> float:
    """Total-variation distance 0.5 * sum |p - q|."""
    a = p.p if isinstance(p, Distribution) else np.asarray(p, dtype=float)
    b = q.p if isinstance(q, Distribution) else np.asarray(q, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"Distributions differ in shape: {a.shape} vs {b.shape}")
    return 0.5 * float(np.abs(a - b).sum())

def top_link_flux(table: RateTable, p: Distribution) -> float:
    """Probability flux xi+(N-1) p(N-1) into the quasi-absorbing state N0 = N (1/s)."""
    if table.n_total < 1:
        return 0.0
    return float(table.xi_plus[-2] * p.p[-2])

def net_link_flux(table: RateTable, p: Distribution) -> np.ndarray:
    """xi+(N0) p(N0) - xi-(N0+1) p(N0+1) for N0 = 0..N-1."""
    return table.xi_plus[:-1] * p.p[:-1] - table.xi_minus[1:] * p.p[1:]

def initial_distribution(kind: str, n_total: int, n0: int = 0, canonical: Distribution | None = None) -> Distribution:
    """
    Initial condensate distribution: 'empty' (all mass at N0 = 0), 'delta' at n0, or 'canonical'.

    Raises:
        ValueError: If the kind is unknown or a canonical distribution is missing
    """
    if kind == "empty":
        return Distribution.delta(n_total, 0)
    if kind == "delta":
        return Distribution.delta(n_total, n0)
    if kind == "canonical":
        if canonical is None:
            raise ValueError("A canonical initial condition needs the oracle distribution")
        return canonical
    raise ValueError(f"Unknown initial condition '{kind}'")
