import logging
from dataclasses import dataclass
from pathlib import Path
import numpy as np
from src.schemas.distribution import Distribution
from src.schemas.rates import RateTable
from src.schemas.run_config import RunConfig
from src.schemas.spectrum import SpectrumTable
from src.schemas.statistics import OccupationProfile
from src.schemas.trap_model import TrapModel
from src.services.canonical_stats import profile_ladder, profile_rows
from src.services.collision_rates import build_rate_table, detailed_balance_residual, rate_rows
from src.services.ensemble_oracle import (
    apparent_transition_temperature,
    condensate_curves,
    critical_temperature,
    curve_rows,
    fluctuation_peak,
    thermal_marginal,
)
from src.services.kinetics import (
    chemical_potential_steady_state,
    formation_time,
    growth_fixed_point,
    initial_distribution,
    mean_growth,
    propagate,
    steady_state,
    total_variation,
)
from src.services.overlaps import OverlapProvider
from src.services.trap_spectrum import enumerate_modes, interaction_parameter, spectrum_rows
from src.utils.config import config
from src.utils.constants import EXIT_OK
from src.utils.exception_handlers import run_error_handler
from src.utils.exceptions import CondensateKineticsError
from src.utils.output_utils import write_csv, write_manifest

logger: logging.Logger = logging.getLogger(__name__)

@dataclass
class RunContext:
    """Shared state of one run: configuration, SI trap, spectrum and output directory."""
    run_config: RunConfig
    trap: TrapModel
    spectrum: SpectrumTable
    out_dir: Path
    threads: int

    def csv(self, name: str, rows: dict[str, np.ndarray], int_columns: tuple[str, ...] = ()) -> Path:
        return write_csv(self.out_dir / name, list(rows), list(rows.values()), int_columns)

def _rates(ctx: RunContext) -> tuple[RateTable, list[OccupationProfile]]:
    rc = ctx.run_config
    profiles = profile_ladder(ctx.spectrum, ctx.trap.n_total, ctx.trap.temperature, ctx.threads)
    overlaps = OverlapProvider(ctx.spectrum, ctx.trap).warm()
    table = build_rate_table(
        ctx.spectrum,
        overlaps,
        ctx.trap,
        mode=rc.rate_mode,
        window=rc.window,
        profiles=profiles,
        include_g_terms=rc.include_g_terms,
        include_pair_rates=rc.include_pair_rates,
        threads=ctx.threads,
        kernel_bins=rc.kernel_bins,
        kernel_samples=rc.kernel_samples,
    )
    return table, profiles

def run_spectrum(ctx: RunContext) -> list[Path]:
    logger.info(
        f"Interaction diagnostic a*N*sqrt(m*omega_bar/hbar) = {interaction_parameter(ctx.trap):.4e}"
    )
    return [ctx.csv("spectrum.csv", spectrum_rows(ctx.spectrum, ctx.trap.temperature), ("index", "nx", "ny", "nz"))]

def run_rates(ctx: RunContext) -> list[Path]:
    table, profiles = _rates(ctx)
    outputs = [
        ctx.csv("rates.csv", rate_rows(table), ("n0", "n_perp")),
        ctx.csv("profiles.csv", profile_rows(profiles), ("n_perp",)),
    ]
    if table.mode == "discrete":
        residual = detailed_balance_residual(table, profiles)
        outputs.append(ctx.csv(
            "detailed_balance.csv",
            {"n_perp": np.arange(table.n_total + 1), "residual": residual},
            ("n_perp",),
        ))
    return outputs

def run_evolve(ctx: RunContext) -> list[Path]:
    rc = ctx.run_config
    table, _ = _rates(ctx)
    canonical: Distribution | None = None
    if rc.initial_condition == "canonical":
        marginal = thermal_marginal(ctx.spectrum, ctx.trap.n_total, ctx.trap.temperature)
        canonical = Distribution(marginal.p_th, ctx.trap.n_total)
    p0 = initial_distribution(rc.initial_condition, ctx.trap.n_total, rc.initial_n0, canonical)
    grid = np.linspace(0.0, rc.t_final_s, rc.output_points)
    trajectory = propagate(
        table, p0, rc.t_final_s, grid, rc.integrator, rc.rtol, rc.atol, rc.snapshot_stride
    )

    n = table.n_total
    columns: dict[str, np.ndarray] = {
        "time_s": trajectory.times,
        "mean_n0": trajectory.means,
        "std_n0": trajectory.stds,
    }
    probabilities = np.full((trajectory.times.size, n + 1), np.nan)
    rows = np.searchsorted(trajectory.times, trajectory.snapshot_times)
    for row, snapshot in zip(rows, trajectory.snapshots):
        probabilities[row] = snapshot.p
    for n0 in range(n + 1):
        columns[f"p_{n0}"] = probabilities[:, n0]

    times, growth = mean_growth(table, float(p0.mean), rc.t_final_s, grid)
    top_gain = trajectory.snapshots[-1].p[-1] - p0.p[-1]
    if top_gain > 1e-6:
        logger.warning(f"Probability at N0 = N grew by {top_gain:.3e} over the horizon")
    summary = {
        "formation_time_s": np.array([formation_time(trajectory.times, trajectory.means)]),
        "growth_formation_time_s": np.array([formation_time(times, growth)]),
        "growth_fixed_point": np.array([growth_fixed_point(table)]),
        "final_mean_n0": np.array([trajectory.means[-1]]),
        "final_std_n0": np.array([trajectory.stds[-1]]),
        "clipped_mass": np.array([trajectory.clipped_mass]),
        "top_state_gain": np.array([top_gain]),
    }
    return [
        ctx.csv("trajectory.csv", columns),
        ctx.csv("growth.csv", {"time_s": times, "mean_n0": growth}),
        ctx.csv("summary.csv", summary),
    ]

def run_steady(ctx: RunContext) -> list[Path]:
    table, profiles = _rates(ctx)
    steady = steady_state(table)
    marginal = thermal_marginal(ctx.spectrum, ctx.trap.n_total, ctx.trap.temperature)
    mu_chain = chemical_potential_steady_state(profiles, ctx.trap.n_total)
    rows = {
        "n0": np.arange(table.n_total + 1),
        "p_steady": steady.p,
        "p_canonical_oracle": marginal.p_th,
        "p_mu_chain": mu_chain.p,
    }
    tv = total_variation(steady.p, marginal.p_th)
    logger.info(f"Total-variation distance steady vs canonical: {tv:.4e}")
    summary = {
        "tv_steady_oracle": np.array([tv]),
        "tv_mu_chain_oracle": np.array([total_variation(mu_chain.p, marginal.p_th)]),
        "mean_steady": np.array([steady.mean]),
        "std_steady": np.array([steady.std]),
        "mean_oracle": np.array([marginal.mean]),
        "std_oracle": np.array([marginal.std]),
        "growth_fixed_point": np.array([growth_fixed_point(table)]),
    }
    return [ctx.csv("steady.csv", rows, ("n0",)), ctx.csv("summary.csv", summary)]

def run_oracle(ctx: RunContext) -> list[Path]:
    marginal = thermal_marginal(ctx.spectrum, ctx.trap.n_total, ctx.trap.temperature)
    tc = critical_temperature(ctx.trap)
    summary = {
        "t_kelvin": np.array([ctx.trap.temperature]),
        "t_over_tc": np.array([ctx.trap.temperature / tc]),
        "critical_temperature_k": np.array([tc]),
        "mean_n0": np.array([marginal.mean]),
        "std_n0": np.array([marginal.std]),
        "interaction_parameter": np.array([interaction_parameter(ctx.trap)]),
    }
    return [
        ctx.csv("oracle.csv", {"n0": np.arange(marginal.n_total + 1), "p_canonical_oracle": marginal.p_th}, ("n0",)),
        ctx.csv("oracle_summary.csv", summary),
    ]

def run_sweep(ctx: RunContext) -> list[Path]:
    rc = ctx.run_config
    tc = critical_temperature(ctx.trap)
    t_grid = np.linspace(rc.t_over_tc_min, rc.t_over_tc_max, rc.sweep_points) * tc

    def kinetics_for(trap: TrapModel, spectrum: SpectrumTable) -> Distribution:
        local = RunContext(rc, trap, spectrum, ctx.out_dir, 1)
        table, _ = _rates(local)
        return steady_state(table)

    curves = condensate_curves(
        ctx.trap, t_grid, enumerate_modes, kinetics_for if rc.sweep_kinetics else None, ctx.threads
    )
    peak_oracle, interior = fluctuation_peak(curves.t_over_tc, curves.std_oracle)
    if not interior:
        logger.warning("Oracle fluctuation maximum lies on the edge of the temperature grid")
    summary = {
        "critical_temperature_k": np.array([tc]),
        "transition_oracle": np.array([apparent_transition_temperature(curves.t_over_tc, curves.fraction_oracle)]),
        "transition_kinetics": np.array([
            apparent_transition_temperature(curves.t_over_tc, curves.fraction_kinetics)
            if rc.sweep_kinetics else np.nan
        ]),
        "fluctuation_peak_oracle": np.array([peak_oracle]),
    }
    return [ctx.csv("curves.csv", curve_rows(curves)), ctx.csv("summary.csv", summary)]

PIPELINES = {
    "spectrum": run_spectrum,
    "rates": run_rates,
    "evolve": run_evolve,
    "steady": run_steady,
    "oracle": run_oracle,
    "sweep": run_sweep,
}

def run(run_config: RunConfig, out_dir: Path) -> int:
    """
    Execute the configured pipeline and write its CSV files plus ``manifest.json``.

    Returns:
        Process exit code; failures also leave an ``error.json`` record.
    """
    threads = run_config.threads or config.BEC_THREADS
    try:
        trap = run_config.to_trap_model()
        spectrum = enumerate_modes(trap)
        ctx = RunContext(run_config, trap, spectrum, out_dir, threads)
        logger.info(f"Running '{run_config.mode}' pipeline into '{out_dir}' with {threads} threads")
        outputs = PIPELINES[run_config.mode](ctx)
        echo = run_config.model_dump(exclude={"threads"})
        write_manifest(out_dir, echo, outputs)
    except (CondensateKineticsError, ValueError, ArithmeticError) as e:
        return run_error_handler(e, out_dir)
    return EXIT_OK
