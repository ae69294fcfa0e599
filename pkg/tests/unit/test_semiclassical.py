import math
import numpy as np
import pytest # type: ignore
from src.services.canonical_stats import profile_ladder
from src.services.collision_rates import build_rate_table, delta_gamma, detailed_balance_residual
from src.services.overlaps import OverlapProvider
from src.services.semiclassical import (
    EnergyGrid,
    convolved_factor,
    density_of_states,
    energy_grid,
    semiclassical_rates,
)
from src.services.trap_spectrum import enumerate_modes
from src.utils.constants import HBAR, K_B

pytestmark = pytest.mark.unit

def test_density_of_states(formation_trap):
    wx, wy, wz = formation_trap.omegas
    e = np.array([1e-31, 2e-31])
    np.testing.assert_allclose(density_of_states(e, formation_trap), e ** 2 / (2 * HBAR ** 3 * wx * wy * wz), rtol=1e-15)

def test_energy_grid_spacing(small_trap):
    spectrum = enumerate_modes(small_trap)
    grid = energy_grid(small_trap, float(spectrum.excitation[0]))
    step = HBAR * small_trap.gamma

    assert grid.step == step
    assert grid.index_offset == max(1, math.ceil(float(spectrum.excitation[0]) / step))
    assert grid.energies[0] >= float(spectrum.excitation[0]) * (1 - 1e-12)
    np.testing.assert_allclose(np.diff(grid.energies), step, rtol=1e-12)
    assert grid.energies[-1] <= small_trap.energy_cutoff * K_B * small_trap.temperature * (1 + 1e-12)
    np.testing.assert_allclose(grid.weights, density_of_states(grid.energies, small_trap) * step)
    with pytest.raises(ValueError):
        energy_grid(small_trap, 10.0 * small_trap.energy_cutoff * K_B * small_trap.temperature)

def test_convolved_factor_shifts_a_single_point():
    gamma = 2.0
    step = HBAR * gamma
    i0, size, window, p = 3, 10, 8.0, 4
    grid = EnergyGrid(index_offset=i0, energies=np.arange(i0, i0 + size) * step, weights=np.ones(size), step=step)
    x = np.zeros(size)
    x[p] = 1.0
    h = convolved_factor(grid, x, window)

    assert h.shape == (2 * size - 1,)
    for t in range(h.size):
        d = t + i0 - p
        expected = delta_gamma(d * gamma, gamma) if abs(d) <= window else 0.0
        assert h[t] == pytest.approx(expected, rel=1e-14, abs=0.0)

def test_semiclassical_rates_grow_with_occupation(small_trap):
    spectrum = enumerate_modes(small_trap)
    provider = OverlapProvider(spectrum, small_trap)
    plus, minus, mu = semiclassical_rates(spectrum, provider, small_trap, kernel_bins=6, kernel_samples=4)
    n = small_trap.n_total

    assert plus.shape == minus.shape == (n + 1,)
    assert plus[0] == 0.0 and minus[0] == 0.0
    assert mu[0] == -np.inf
    assert plus[-1] > 0.0 and minus[-1] > 0.0
    assert np.all(np.diff(plus) >= 0.0)
    assert np.all(np.diff(minus) >= 0.0)
    assert np.all(np.diff(mu[1:]) > 0.0)

def test_semiclassical_rate_table(small_trap):
    spectrum = enumerate_modes(small_trap)
    provider = OverlapProvider(spectrum, small_trap)
    table = build_rate_table(spectrum, provider, small_trap, mode="semiclassical", kernel_bins=6, kernel_samples=4, threads=2)
    assert table.mode == "semiclassical"
    assert table.xi_minus[0] == 0.0
    assert np.all(table.xi_plus >= 0.0)

def test_semiclassical_and_discrete_share_equilibrium(small_trap):
    """
    Both modes on one spectrum: same mu_perp ladder, and lambda+/lambda- equal to
    exp(beta*dmu) up to the broadening factor exp(beta*hbar*Gamma*|d|) of the window.
    """
    trap = small_trap.with_updates(gamma=0.5)
    spectrum = enumerate_modes(trap)
    provider = OverlapProvider(spectrum, trap).warm()
    profiles = profile_ladder(spectrum, trap.n_total, trap.temperature)
    discrete = build_rate_table(spectrum, provider, trap, profiles=profiles)
    semi = build_rate_table(
        spectrum, provider, trap, mode="semiclassical", profiles=profiles, kernel_bins=6, kernel_samples=4
    )
    # window of 8 Gamma plus up to three grid points lifted onto the lowest mode
    bound = math.expm1(11.0 * HBAR * trap.gamma / (K_B * trap.temperature))
    r_discrete = detailed_balance_residual(discrete, profiles)[1:]
    r_semi = detailed_balance_residual(semi, profiles)[1:]

    np.testing.assert_array_equal(semi.mu_perp, discrete.mu_perp)
    assert np.all(semi.lambda_plus[1:] > 0.0) and np.all(semi.lambda_minus[1:] > 0.0)
    assert np.max(np.abs(r_discrete)) < 1e-6
    assert np.max(np.abs(r_semi)) < bound
    np.testing.assert_allclose(
        semi.lambda_plus[1:] / semi.lambda_minus[1:],
        discrete.lambda_plus[1:] / discrete.lambda_minus[1:],
        rtol=2.0 * bound,
    )

def test_semiclassical_rates_reject_short_profile_ladder(small_trap):
    spectrum = enumerate_modes(small_trap)
    profiles = profile_ladder(spectrum, small_trap.n_total - 1, small_trap.temperature)
    with pytest.raises(ValueError):
        semiclassical_rates(spectrum, OverlapProvider(spectrum, small_trap), small_trap, profiles=profiles)
