import math
import numpy as np
import pytest # type: ignore
from unittest.mock import patch
from src.schemas.trap_model import TrapModel
from src.services.canonical_stats import (
    bose_occupations,
    brute_force_canonical,
    chemical_potential_difference,
    mu_consistency,
    partition_tables,
    profile_ladder,
    profile_rows,
    solve_alpha,
    solve_shift,
)
from src.services.trap_spectrum import enumerate_modes, restricted_spectrum
from src.utils.constants import HBAR, K_B
from src.utils.exceptions import SolverConvergenceError, StateSpaceTooLargeError

pytestmark = pytest.mark.unit

def test_empty_profile(small_trap):
    spectrum = enumerate_modes(small_trap)
    profile = solve_alpha(spectrum, 0, small_trap.temperature)

    assert profile.is_empty
    assert profile.alpha == math.inf
    assert profile.mu_perp == -math.inf
    assert np.all(profile.occupations == 0.0)
    assert chemical_potential_difference(profile) == -math.inf

def test_single_mode_single_particle(small_trap):
    """One mode holding one particle: alpha = ln 2 - beta*eps."""
    spectrum = restricted_spectrum(small_trap, [(1, 0, 0)])
    profile = solve_alpha(spectrum, 1, small_trap.temperature)
    beta = small_trap.beta

    assert profile.alpha == pytest.approx(math.log(2.0) - beta * spectrum.energies[0], rel=1e-9)
    assert profile.occupations[0] == pytest.approx(1.0, rel=1e-10)
    assert -beta * chemical_potential_difference(profile) == pytest.approx(profile.shift, rel=1e-14)

def test_constraint_and_occupation_formula(small_trap):
    spectrum = enumerate_modes(small_trap)
    beta = small_trap.beta
    for n in (1, 5, 12, 40):
        profile = solve_alpha(spectrum, n, small_trap.temperature)
        assert profile.occupations.sum() == pytest.approx(n, rel=1e-10)
        expected = 1.0 / np.expm1(beta * spectrum.energies + profile.alpha)
        np.testing.assert_allclose(profile.occupations, expected, rtol=1e-8)
        assert beta * (profile.mu_perp - spectrum.ground_energy) == pytest.approx(-profile.shift, rel=1e-12, abs=1e-12)

def test_constraint_holds_for_large_trap(formation_trap):
    spectrum = enumerate_modes(formation_trap)
    profile = solve_alpha(spectrum, 2000, formation_trap.temperature)
    assert profile.occupations.sum() == pytest.approx(2000.0, rel=1e-9)
    assert np.all(profile.occupations > 0)

def test_mu_increases_with_particle_number(small_trap):
    spectrum = enumerate_modes(small_trap)
    profiles = profile_ladder(spectrum, 30, small_trap.temperature)
    mu = np.array([p.mu_perp for p in profiles[1:]])

    assert len(profiles) == 31
    assert np.all(np.diff(mu) > 0)
    assert np.all(mu < spectrum.ground_energy + spectrum.excitation[0])

def test_profile_ladder_independent_of_threads(small_trap):
    spectrum = enumerate_modes(small_trap)
    serial = profile_ladder(spectrum, 20, small_trap.temperature, threads=1)
    pooled = profile_ladder(spectrum, 20, small_trap.temperature, threads=4)
    for a, b in zip(serial, pooled):
        assert a.shift == b.shift
        assert np.array_equal(a.occupations, b.occupations)
    rows = profile_rows(serial)
    assert rows["n_perp"].tolist() == list(range(21))

def test_bose_occupations_overflow_safe():
    occ = bose_occupations(np.array([1e-30, 1e-20]), 1e3, 1e23)
    assert np.all(np.isfinite(occ))
    assert np.all(occ >= 0.0)
    assert np.all(bose_occupations(np.array([1.0]), math.inf, 1.0) == 0.0)

def test_solver_failure_reports_bracket():
    with patch('src.services.canonical_stats.brentq', side_effect=RuntimeError("no convergence")):
        with pytest.raises(SolverConvergenceError) as excinfo:
            solve_shift(np.array([1.0, 2.0]), np.array([1.0, 1.0]), 3.0, 1.0)
    assert excinfo.value.bracket is not None
    lo, hi = excinfo.value.bracket
    assert lo < hi

def test_partition_tables_closed_forms(small_trap):
    spectrum = restricted_spectrum(small_trap, [(1, 0, 0), (0, 1, 0)])
    beta = small_trap.beta
    e1, e2 = spectrum.energies
    tables = partition_tables(spectrum, 3, small_trap.temperature)

    assert tables.ln_z[0] == 0.0
    assert tables.n_max == 3
    assert tables.ln_z[1] == pytest.approx(math.log(math.exp(-beta * e1) + math.exp(-beta * e2)), rel=1e-13)
    z2 = math.exp(-2 * beta * e1) + math.exp(-beta * (e1 + e2)) + math.exp(-2 * beta * e2)
    assert tables.ln_z[2] == pytest.approx(math.log(z2), rel=1e-13)

    single = restricted_spectrum(small_trap, [(1, 0, 0)])
    assert partition_tables(single, 3, small_trap.temperature).ln_z[3] == pytest.approx(-3 * beta * single.energies[0], rel=1e-13)

def test_partition_tables_match_enumeration(small_trap):
    spectrum = restricted_spectrum(small_trap, [(1, 0, 0), (0, 1, 0), (0, 0, 1), (2, 0, 0)])
    tables = partition_tables(spectrum, 6, small_trap.temperature)
    for n in range(7):
        ln_z, occupations = brute_force_canonical(spectrum, n, small_trap.temperature)
        assert tables.ln_z[n] == pytest.approx(ln_z, rel=1e-12, abs=1e-12)
        assert occupations.sum() == pytest.approx(n, rel=1e-12, abs=1e-12)

def test_constrained_profile_close_to_exact_canonical(small_trap):
    """The constrained profile reproduces exact canonical occupations to within one particle."""
    spectrum = restricted_spectrum(small_trap, [(1, 0, 0), (0, 1, 0), (0, 0, 1)])
    _, exact = brute_force_canonical(spectrum, 4, small_trap.temperature)
    profile = solve_alpha(spectrum, 4, small_trap.temperature)
    assert np.max(np.abs(exact - profile.occupations)) < 1.0

def test_brute_force_state_limit(small_trap):
    spectrum = enumerate_modes(small_trap)
    with pytest.raises(StateSpaceTooLargeError):
        brute_force_canonical(spectrum, 20, small_trap.temperature, max_states=100)

def test_lagrange_parameter_consistent_with_partition_ratio():
    """alpha(n) and ln Z(n) - ln Z(n-1) agree to O(1/n) in the non-degenerate regime."""
    omega = 2 * math.pi * 100.0
    trap = TrapModel(
        omega_x=omega, omega_y=omega, omega_z=omega, mass=1.443e-25, scattering_length=5.7e-9,
        n_total=150, temperature=6.0 * HBAR * omega / K_B, gamma=10.0, energy_cutoff=8.0,
    )
    spectrum = enumerate_modes(trap)
    profiles = profile_ladder(spectrum, 150, trap.temperature)
    tables = partition_tables(spectrum, 150, trap.temperature)
    diff = mu_consistency(profiles, tables)
    n = np.arange(1, 151)

    assert diff.shape == (150,)
    assert np.all(np.abs(diff[49:]) * n[49:] < 10.0)
