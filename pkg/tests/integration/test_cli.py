import json
from pathlib import Path
import numpy as np
import pytest # type: ignore
from unittest.mock import patch
from src.api.cli import build_parser, main
from src.api.config_parser import parse_config
from src.services.canonical_stats import profile_ladder
from src.services.collision_rates import build_rate_table
from src.services.overlaps import OverlapProvider
from src.services.trap_spectrum import enumerate_modes
from src.utils.constants import EXIT_CONFIG_ERROR, EXIT_NUMERIC_FAILURE, EXIT_OK, EXIT_STRUCTURAL_ERROR
from src.utils.exceptions import IntegrationError

pytestmark = pytest.mark.integration

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
SMALL = FIXTURES / "small.ini"

def _read(path: Path) -> tuple[list[str], np.ndarray]:
    header = path.read_text().splitlines()[0].split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data

def _variant(tmp_path: Path, **changes) -> Path:
    lines = []
    for line in SMALL.read_text().splitlines():
        key = line.split("=")[0].strip()
        lines.append(f"{key} = {changes.pop(key)}" if key in changes else line)
    lines += [f"{k} = {v}" for k, v in changes.items()]
    path = tmp_path / "variant.ini"
    path.write_text("\n".join(lines) + "\n")
    return path

def test_spectrum_command(tmp_path):
    out = tmp_path / "spectrum"
    assert main(["spectrum", "--config", str(SMALL), "--out", str(out)]) == EXIT_OK

    header, data = _read(out / "spectrum.csv")
    assert header == ["index", "nx", "ny", "nz", "energy_joule", "excitation_over_kbt"]
    assert np.all(np.diff(data[:, 4]) >= 0)
    assert np.all(data[:, 5] <= 4.0 + 1e-12)
    manifest = json.loads((out / "manifest.json").read_text())
    assert list(manifest["outputs"]) == ["spectrum.csv"]
    assert manifest["config"]["mode"] == "spectrum"
    assert "threads" not in manifest["config"]

def test_rates_command_discrete_and_semiclassical(tmp_path):
    out = tmp_path / "discrete"
    assert main(["rates", "--config", str(SMALL), "--out", str(out)]) == EXIT_OK
    header, data = _read(out / "rates.csv")
    assert header[:6] == ["n0", "n_perp", "lambda_plus", "lambda_minus", "xi_plus", "xi_minus"]
    assert data.shape == (13, len(header))
    assert data[0, 5] == 0.0
    residual_header, residual = _read(out / "detailed_balance.csv")
    assert residual_header == ["n_perp", "residual"]
    assert np.isnan(residual[0, 1])
    assert (out / "profiles.csv").is_file()

    out = tmp_path / "semiclassical"
    assert main(["rates", "--config", str(SMALL), "--out", str(out), "--mode", "semiclassical"]) == EXIT_OK
    assert (out / "rates.csv").is_file()
    assert not (out / "detailed_balance.csv").exists()

def test_steady_and_oracle_commands(tmp_path):
    out = tmp_path / "steady"
    assert main(["steady", "--config", str(SMALL), "--out", str(out)]) == EXIT_OK
    header, data = _read(out / "steady.csv")
    assert header == ["n0", "p_steady", "p_canonical_oracle", "p_mu_chain"]
    for column in range(1, 4):
        assert data[:, column].sum() == pytest.approx(1.0, abs=1e-12)
    summary_header, _ = _read(out / "summary.csv")
    assert "tv_steady_oracle" in summary_header

    out = tmp_path / "oracle"
    assert main(["oracle", "--config", str(SMALL), "--out", str(out)]) == EXIT_OK
    _, oracle = _read(out / "oracle.csv")
    np.testing.assert_array_equal(oracle[:, 1], data[:, 2])

def test_evolve_single_particle_matches_closed_form(tmp_path):
    """With N = 1 the master equation is a single irreversible link 0 -> 1."""
    config_path = _variant(tmp_path, n_total=1)
    out = tmp_path / "evolve"
    assert main(["evolve", "--config", str(config_path), "--out", str(out)]) == EXIT_OK

    trap = parse_config(config_path).to_trap_model()
    spectrum = enumerate_modes(trap)
    profiles = profile_ladder(spectrum, 1, trap.temperature)
    table = build_rate_table(spectrum, OverlapProvider(spectrum, trap), trap, profiles=profiles)
    u = table.xi_plus[0]
    assert u > 0 and table.xi_minus[1] == 0.0

    header, data = _read(out / "trajectory.csv")
    assert header[:5] == ["time_s", "mean_n0", "std_n0", "p_0", "p_1"]
    t = data[:, 0]
    np.testing.assert_allclose(data[:, 1], 1.0 - np.exp(-u * t), rtol=0, atol=1e-8)
    assert np.isnan(data[1, 3]) and not np.isnan(data[5, 3])
    assert (out / "growth.csv").is_file()

def test_evolve_keeps_top_state_unreached(tmp_path):
    """From an empty condensate the fully condensed state collects no weight within the horizon."""
    out = tmp_path / "evolve"
    assert main(["evolve", "--config", str(SMALL), "--out", str(out)]) == EXIT_OK

    header, data = _read(out / "summary.csv")
    assert data[0, header.index("top_state_gain")] < 1e-6
    assert data[0, header.index("clipped_mass")] <= 1e-8
    trajectory_header, trajectory = _read(out / "trajectory.csv")
    assert trajectory[-1, trajectory_header.index("mean_n0")] > 0.0

def test_sweep_command(tmp_path):
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", str(SMALL), "--out", str(out), "--threads", "2"]) == EXIT_OK
    header, data = _read(out / "curves.csv")
    assert data.shape[0] == 4
    np.testing.assert_allclose(data[:, header.index("t_over_tc")], np.linspace(0.3, 1.2, 4), rtol=1e-12)
    assert not np.any(np.isnan(data[:, header.index("mean_fraction_kinetics")]))

def test_outputs_are_deterministic_across_runs_and_threads(tmp_path):
    runs = [("a", "1"), ("b", "1"), ("c", "3")]
    for name, threads in runs:
        assert main(["steady", "--config", str(SMALL), "--out", str(tmp_path / name), "--threads", threads]) == EXIT_OK
    for name in ("steady.csv", "summary.csv", "manifest.json"):
        reference = (tmp_path / "a" / name).read_bytes()
        for other, _ in runs[1:]:
            assert (tmp_path / other / name).read_bytes() == reference

def test_configuration_error_exit_code(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("n_total = 10\ntemperature_nk = -1\n")
    out = tmp_path / "out"
    assert main(["steady", "--config", str(bad), "--out", str(out)]) == EXIT_CONFIG_ERROR
    record = json.loads((out / "error.json").read_text())
    assert record["exit_code"] == EXIT_CONFIG_ERROR
    assert any(v.startswith("temperature_nk:") for v in record["violations"])
    assert not (out / "manifest.json").exists()

def test_empty_spectrum_exit_code(tmp_path):
    config_path = _variant(tmp_path, temperature_nk=0.1, energy_cutoff=1)
    out = tmp_path / "out"
    assert main(["spectrum", "--config", str(config_path), "--out", str(out)]) == EXIT_STRUCTURAL_ERROR
    assert json.loads((out / "error.json").read_text())["error"] == "EmptySpectrumError"

@patch('src.api.commands.steady_state')
def test_numeric_failure_exit_code(mock_steady_state, tmp_path):
    mock_steady_state.side_effect = IntegrationError("step size collapsed")
    out = tmp_path / "out"
    assert main(["steady", "--config", str(SMALL), "--out", str(out)]) == EXIT_NUMERIC_FAILURE
    assert json.loads((out / "error.json").read_text())["error"] == "IntegrationError"

def test_parser_requires_config_and_reports_version(capsys):
    parser = build_parser()
    with pytest.raises(SystemExit) as excinfo:
        parser.parse_args(["steady"])
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit) as excinfo:
        parser.parse_args(["--version"])
    assert excinfo.value.code == 0
    assert "condensate-kinetics" in capsys.readouterr().out
