"""End-to-end CLI behavior: exit codes, files, determinism, round trips."""

import json
import math

import numpy as np
import pytest

from qndspec import (
    DiagonalState,
    FrequencyGrid,
    exact_spectrum,
    preset_device,
    read_spectrum_csv,
)
from qndspec.cli import main

TWO_PI = 2.0 * math.pi


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


FAST_DEVICE = {
    "cavity_freq_MHz": 6000.0,
    "kappa_MHz": 5.0,
    "qubits": [{"gamma_shift_MHz": 1.0}],
}


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def test_validate_preset_passes(capsys):
    assert main(["validate", "--params-preset", "n1-2010"]) == 0
    out = capsys.readouterr().out
    assert "overall: pass" in out
    assert "g_1/Delta_1" in out


def test_validate_resonant_qubit_exits_2(tmp_path, capsys):
    config = write_config(tmp_path, {"device": {
        "cavity_freq_MHz": 6000.0, "kappa_MHz": 1.0,
        "qubits": [{"omega_MHz": 6000.0, "g_MHz": 100.0}]}})
    assert main(["validate", "--config", config]) == 2
    assert "resonant" in capsys.readouterr().err


def test_validate_empty_register_passes(tmp_path):
    config = write_config(tmp_path, {"device": {
        "cavity_freq_MHz": 6000.0, "kappa_MHz": 1.0}})
    assert main(["validate", "--config", config]) == 0


def test_validate_failing_ratio_exits_2(tmp_path):
    config = write_config(tmp_path, {"device": {
        "cavity_freq_MHz": 6000.0, "kappa_MHz": 1.0,
        "qubits": [{"omega_MHz": 5900.0, "g_MHz": 50.0}]}})
    assert main(["validate", "--config", config]) == 2


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def test_spectrum_matches_library(tmp_path):
    out = tmp_path / "spec.csv"
    assert main(["spectrum", "--params-preset", "n2-2010", "--ket", "11",
                 "--method", "exact", "-o", str(out)]) == 0
    table = read_spectrum_csv(out)
    assert table.meta["method"] == "exact"
    params = preset_device("n2-2010")
    grid = FrequencyGrid.default_window(params)
    expected = exact_spectrum(params, DiagonalState.from_ket("11"), grid)
    np.testing.assert_allclose(table.values, expected.values, rtol=1e-10)
    np.testing.assert_allclose(table.omegas, expected.omegas,
                               atol=TWO_PI * 1e-6)


def test_spectrum_deterministic_across_runs(tmp_path):
    config = write_config(tmp_path, {
        "state": {"ket": "10"}, "grid": {"points": 301}, "seed": 5})
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["spectrum", "--config", config, "--params-preset",
                     "n2-2010", "-o", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_spectrum_method_register_mismatch_exits_2(tmp_path, capsys):
    assert main(["spectrum", "--params-preset", "n1-2010", "--ket", "1",
                 "--method", "closed2",
                 "-o", str(tmp_path / "x.csv")]) == 2
    assert "two qubit" in capsys.readouterr().err


def test_spectrum_missing_state_exits_2(tmp_path, capsys):
    assert main(["spectrum", "--params-preset", "n2-2010",
                 "-o", str(tmp_path / "x.csv")]) == 2
    assert "state" in capsys.readouterr().err


def test_spectrum_all_methods_run(tmp_path):
    for method in ("exact", "fast", "mixture", "meanfield", "closed2"):
        out = tmp_path / f"{method}.csv"
        assert main(["spectrum", "--params-preset", "n2-2010", "--ket", "01",
                     "--method", method, "-o", str(out)]) == 0
        assert out.exists()
    out = tmp_path / "closed1.csv"
    assert main(["spectrum", "--params-preset", "n1-2010", "--ket", "1",
                 "--method", "closed1", "-o", str(out)]) == 0


def test_spectrum_figure_rendered(tmp_path):
    fig = tmp_path / "spec.svg"
    assert main(["spectrum", "--params-preset", "n1-2010", "--ket", "0",
                 "-o", str(tmp_path / "s.csv"), "--figure", str(fig)]) == 0
    assert fig.stat().st_size > 1000


# ---------------------------------------------------------------------------
# config errors
# ---------------------------------------------------------------------------

def test_malformed_json_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["validate", "--config", str(path)]) == 2
    assert "invalid JSON" in capsys.readouterr().err


def test_unknown_device_field_exits_2(tmp_path, capsys):
    config = write_config(tmp_path, {"device": {
        "cavity_freq_MHz": 6000.0, "kappa_MHz": 1.0, "q_factor": 3}})
    assert main(["validate", "--config", config]) == 2
    assert "q_factor" in capsys.readouterr().err


def test_missing_device_exits_2(tmp_path, capsys):
    config = write_config(tmp_path, {"grid": {"points": 11}})
    assert main(["validate", "--config", config]) == 2
    assert "device" in capsys.readouterr().err


def test_state_given_twice_exits_2(tmp_path, capsys):
    config = write_config(tmp_path, {"state": {"ket": "11"}})
    assert main(["spectrum", "--config", config, "--params-preset",
                 "n2-2010", "--ket", "10",
                 "-o", str(tmp_path / "x.csv")]) == 2
    assert "--ket" in capsys.readouterr().err


def test_bad_state_length_exits_2(tmp_path, capsys):
    config = write_config(tmp_path, {
        "state": {"probs": [0.5, 0.5]}})
    assert main(["spectrum", "--config", config, "--params-preset",
                 "n2-2010", "-o", str(tmp_path / "x.csv")]) == 2
    assert "qubits" in capsys.readouterr().err


def test_bad_grid_exits_2(tmp_path, capsys):
    config = write_config(tmp_path, {
        "state": {"ket": "11"}, "grid": {"points": 1}})
    assert main(["spectrum", "--config", config, "--params-preset",
                 "n2-2010", "-o", str(tmp_path / "x.csv")]) == 2
    assert "grid" in capsys.readouterr().err


def test_config_device_overrides_preset(tmp_path):
    # config kappa wins over the preset value
    config = write_config(tmp_path, {
        "device": {"kappa_MHz": 2.0, "cavity_freq_MHz": 6806.0,
                   "qubits": [{"gamma_shift_MHz": 13.0},
                              {"gamma_shift_MHz": 4.0}]},
        "state": {"ket": "00"}, "grid": {"points": 101}})
    out = tmp_path / "s.csv"
    assert main(["spectrum", "--config", config, "--params-preset",
                 "n2-2010", "-o", str(out)]) == 0
    table = read_spectrum_csv(out)
    # peak height 4/kappa^2 reflects the overridden kappa = 2 MHz
    peak = table.values.max()
    assert peak == pytest.approx(4.0 / (TWO_PI * 2.0) ** 2, rel=1e-3)


# ---------------------------------------------------------------------------
# oracle
# ---------------------------------------------------------------------------

def test_oracle_writes_convergence_columns(tmp_path):
    config = write_config(tmp_path, {
        "device": FAST_DEVICE, "state": {"ket": "1"},
        "grid": {"points": 3, "half_span_MHz": 1.5},
        "oracle": {"n_max": 5}})
    out = tmp_path / "oracle.csv"
    assert main(["oracle", "--config", config, "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "omega_L_MHz,S_value,converged,tail_occupation,steps"
    for line in lines[2:]:
        assert line.split(",")[2] == "1"


def test_oracle_non_convergence_exits_3_but_writes(tmp_path, capsys):
    config = write_config(tmp_path, {
        "device": FAST_DEVICE, "state": {"ket": "1"},
        "grid": {"points": 2, "half_span_MHz": 1.0},
        "oracle": {"n_max": 4, "max_time_us": 0.001,
                   "convergence_tol": 1e-14}})
    out = tmp_path / "oracle.csv"
    assert main(["oracle", "--config", config, "-o", str(out)]) == 3
    assert "did not converge" in capsys.readouterr().err
    lines = out.read_text().splitlines()
    assert all(line.split(",")[2] == "0" for line in lines[2:])


# ---------------------------------------------------------------------------
# decay / average
# ---------------------------------------------------------------------------

def test_decay_writes_populations_and_spectrum(tmp_path):
    config = write_config(tmp_path, {
        "state": {"ket": "11"}, "grid": {"points": 201},
        "decay": {"tau_us": 1.0, "trajectory_points": 5,
                  "t1_us": [1.0, 1.0]}})
    spec_out = tmp_path / "snap.csv"
    pops_out = tmp_path / "pops.csv"
    assert main(["decay", "--config", config, "--params-preset", "n2-2010",
                 "-o", str(spec_out),
                 "--populations-output", str(pops_out)]) == 0
    lines = pops_out.read_text().splitlines()
    assert lines[1] == "tau_us,p_00,p_10,p_01,p_11"
    assert len(lines) == 7  # meta + header + 5 rows
    last = [float(x) for x in lines[-1].split(",")]
    e = math.exp(-1.0)
    assert last[0] == pytest.approx(1.0)
    assert last[4] == pytest.approx(e * e, abs=1e-9)
    assert read_spectrum_csv(spec_out).values.max() > 0


def test_decay_tau_zero_single_row(tmp_path):
    config = write_config(tmp_path, {
        "state": {"ket": "10"}, "grid": {"points": 101},
        "decay": {"tau_us": 0.0}})
    pops_out = tmp_path / "pops.csv"
    assert main(["decay", "--config", config, "--params-preset", "n2-2010",
                 "-o", str(tmp_path / "s.csv"),
                 "--populations-output", str(pops_out)]) == 0
    lines = pops_out.read_text().splitlines()
    assert len(lines) == 3
    row = [float(x) for x in lines[2].split(",")]
    assert row[2] == 1.0  # p_10 intact at tau = 0


def test_decay_requires_tau(tmp_path, capsys):
    config = write_config(tmp_path, {"state": {"ket": "11"}})
    assert main(["decay", "--config", config, "--params-preset",
                 "n2-2010"]) == 2
    assert "tau_us" in capsys.readouterr().err


def test_average_round_trips_through_infer(tmp_path):
    config = write_config(tmp_path, {
        "state": {"ket": "11"}, "grid": {"points": 1501},
        "decay": {"tau_max_us": 0.5, "t1_us": [1.0, 1.0]}})
    avg_out = tmp_path / "avg.csv"
    assert main(["average", "--config", config, "--params-preset",
                 "n2-2010", "-o", str(avg_out)]) == 0
    report_out = tmp_path / "report.json"
    assert main(["infer", "--config", config, "--params-preset", "n2-2010",
                 "--input", str(avg_out), "-o", str(report_out)]) == 0
    report = json.loads(report_out.read_text())
    assert report["degenerate"] is False
    # analytic window average of the all-excited state over [0, 0.5] us
    a = 2.0 * (1.0 - math.exp(-0.5))
    b = 1.0 - math.exp(-1.0)
    expected = [1.0 - 2.0 * a + b, a - b, a - b, b]
    np.testing.assert_allclose(report["probs"], expected, atol=1e-3)
    assert len(report["peaks"]) == 4


# ---------------------------------------------------------------------------
# infer / plot
# ---------------------------------------------------------------------------

def test_infer_recovers_planted_state(tmp_path):
    config = write_config(tmp_path, {
        "state": {"probs": [0.2, 0.2, 0.26, 0.34]},
        "grid": {"points": 2001}})
    spec_out = tmp_path / "spec.csv"
    assert main(["spectrum", "--config", config, "--params-preset",
                 "n2-2010", "-o", str(spec_out)]) == 0
    report_out = tmp_path / "report.json"
    assert main(["infer", "--config", config, "--params-preset", "n2-2010",
                 "--input", str(spec_out), "-o", str(report_out)]) == 0
    report = json.loads(report_out.read_text())
    np.testing.assert_allclose(report["probs"], [0.2, 0.2, 0.26, 0.34],
                               atol=1e-3)
    kets = {w["kets"][0]: w["weight"] for w in report["weights"]}
    assert set(kets) == {"00", "10", "01", "11"}
    assert report["peak_match_residual_MHz"] < 0.1


def test_infer_empty_register_trivial_weight(tmp_path):
    config = write_config(tmp_path, {
        "device": {"cavity_freq_MHz": 6000.0, "kappa_MHz": 1.69},
        "grid": {"points": 501}})
    spec_out = tmp_path / "empty.csv"
    assert main(["spectrum", "--config", config, "-o", str(spec_out)]) == 0
    report_out = tmp_path / "report.json"
    assert main(["infer", "--config", config, "--input", str(spec_out),
                 "-o", str(report_out)]) == 0
    report = json.loads(report_out.read_text())
    assert report["probs"] == [1.0]


def test_infer_missing_input_exits_2(tmp_path, capsys):
    assert main(["infer", "--params-preset", "n2-2010",
                 "-o", str(tmp_path / "r.json")]) == 2
    assert "input" in capsys.readouterr().err


def test_plot_from_csv(tmp_path):
    spec_out = tmp_path / "spec.csv"
    assert main(["spectrum", "--params-preset", "n1-2010", "--ket", "1",
                 "-o", str(spec_out)]) == 0
    fig = tmp_path / "fig.svg"
    assert main(["plot", "--input", str(spec_out), "-o", str(fig)]) == 0
    assert fig.stat().st_size > 1000


def test_plot_malformed_input_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("omega_L_MHz,S_value\n1.0\n")
    assert main(["plot", "--input", str(bad),
                 "-o", str(tmp_path / "f.svg")]) == 2
    assert "bad.csv:2" in capsys.readouterr().err
