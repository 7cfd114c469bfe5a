"""CSV/JSON contracts and deterministic figure rendering."""

import json
import math

import numpy as np
import pytest

from qndspec import (
    ConfigError,
    params_hash,
    read_spectrum_csv,
    write_json_report,
    write_populations_csv,
    write_spectrum_csv,
)
from qndspec.plotting import save_populations_figure, save_spectrum_figure

TWO_PI = 2.0 * math.pi


def test_params_hash_is_canonical():
    digest = params_hash({"b": 1, "a": [1.5, None]})
    assert len(digest) == 12
    assert all(c in "0123456789abcdef" for c in digest)
    # key order irrelevant, values decisive
    assert params_hash({"a": [1.5, None], "b": 1}) == digest
    assert params_hash({"a": [1.5, None], "b": 2}) != digest


def test_spectrum_csv_round_trip(tmp_path):
    path = tmp_path / "spec.csv"
    omegas = TWO_PI * np.linspace(6000.0, 6010.0, 11)
    values = np.linspace(0.5, 1.5, 11) * 1e-3
    write_spectrum_csv(path, omegas, values, method="exact", digest="a" * 12)
    table = read_spectrum_csv(path)
    assert table.meta["method"] == "exact"
    assert table.meta["params"] == "a" * 12
    assert "version" in table.meta
    np.testing.assert_allclose(table.omegas, omegas, atol=TWO_PI * 1e-6)
    np.testing.assert_allclose(table.values, values, rtol=1e-11)

    raw = path.read_bytes()
    assert b"\r" not in raw  # LF endings only
    assert raw.decode().splitlines()[1] == "omega_L_MHz,S_value"

    # byte-identical rewrite
    write_spectrum_csv(tmp_path / "again.csv", omegas, values,
                       method="exact", digest="a" * 12)
    assert (tmp_path / "again.csv").read_bytes() == raw


def test_spectrum_csv_extra_columns(tmp_path):
    path = tmp_path / "oracle.csv"
    omegas = TWO_PI * np.array([6000.0, 6001.0])
    values = np.array([1.0, 2.0])
    write_spectrum_csv(path, omegas, values, method="oracle", digest="0" * 12,
                       extra_columns={"converged": [1, 0],
                                      "tail_occupation": [1e-9, 2e-7]})
    lines = path.read_text().splitlines()
    assert lines[1] == "omega_L_MHz,S_value,converged,tail_occupation"
    assert lines[2].split(",")[2] == "1"
    assert float(lines[3].split(",")[3]) == pytest.approx(2e-7)
    table = read_spectrum_csv(path)  # extras ignored on read
    assert len(table.values) == 2


def test_read_rejects_malformed_files(tmp_path):
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("# method=x params=y version=z\nfreq,val\n1,2\n")
    with pytest.raises(ConfigError, match="omega_L_MHz"):
        read_spectrum_csv(bad_header)

    short_row = tmp_path / "s.csv"
    short_row.write_text("omega_L_MHz,S_value\n6000.0\n")
    with pytest.raises(ConfigError, match=r"s\.csv:2"):
        read_spectrum_csv(short_row)

    bad_float = tmp_path / "f.csv"
    bad_float.write_text("omega_L_MHz,S_value\n6000.0,abc\n")
    with pytest.raises(ConfigError, match=r"f\.csv:2"):
        read_spectrum_csv(bad_float)

    empty = tmp_path / "e.csv"
    empty.write_text("omega_L_MHz,S_value\n")
    with pytest.raises(ConfigError, match="no data"):
        read_spectrum_csv(empty)

    with pytest.raises(ConfigError, match="cannot read"):
        read_spectrum_csv(tmp_path / "missing.csv")


def test_populations_csv(tmp_path):
    path = tmp_path / "pops.csv"
    times = np.array([0.0, 0.5, 1.0])
    pops = np.array([[0.0, 1.0], [0.4, 0.6], [0.6, 0.4]])
    write_populations_csv(path, times, pops, ["0", "1"], digest="f" * 12)
    lines = path.read_text().splitlines()
    assert lines[1] == "tau_us,p_0,p_1"
    assert lines[2].startswith("0.000000,")
    assert len(lines) == 5


def test_json_report(tmp_path):
    path = tmp_path / "report.json"
    write_json_report(path, {"weights": [0.25, 0.75], "n_qubits": 1})
    loaded = json.loads(path.read_text())
    assert loaded["weights"] == [0.25, 0.75]
    assert path.read_text().endswith("\n")
    with pytest.raises(ValueError):
        write_json_report(path, {"bad": float("nan")})


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def test_spectrum_figure_is_deterministic(tmp_path):
    omegas = TWO_PI * np.linspace(6000.0, 6010.0, 101)
    values = 1.0 / ((omegas - TWO_PI * 6005.0) ** 2 + 1.0)
    first = tmp_path / "one.svg"
    second = tmp_path / "two.svg"
    save_spectrum_figure(omegas, values, first, label="exact")
    save_spectrum_figure(omegas, values, second, label="exact")
    assert first.read_bytes() == second.read_bytes()
    assert first.stat().st_size > 1000


def test_figure_formats(tmp_path):
    omegas = TWO_PI * np.linspace(0.0, 1.0, 11)
    values = np.ones(11)
    save_spectrum_figure(omegas, values, tmp_path / "fig.pdf")
    assert (tmp_path / "fig.pdf").stat().st_size > 500
    with pytest.raises(ConfigError, match="format"):
        save_spectrum_figure(omegas, values, tmp_path / "fig.png")


def test_populations_figure(tmp_path):
    times = np.linspace(0.0, 1.0, 21)
    pops = np.column_stack([1.0 - np.exp(-times), np.exp(-times)])
    out = tmp_path / "pops.svg"
    save_populations_figure(times, pops, ["0", "1"], out)
    assert out.stat().st_size > 1000
    again = tmp_path / "pops2.svg"
    save_populations_figure(times, pops, ["0", "1"], again)
    assert out.read_bytes() == again.read_bytes()
