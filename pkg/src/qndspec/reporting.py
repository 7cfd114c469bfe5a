"""Deterministic CSV/JSON emission and ingestion for the CLI.

Format contract, kept byte-stable across runs:
  - spectrum CSV: comment line `# method=<name> params=<12-hex> version=<v>`,
    then `omega_L_MHz,S_value[,extras...]`, then rows with the axis printed
    as fixed 6-decimal linear MHz and values in 12-significant-digit
    scientific notation, LF line endings;
  - populations CSV: same comment line, `tau_us,p_<ket>,...` columns;
  - the params hash is sha256 over the canonically serialized resolved
    configuration, truncated to 12 hex digits.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .model import angular_to_mhz


class ConfigError(ValueError):
    """Malformed configuration or data file."""


def params_hash(resolved: Mapping) -> str:
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"),
                           allow_nan=False)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]


def _meta_line(method: str, digest: str) -> str:
    return f"# method={method} params={digest} version={__version__}"


def format_axis(omega: float) -> str:
    return f"{angular_to_mhz(omega):.6f}"


def format_value(value: float) -> str:
    return f"{value:.11e}"


def write_spectrum_csv(path: str | Path, omegas: np.ndarray,
                       values: np.ndarray, *, method: str, digest: str,
                       extra_columns: Mapping[str, Sequence] | None = None
                       ) -> None:
    """Spectrum table; extra_columns adds named per-point metadata columns."""
    extra_columns = extra_columns or {}
    header = ["omega_L_MHz", "S_value", *extra_columns.keys()]
    lines = [_meta_line(method, digest), ",".join(header)]
    extras = [list(column) for column in extra_columns.values()]
    for i, (omega, value) in enumerate(zip(omegas, values)):
        row = [format_axis(float(omega)), format_value(float(value))]
        for column in extras:
            item = column[i]
            row.append(str(item) if isinstance(item, (int, str))
                       else format_value(float(item)))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


@dataclass(frozen=True)
class SpectrumTable:
    omegas: np.ndarray          # angular rad/us
    values: np.ndarray
    meta: dict[str, str]


def read_spectrum_csv(path: str | Path) -> SpectrumTable:
    """Parse a spectrum CSV back to angular units; rejects malformed files."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from err
    meta: dict[str, str] = {}
    header: list[str] | None = None
    axis: list[float] = []
    values: list[float] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line.lstrip("#").split():
                if "=" in token:
                    key, _, val = token.partition("=")
                    meta[key] = val
            continue
        fields = line.split(",")
        if header is None:
            header = fields
            if len(header) < 2 or header[0] != "omega_L_MHz" \
                    or header[1] != "S_value":
                raise ConfigError(
                    f"{path}:{lineno}: expected columns "
                    "omega_L_MHz,S_value[,...]")
            continue
        if len(fields) != len(header):
            raise ConfigError(
                f"{path}:{lineno}: {len(fields)} fields, expected "
                f"{len(header)}")
        try:
            axis.append(float(fields[0]))
            values.append(float(fields[1]))
        except ValueError as err:
            raise ConfigError(f"{path}:{lineno}: {err}") from err
    if header is None or not axis:
        raise ConfigError(f"{path}: no data rows")
    omegas = np.asarray(axis) * 2.0 * np.pi
    return SpectrumTable(omegas=omegas, values=np.asarray(values), meta=meta)


def write_populations_csv(path: str | Path, times: np.ndarray,
                          populations: np.ndarray, kets: Sequence[str], *,
                          digest: str) -> None:
    """Populations vs wait time; one p_<ket> column per basis state."""
    header = ["tau_us", *[f"p_{ket}" for ket in kets]]
    lines = [_meta_line("decay", digest), ",".join(header)]
    for time, row in zip(times, populations):
        lines.append(",".join([f"{float(time):.6f}",
                               *(format_value(float(p)) for p in row)]))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def write_json_report(path: str | Path, payload: Mapping) -> None:
    text = json.dumps(payload, indent=2, sort_keys=False, allow_nan=False)
    Path(path).write_text(text + "\n", newline="\n")
