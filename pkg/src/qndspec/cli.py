"""Command-line interface: JSON config in, deterministic CSV/JSON/figures out.

Subcommands: validate, spectrum, oracle, decay, average, infer, plot.
Exit codes: 0 success, 2 configuration or validation error, 3 numerical
non-convergence.  All frequencies in configs are linear MHz; see the README
for the schema.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .chain import exact_spectrum, fast_spectrum, mixture_spectrum
from .decay import (
    averaged_populations,
    decay_trajectory,
    quasi_static_spectrum,
    resolve_t1,
    time_averaged_spectrum,
)
from .infer import (
    DEFAULT_PROMINENCE,
    infer_weights,
    match_peaks,
)
from .lindblad import ConvergenceError, TruncationConfig, oracle_spectrum
from .model import (
    DeviceParams,
    DiagonalState,
    FrequencyGrid,
    ParameterError,
    QubitParams,
    Spectrum,
    basis_index,
    derive_dispersive_shifts,
    ket_label,
    validate_dispersive,
)
from .plotting import save_populations_figure, save_spectrum_figure
from .presets import preset_device_dict, preset_names
from .reporting import (
    ConfigError,
    params_hash,
    read_spectrum_csv,
    write_json_report,
    write_populations_csv,
    write_spectrum_csv,
)
from .spectra import (
    closed_form_n1,
    closed_form_n2,
    empty_cavity_spectrum,
    meanfield_spectrum,
)

SPECTRUM_METHODS = ("exact", "fast", "mixture", "meanfield",
                    "closed1", "closed2")


# ---------------------------------------------------------------------------
# config ingestion
# ---------------------------------------------------------------------------

def _expect_mapping(value: Any, path: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise ConfigError(f"{path}: expected an object")
    return value


def _expect_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if not math.isfinite(float(value)):
        raise ConfigError(f"{path}: must be finite")
    return float(value)


def _expect_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _optional_number(block: Mapping, key: str, path: str) -> float | None:
    if key not in block or block[key] is None:
        return None
    return _expect_number(block[key], f"{path}.{key}")


def load_config_file(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err})") from err
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return raw


def _merge_device_block(raw: dict, preset: str | None) -> dict:
    block = dict(raw.get("device") or {})
    if preset is not None:
        base = preset_device_dict(preset)
        merged = dict(base)
        for key, value in block.items():
            merged[key] = value
        block = merged
    if not block:
        raise ConfigError(
            "device: missing; supply a config device block or "
            f"--params-preset ({', '.join(preset_names())})")
    return block


def _parse_device(block: Mapping) -> DeviceParams:
    block = _expect_mapping(block, "device")
    known = {"cavity_freq_MHz", "kappa_MHz", "drive_MHz", "max_qubits",
             "qubits"}
    for key in block:
        if key not in known:
            raise ConfigError(f"device.{key}: unknown field")
    if "cavity_freq_MHz" not in block:
        raise ConfigError("device.cavity_freq_MHz: required")
    if "kappa_MHz" not in block:
        raise ConfigError("device.kappa_MHz: required")
    cavity = _expect_number(block["cavity_freq_MHz"], "device.cavity_freq_MHz")
    kappa = _expect_number(block["kappa_MHz"], "device.kappa_MHz")
    if kappa <= 0.0:
        raise ConfigError("device.kappa_MHz: must be > 0")
    drive = _optional_number(block, "drive_MHz", "device")
    qubits = []
    for index, item in enumerate(block.get("qubits") or []):
        path = f"device.qubits[{index}]"
        item = _expect_mapping(item, path)
        for key in item:
            if key not in {"omega_MHz", "g_MHz", "gamma_shift_MHz", "t1_us"}:
                raise ConfigError(f"{path}.{key}: unknown field")
        omega = _optional_number(item, "omega_MHz", path)
        g = _optional_number(item, "g_MHz", path)
        shift = _optional_number(item, "gamma_shift_MHz", path)
        t1 = _optional_number(item, "t1_us", path)
        if shift is not None and g is not None:
            raise ConfigError(
                f"{path}: give either gamma_shift_MHz or (omega_MHz, g_MHz),"
                " not both")
        try:
            qubits.append(QubitParams.from_mhz(
                omega_mhz=omega, g_mhz=g, gamma_shift_mhz=shift, t1_us=t1))
        except ParameterError as err:
            raise ConfigError(f"{path}: {err}") from err
    kwargs = {}
    if "max_qubits" in block:
        kwargs["max_qubits"] = _expect_int(block["max_qubits"],
                                           "device.max_qubits")
    try:
        return DeviceParams.from_mhz(cavity_freq_mhz=cavity, kappa_mhz=kappa,
                                     qubits=qubits, drive_mhz=drive, **kwargs)
    except ParameterError as err:
        raise ConfigError(f"device: {err}") from err


def _parse_state(raw: dict, device: DeviceParams,
                 ket_flag: str | None) -> DiagonalState | None:
    block = raw.get("state")
    if ket_flag is not None:
        if block is not None:
            raise ConfigError("state: given both in config and via --ket")
        block = {"ket": ket_flag}
    if block is None:
        return None
    block = _expect_mapping(block, "state")
    if "ket" in block:
        ket = block["ket"]
        if not isinstance(ket, str):
            raise ConfigError("state.ket: expected a 0/1 string")
        try:
            state = DiagonalState.from_ket(ket)
        except ParameterError as err:
            raise ConfigError(f"state.ket: {err}") from err
    else:
        if "probs" not in block:
            raise ConfigError("state: needs probs (or ket)")
        probs = block["probs"]
        if not isinstance(probs, list):
            raise ConfigError("state.probs: expected a list")
        n_qubits = block.get("n_qubits")
        if n_qubits is None:
            size = len(probs)
            n_qubits = max(size - 1, 1).bit_length() if size > 1 else 0
            if (1 << n_qubits) != size:
                raise ConfigError(
                    f"state.probs: length {size} is not a power of 2")
        else:
            n_qubits = _expect_int(n_qubits, "state.n_qubits")
        try:
            state = DiagonalState(
                n_qubits, np.array([_expect_number(p, "state.probs[]")
                                    for p in probs]))
        except ParameterError as err:
            raise ConfigError(f"state: {err}") from err
    if state.n_qubits != device.n_qubits:
        raise ConfigError(
            f"state: has {state.n_qubits} qubits, device has "
            f"{device.n_qubits}")
    return state


def _parse_grid(raw: dict, device: DeviceParams) -> FrequencyGrid:
    block = _expect_mapping(raw.get("grid") or {}, "grid")
    for key in block:
        if key not in {"center_MHz", "half_span_MHz", "points"}:
            raise ConfigError(f"grid.{key}: unknown field")
    points = _expect_int(block.get("points", 1001), "grid.points")
    center = _optional_number(block, "center_MHz", "grid")
    half_span = _optional_number(block, "half_span_MHz", "grid")
    derived = derive_dispersive_shifts(device)
    if center is None:
        center_ang = derived.cavity_freq
    else:
        center_ang = 2.0 * math.pi * center
    if half_span is None:
        half_ang = float(derived.shifts.sum()) + 10.0 * derived.cavity_decay
    else:
        if half_span <= 0.0:
            raise ConfigError("grid.half_span_MHz: must be > 0")
        half_ang = 2.0 * math.pi * half_span
    try:
        return FrequencyGrid.from_center(center_ang, half_ang, points)
    except ParameterError as err:
        raise ConfigError(f"grid: {err}") from err


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs, already validated and in angular units."""

    device: DeviceParams
    state: DiagonalState | None
    grid: FrequencyGrid
    raw: dict
    seed: int

    def block(self, name: str) -> Mapping:
        return _expect_mapping(self.raw.get(name) or {}, name)

    def output_path(self, kind: str, flag_value: str | None,
                    default: str) -> Path:
        if flag_value:
            return Path(flag_value)
        block = self.raw.get("output") or {}
        if kind in block and block[kind]:
            return Path(str(block[kind]))
        return Path(default)

    def resolved(self, command: str, **task: Any) -> dict:
        """Canonical dict hashed into CSV headers."""
        device = derive_dispersive_shifts(self.device)
        return {
            "command": command,
            "seed": self.seed,
            "device": {
                "cavity_freq_MHz": device.cavity_freq / (2 * math.pi),
                "kappa_MHz": device.cavity_decay / (2 * math.pi),
                "drive_MHz": device.drive / (2 * math.pi),
                "qubits": [
                    {"gamma_shift_MHz":
                         q.dispersive_shift / (2 * math.pi),
                     "t1_us": q.t1}
                    for q in device.qubits
                ],
            },
            "state": (None if self.state is None
                      else list(map(float, self.state.probs))),
            "grid": {"start_MHz": self.grid.start / (2 * math.pi),
                     "stop_MHz": self.grid.stop / (2 * math.pi),
                     "points": self.grid.count},
            "task": task,
        }


def build_run_config(args: argparse.Namespace) -> RunConfig:
    raw = load_config_file(args.config) if args.config else {}
    preset = getattr(args, "params_preset", None)
    device = _parse_device(_merge_device_block(raw, preset))
    try:
        device = derive_dispersive_shifts(device)
    except ParameterError as err:
        raise ConfigError(f"device: {err}") from err
    state = _parse_state(raw, device, getattr(args, "ket", None))
    grid = _parse_grid(raw, device)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed: expected an integer")
    return RunConfig(device=device, state=state, grid=grid, raw=raw,
                     seed=seed)


def _require_state(config: RunConfig) -> DiagonalState:
    if config.state is None:
        if config.device.n_qubits == 0:
            return DiagonalState(0, np.array([1.0]))
        raise ConfigError("state: required for this command "
                          "(config state block or --ket)")
    return config.state


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_validate(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    block = config.block("validate")
    threshold = float(block.get("threshold", 0.1))
    report = validate_dispersive(config.device, threshold=threshold)
    print(report.format())
    return 0 if report.passed else 2


def cmd_spectrum(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    state = _require_state(config)
    method = args.method
    grid = config.grid
    if method == "exact":
        spectrum = exact_spectrum(config.device, state, grid)
    elif method == "fast":
        spectrum = fast_spectrum(config.device, state, grid)
    elif method == "mixture":
        spectrum = mixture_spectrum(config.device, state, grid)
    elif method == "meanfield":
        spectrum = meanfield_spectrum(config.device, state, grid)
    elif method == "closed1":
        spectrum = closed_form_n1(config.device, state, grid)
    elif method == "closed2":
        spectrum = closed_form_n2(config.device, state, grid)
    else:
        raise ConfigError(f"unknown method {method!r}")
    digest = params_hash(config.resolved("spectrum", method=method))
    out = config.output_path("spectrum_csv", args.output, "spectrum.csv")
    write_spectrum_csv(out, spectrum.omegas, spectrum.values,
                       method=method, digest=digest)
    print(f"wrote {out}")
    _maybe_figure(args, config, spectrum.omegas, spectrum.values,
                  label=method)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    state = _require_state(config)
    block = config.block("oracle")
    for key in block:
        if key not in {"n_max", "drive_MHz", "time_step_us",
                       "convergence_tol", "max_time_us"}:
            raise ConfigError(f"oracle.{key}: unknown field")
    drive = _optional_number(block, "drive_MHz", "oracle")
    try:
        trunc = TruncationConfig(
            n_max=_expect_int(block.get("n_max", 8), "oracle.n_max"),
            drive=None if drive is None else 2.0 * math.pi * drive,
            time_step=_optional_number(block, "time_step_us", "oracle"),
            convergence_tol=float(block.get("convergence_tol", 1e-6)),
            max_time=_optional_number(block, "max_time_us", "oracle"))
    except ParameterError as err:
        raise ConfigError(f"oracle: {err}") from err
    result = oracle_spectrum(config.device, state, config.grid, trunc,
                             strict=False)
    digest = params_hash(config.resolved(
        "oracle", n_max=trunc.n_max, convergence_tol=trunc.convergence_tol))
    out = config.output_path("spectrum_csv", args.output, "oracle.csv")
    extra = {
        "converged": [1 if p.converged else 0 for p in result.points],
        "tail_occupation": [0.0 if math.isnan(p.tail_occupation)
                            else p.tail_occupation for p in result.points],
        "steps": [p.steps for p in result.points],
    }
    write_spectrum_csv(out, result.spectrum.omegas, result.spectrum.values,
                       method="oracle", digest=digest, extra_columns=extra)
    print(f"wrote {out}")
    _maybe_figure(args, config, result.spectrum.omegas,
                  result.spectrum.values, label="oracle")
    if not result.all_converged:
        bad = [p.omega_probe for p in result.points if not p.converged]
        print(f"error: {len(bad)} grid point(s) did not converge "
              f"(first at omega_L = {bad[0] / (2 * math.pi):.6f} MHz)",
              file=sys.stderr)
        return 3
    return 0


def _decay_block(config: RunConfig) -> Mapping:
    block = config.block("decay")
    for key in block:
        if key not in {"tau_us", "tau_max_us", "n_steps",
                       "trajectory_points", "t1_us"}:
            raise ConfigError(f"decay.{key}: unknown field")
    return block


def _decay_t1(block: Mapping, config: RunConfig,
              state: DiagonalState) -> list[float]:
    t1s = block.get("t1_us")
    if t1s is not None:
        if not isinstance(t1s, list):
            raise ConfigError("decay.t1_us: expected a list")
        t1s = [None if t is None else _expect_number(t, "decay.t1_us[]")
               for t in t1s]
    try:
        return resolve_t1(state.n_qubits, t1s, config.device)
    except ParameterError as err:
        raise ConfigError(f"decay: {err}") from err


def cmd_decay(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    state = _require_state(config)
    block = _decay_block(config)
    if "tau_us" not in block:
        raise ConfigError("decay.tau_us: required")
    tau = _expect_number(block["tau_us"], "decay.tau_us")
    if tau < 0.0:
        raise ConfigError("decay.tau_us: must be >= 0")
    points = _expect_int(block.get("trajectory_points", 101),
                         "decay.trajectory_points")
    t1s = _decay_t1(block, config, state)

    times = (np.linspace(0.0, tau, points) if tau > 0.0
             else np.array([0.0]))
    trajectory = decay_trajectory(state, t1s, times)
    spectrum = quasi_static_spectrum(config.device, state, tau, config.grid,
                                     t1s=t1s)
    digest = params_hash(config.resolved("decay", tau_us=tau, t1_us=t1s))
    kets = state.ket_labels()
    pop_out = config.output_path("populations_csv", args.populations_output,
                                 "populations.csv")
    write_populations_csv(pop_out, trajectory.times,
                          trajectory.populations(), kets, digest=digest)
    spec_out = config.output_path("spectrum_csv", args.output,
                                  "decay_spectrum.csv")
    write_spectrum_csv(spec_out, spectrum.omegas, spectrum.values,
                       method="decay", digest=digest)
    print(f"wrote {pop_out}")
    print(f"wrote {spec_out}")
    _maybe_figure(args, config, spectrum.omegas, spectrum.values,
                  label=f"snapshot at tau={tau:g} us")
    if getattr(args, "populations_figure", None):
        save_populations_figure(trajectory.times, trajectory.populations(),
                                kets, args.populations_figure)
        print(f"wrote {args.populations_figure}")
    return 0


def cmd_average(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    state = _require_state(config)
    block = _decay_block(config)
    if "tau_max_us" not in block:
        raise ConfigError("decay.tau_max_us: required for averaging")
    tau_max = _expect_number(block["tau_max_us"], "decay.tau_max_us")
    if tau_max < 0.0:
        raise ConfigError("decay.tau_max_us: must be >= 0")
    n_steps = _expect_int(block.get("n_steps", 64), "decay.n_steps")
    t1s = _decay_t1(block, config, state)
    spectrum = time_averaged_spectrum(config.device, state, tau_max,
                                      config.grid, n_steps=n_steps, t1s=t1s)
    digest = params_hash(config.resolved("average", tau_max_us=tau_max,
                                         n_steps=n_steps, t1_us=t1s))
    out = config.output_path("spectrum_csv", args.output, "average.csv")
    write_spectrum_csv(out, spectrum.omegas, spectrum.values,
                       method="average", digest=digest)
    print(f"wrote {out}")
    _maybe_figure(args, config, spectrum.omegas, spectrum.values,
                  label=f"averaged over [0, {tau_max:g}] us")
    return 0


def cmd_infer(args: argparse.Namespace) -> int:
    config = build_run_config(args)
    block = config.block("infer")
    for key in block:
        if key not in {"prominence", "input_csv"}:
            raise ConfigError(f"infer.{key}: unknown field")
    prominence = float(block.get("prominence", DEFAULT_PROMINENCE))
    input_path = args.input or block.get("input_csv")
    if not input_path:
        raise ConfigError("infer: needs an input spectrum CSV "
                          "(--input or infer.input_csv)")
    table = read_spectrum_csv(input_path)
    estimate = infer_weights((table.omegas, table.values), config.device)
    report = match_peaks((table.omegas, table.values), config.device,
                         prominence=prominence)
    device = derive_dispersive_shifts(config.device)
    n = device.n_qubits
    payload = {
        "n_qubits": n,
        "method": "nnls",
        "input": str(input_path),
        "input_method": table.meta.get("method"),
        "degenerate": estimate.degenerate,
        "weights": [
            {"basis_indices": list(group),
             "kets": [ket_label(k, n) for k in group],
             "weight": float(weight)}
            for group, weight in zip(estimate.groups, estimate.weights)
        ],
        "residual_norm": estimate.residual_norm,
        "peaks": [
            {"omega_L_MHz": p.location / (2 * math.pi),
             "height": p.height,
             "basis_index": p.basis_index,
             "ket": None if p.basis_index is None
                    else ket_label(p.basis_index, n)}
            for p in report.peaks
        ],
        "peak_match_residual_MHz": report.residual / (2 * math.pi),
        "degenerate_groups": [list(g) for g in report.degenerate_groups],
    }
    if not estimate.degenerate:
        payload["probs"] = [float(p) for p in estimate.as_basis_vector()]
    out = config.output_path("report_json", args.output, "infer.json")
    write_json_report(out, payload)
    print(f"wrote {out}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    table = read_spectrum_csv(args.input)
    out = Path(args.output or "plot.svg")
    save_spectrum_figure(table.omegas, table.values, out,
                         label=table.meta.get("method"))
    print(f"wrote {out}")
    return 0


def _maybe_figure(args: argparse.Namespace, config: RunConfig,
                  omegas: np.ndarray, values: np.ndarray,
                  label: str | None) -> None:
    figure = getattr(args, "figure", None)
    if not figure:
        block = config.raw.get("output") or {}
        figure = block.get("figure")
    if figure:
        save_spectrum_figure(omegas, values, Path(figure), label=label)
        print(f"wrote {figure}")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser, *, state: bool = True,
                output: bool = True, figure: bool = True) -> None:
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--params-preset", choices=preset_names(),
                        help="use a built-in device parameter set")
    if state:
        parser.add_argument("--ket", help="basis state, e.g. 10 "
                            "(qubit 1 leftmost); alternative to config state")
    if output:
        parser.add_argument("-o", "--output", help="output file path")
    if figure:
        parser.add_argument("--figure", help="also render a figure "
                            "(.svg or .pdf) of the main output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qndspec",
        description="Steady-state readout spectra of dispersively coupled "
                    "qubit registers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate",
                       help="check the dispersive-regime conditions")
    _add_common(p, state=False, output=False, figure=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("spectrum", help="ideal steady-state spectrum")
    _add_common(p)
    p.add_argument("--method", choices=SPECTRUM_METHODS, default="exact")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("oracle",
                       help="brute-force master-equation spectrum")
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("decay",
                       help="populations and snapshot spectrum after decay")
    _add_common(p)
    p.add_argument("--populations-output",
                   help="populations CSV path (default populations.csv)")
    p.add_argument("--populations-figure",
                   help="also render the population trajectory figure")
    p.set_defaults(func=cmd_decay)

    p = sub.add_parser("average",
                       help="spectrum averaged over a readout window")
    _add_common(p)
    p.set_defaults(func=cmd_average)

    p = sub.add_parser("infer",
                       help="estimate basis-state weights from a spectrum CSV")
    _add_common(p, figure=False)
    p.add_argument("--input", help="spectrum CSV to analyze")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("plot", help="render a spectrum CSV as a figure")
    p.add_argument("--input", required=True, help="spectrum CSV")
    p.add_argument("-o", "--output", help="figure path (.svg or .pdf)")
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ConvergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3


def entry_point() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
