"""Steady-state readout spectra of qubit registers dispersively coupled to
a driven, lossy cavity.

The transmission spectrum of the cavity is an exact mixture of Lorentzian
lines, one per joint qubit basis state, each centered at the corresponding
dispersively pulled cavity frequency and weighted by the state's population.
This package computes those spectra several independent ways (operator
correlator chain, eigenvalue form, closed forms for one and two qubits, a
brute-force master-equation integrator), models qubit relaxation during the
readout window, and inverts measured spectra back to basis-state weights.

Units: angular frequencies in rad/us throughout the API; helpers convert to
and from linear MHz at the boundaries (2*pi rad/us = 1 MHz).  t1 times are
plain us.
"""

__version__ = "0.1.0"

from .chain import (
    CorrelatorVector,
    build_chain_matrix,
    cavity_pulls,
    exact_spectrum,
    fast_spectrum,
    mixture_spectrum,
    steady_correlators,
)
from .decay import (
    DecayTrajectory,
    QuasiStaticWarning,
    averaged_populations,
    decay_populations,
    decay_trajectory,
    quasi_static_spectrum,
    resolve_t1,
    time_averaged_spectrum,
)
from .infer import (
    PeakInfo,
    PeakReport,
    WeightEstimate,
    center_groups,
    find_peaks,
    infer_weights,
    match_peaks,
    nnls,
    predicted_centers,
)
from .lindblad import (
    ConvergenceError,
    DensityOperator,
    OraclePoint,
    OracleResult,
    SteadyResult,
    TruncationConfig,
    build_generator,
    build_operators,
    evolve_to_steady,
    initial_density,
    oracle_spectrum,
)
from .model import (
    DeviceParams,
    DiagonalState,
    DispersiveReport,
    FrequencyGrid,
    ParameterError,
    QubitParams,
    Spectrum,
    angular_to_mhz,
    basis_index,
    basis_sign,
    derive_dispersive_shifts,
    expectation_z,
    ket_label,
    mhz_to_angular,
    subset_expectations,
    validate_dispersive,
)
from .presets import preset_device, preset_device_dict, preset_names
from .reporting import (
    ConfigError,
    params_hash,
    read_spectrum_csv,
    write_json_report,
    write_populations_csv,
    write_spectrum_csv,
)
from .spectra import (
    ClosedFormKind,
    closed_form_n1,
    closed_form_n2,
    closed_form_spectrum,
    empty_cavity_spectrum,
    meanfield_spectrum,
)

__all__ = [
    "__version__",
    "CorrelatorVector",
    "build_chain_matrix",
    "cavity_pulls",
    "exact_spectrum",
    "fast_spectrum",
    "mixture_spectrum",
    "steady_correlators",
    "DecayTrajectory",
    "QuasiStaticWarning",
    "averaged_populations",
    "decay_populations",
    "decay_trajectory",
    "quasi_static_spectrum",
    "resolve_t1",
    "time_averaged_spectrum",
    "PeakInfo",
    "PeakReport",
    "WeightEstimate",
    "center_groups",
    "find_peaks",
    "infer_weights",
    "match_peaks",
    "nnls",
    "predicted_centers",
    "ConvergenceError",
    "DensityOperator",
    "OraclePoint",
    "OracleResult",
    "SteadyResult",
    "TruncationConfig",
    "build_generator",
    "build_operators",
    "evolve_to_steady",
    "initial_density",
    "oracle_spectrum",
    "DeviceParams",
    "DiagonalState",
    "DispersiveReport",
    "FrequencyGrid",
    "ParameterError",
    "QubitParams",
    "Spectrum",
    "angular_to_mhz",
    "basis_index",
    "basis_sign",
    "derive_dispersive_shifts",
    "expectation_z",
    "ket_label",
    "mhz_to_angular",
    "subset_expectations",
    "validate_dispersive",
    "preset_device",
    "preset_device_dict",
    "preset_names",
    "ConfigError",
    "params_hash",
    "read_spectrum_csv",
    "write_json_report",
    "write_populations_csv",
    "write_spectrum_csv",
    "ClosedFormKind",
    "closed_form_n1",
    "closed_form_n2",
    "closed_form_spectrum",
    "empty_cavity_spectrum",
    "meanfield_spectrum",
]
