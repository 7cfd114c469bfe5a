"""Domain types and basis conventions for dispersive multi-qubit cavity readout.

Unit convention: every frequency and rate in this package is angular, in
rad/us, i.e. 2*pi times a linear frequency in MHz.  Configuration files and
CSV axes use linear MHz; the boundary helpers below do the 2*pi conversion.
T1 relaxation times are plain microseconds (population decay exp(-tau/t1)).

Basis convention: a register of N qubits is indexed by k in [0, 2^N); qubit j
(1-based) owns bit j-1 of k, so qubit 1 is the least significant bit.  The
sigma^z eigenvalue of qubit j in basis state k is +1 when the qubit is
excited (bit set) and -1 otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

#: Angular frequencies are plain floats in rad/us.
AngularFrequency = float

#: Hard cap on register size: dense solvers hold 2^N-dimensional state.
DEFAULT_QUBIT_CAP = 12


class ParameterError(ValueError):
    """Invalid or inconsistent device, state, or grid parameters."""


def mhz_to_angular(freq_mhz: float) -> float:
    """Convert a linear frequency in MHz to angular rad/us."""
    return TWO_PI * freq_mhz


def angular_to_mhz(omega: float) -> float:
    """Convert an angular frequency in rad/us back to linear MHz."""
    return omega / TWO_PI


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return value


# ---------------------------------------------------------------------------
# device parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QubitParams:
    """Parameters of one qubit, all angular (rad/us) except t1 (us).

    The dispersive shift Gamma is either supplied directly or derived from
    (transition_freq, coupling) by derive_dispersive_shifts.  A directly
    supplied shift passes through derivation unchanged.  t1 of None means no
    decay.
    """

    transition_freq: float | None = None   # omega_j
    coupling: float | None = None          # g_j
    dispersive_shift: float | None = None  # Gamma_j = g_j^2 / |omega_f - omega_j|
    t1: float | None = None                # us, None = infinite
    renormalized_freq: float | None = None # omega_j - Gamma_j, filled on derivation

    def __post_init__(self) -> None:
        for name in ("transition_freq", "coupling", "dispersive_shift",
                     "renormalized_freq"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _require_finite(name, value))
        if self.coupling is not None and self.coupling < 0.0:
            raise ParameterError("coupling must be >= 0")
        if self.dispersive_shift is not None and self.dispersive_shift < 0.0:
            raise ParameterError("dispersive_shift must be >= 0")
        if self.t1 is not None:
            t1 = float(self.t1)
            if math.isinf(t1):
                object.__setattr__(self, "t1", None)
            elif not (t1 > 0.0) or not math.isfinite(t1):
                raise ParameterError(f"t1 must be > 0 us, got {t1!r}")
            else:
                object.__setattr__(self, "t1", t1)
        if self.dispersive_shift is None and (
                self.transition_freq is None or self.coupling is None):
            raise ParameterError(
                "qubit needs either dispersive_shift or both "
                "transition_freq and coupling")

    @classmethod
    def from_mhz(cls, *, omega_mhz: float | None = None,
                 g_mhz: float | None = None,
                 gamma_shift_mhz: float | None = None,
                 t1_us: float | None = None) -> "QubitParams":
        conv = lambda v: None if v is None else mhz_to_angular(v)
        return cls(transition_freq=conv(omega_mhz), coupling=conv(g_mhz),
                   dispersive_shift=conv(gamma_shift_mhz), t1=t1_us)


@dataclass(frozen=True)
class DeviceParams:
    """Cavity + qubit register parameters (angular rad/us).

    drive is the coherent drive amplitude epsilon; it defaults to
    cavity_decay/20, weak enough that the truncated-oscillator oracle stays
    in the linear-response regime.
    """

    cavity_freq: float                      # omega_f
    cavity_decay: float                     # kappa
    qubits: tuple[QubitParams, ...] = ()
    drive: float | None = None              # epsilon, default kappa/20
    max_qubits: int = DEFAULT_QUBIT_CAP

    def __post_init__(self) -> None:
        object.__setattr__(self, "cavity_freq",
                           _require_finite("cavity_freq", self.cavity_freq))
        decay = _require_finite("cavity_decay", self.cavity_decay)
        if not decay > 0.0:
            raise ParameterError(f"cavity_decay must be > 0, got {decay!r}")
        object.__setattr__(self, "cavity_decay", decay)
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if len(self.qubits) > self.max_qubits:
            raise ParameterError(
                f"{len(self.qubits)} qubits exceeds the cap of "
                f"{self.max_qubits} (solver state is 2^N)")
        if self.drive is None:
            object.__setattr__(self, "drive", decay / 20.0)
        else:
            drive = _require_finite("drive", self.drive)
            if drive < 0.0:
                raise ParameterError("drive must be >= 0")
            object.__setattr__(self, "drive", drive)

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    @property
    def shifts_derived(self) -> bool:
        return all(q.dispersive_shift is not None for q in self.qubits)

    @property
    def shifts(self) -> np.ndarray:
        """Per-qubit dispersive shifts Gamma_j (rad/us); requires derivation."""
        if not self.shifts_derived:
            raise ParameterError(
                "dispersive shifts not derived yet; call "
                "derive_dispersive_shifts first")
        return np.array([q.dispersive_shift for q in self.qubits], float)

    @classmethod
    def from_mhz(cls, *, cavity_freq_mhz: float, kappa_mhz: float,
                 qubits: Sequence[QubitParams] = (),
                 drive_mhz: float | None = None,
                 max_qubits: int = DEFAULT_QUBIT_CAP) -> "DeviceParams":
        drive = None if drive_mhz is None else mhz_to_angular(drive_mhz)
        return cls(cavity_freq=mhz_to_angular(cavity_freq_mhz),
                   cavity_decay=mhz_to_angular(kappa_mhz),
                   qubits=tuple(qubits), drive=drive, max_qubits=max_qubits)


def derive_dispersive_shifts(params: DeviceParams) -> DeviceParams:
    """Fill in Gamma_j = g_j^2 / |omega_f - omega_j| for every qubit.

    Directly supplied shifts pass through unchanged.  A qubit resonant with
    the cavity (zero detuning) is rejected by name.  Also fills the
    renormalized qubit frequency omega_j - Gamma_j where omega_j is known.
    Idempotent; returns a new DeviceParams.
    """
    derived = []
    for index, qubit in enumerate(params.qubits, start=1):
        shift = qubit.dispersive_shift
        if shift is None:
            detuning = abs(params.cavity_freq - qubit.transition_freq)
            if detuning == 0.0:
                raise ParameterError(
                    f"qubit {index} is resonant with the cavity "
                    "(zero detuning); dispersive shift undefined")
            shift = qubit.coupling ** 2 / detuning
        renorm = qubit.renormalized_freq
        if renorm is None and qubit.transition_freq is not None:
            renorm = qubit.transition_freq - shift
        derived.append(replace(qubit, dispersive_shift=shift,
                               renormalized_freq=renorm))
    return replace(params, qubits=tuple(derived))


# ---------------------------------------------------------------------------
# dispersive-regime validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RatioCheck:
    name: str
    value: float
    limit: float
    passed: bool


@dataclass(frozen=True)
class DispersiveReport:
    """Outcome of the dispersive-regime validity check."""

    ratios: tuple[RatioCheck, ...]
    warnings: tuple[str, ...]
    passed: bool

    def format(self) -> str:
        lines = []
        for check in self.ratios:
            tag = "pass" if check.passed else "FAIL"
            lines.append(f"  [{tag}] {check.name} = {check.value:.6g} "
                         f"(limit {check.limit:g})")
        for warning in self.warnings:
            lines.append(f"  [warn] {warning}")
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def validate_dispersive(params: DeviceParams,
                        threshold: float = 0.1) -> DispersiveReport:
    """Check the small-parameter conditions of the dispersive approximation.

    For every qubit with (omega_j, g_j): requires 0 < g_j/Delta_j < threshold
    with Delta_j = |omega_f - omega_j|.  For every pair with couplings and
    frequencies known: requires g_i g_j / (Delta_i Delta_ij) and
    g_i g_j / (Delta_j Delta_ij) below threshold, Delta_ij = |omega_i -
    omega_j|; a pair with Delta_ij = 0 and both couplings given is rejected
    as degenerate.  Qubits supplying only a direct shift are checked for
    Gamma_j > 0.  Qubit decay 1/t1 above cavity_decay/2 yields a warning
    (decay should stay well below the cavity linewidth), as does an empty
    register (vacuously valid).
    """
    params = derive_dispersive_shifts(params)
    checks: list[RatioCheck] = []
    warnings: list[str] = []

    detunings: dict[int, float] = {}
    for index, qubit in enumerate(params.qubits, start=1):
        if qubit.transition_freq is not None:
            detunings[index] = abs(params.cavity_freq - qubit.transition_freq)
        if qubit.coupling is not None and qubit.transition_freq is not None:
            ratio = qubit.coupling / detunings[index]
            checks.append(RatioCheck(
                name=f"g_{index}/Delta_{index}", value=ratio, limit=threshold,
                passed=0.0 < ratio < threshold))
        else:
            shift = qubit.dispersive_shift
            checks.append(RatioCheck(
                name=f"Gamma_{index} > 0", value=shift, limit=0.0,
                passed=shift > 0.0))
        if qubit.t1 is not None:
            gamma = 1.0 / qubit.t1
            if gamma > 0.5 * params.cavity_decay:
                warnings.append(
                    f"qubit {index}: decay 1/t1 = {gamma:.4g} /us is not "
                    f"small against cavity_decay = {params.cavity_decay:.4g}")

    for i in range(1, params.n_qubits + 1):
        for j in range(i + 1, params.n_qubits + 1):
            qi, qj = params.qubits[i - 1], params.qubits[j - 1]
            if qi.transition_freq is None or qj.transition_freq is None:
                continue
            splitting = abs(qi.transition_freq - qj.transition_freq)
            have_couplings = (qi.coupling is not None
                              and qj.coupling is not None)
            if splitting == 0.0 and have_couplings:
                raise ParameterError(
                    f"qubits {i} and {j} are degenerate (equal transition "
                    "frequencies); cross-dispersive terms diverge")
            if not have_couplings or splitting == 0.0:
                continue
            gg = qi.coupling * qj.coupling
            for idx, det in ((i, detunings[i]), (j, detunings[j])):
                ratio = gg / (det * splitting)
                checks.append(RatioCheck(
                    name=f"g_{i}g_{j}/(Delta_{idx}Delta_{i}{j})",
                    value=ratio, limit=threshold, passed=ratio < threshold))

    if params.n_qubits == 0:
        warnings.append("empty register: dispersive conditions hold vacuously")

    passed = all(check.passed for check in checks)
    return DispersiveReport(ratios=tuple(checks), warnings=tuple(warnings),
                            passed=passed)


# ---------------------------------------------------------------------------
# basis helpers
# ---------------------------------------------------------------------------

def basis_sign(k: int, j: int, n_qubits: int | None = None) -> int:
    """sigma^z eigenvalue (+1 excited / -1 ground) of qubit j in basis state k.

    Qubit j is 1-based and owns bit j-1 of k.  When n_qubits is given, k and
    j are range-checked against the register size.
    """
    k = int(k)
    j = int(j)
    if k < 0:
        raise ParameterError(f"basis index must be >= 0, got {k}")
    if j < 1:
        raise ParameterError(f"qubit index must be >= 1, got {j}")
    if n_qubits is not None:
        if k >= (1 << n_qubits):
            raise ParameterError(
                f"basis index {k} out of range for {n_qubits} qubits")
        if j > n_qubits:
            raise ParameterError(
                f"qubit index {j} out of range for {n_qubits} qubits")
    return 1 if (k >> (j - 1)) & 1 else -1


def ket_label(k: int, n_qubits: int) -> str:
    """Bit-string label of basis state k, qubit 1 leftmost ('10' means
    qubit 1 excited, qubit 2 ground)."""
    if not 0 <= k < (1 << n_qubits):
        raise ParameterError(
            f"basis index {k} out of range for {n_qubits} qubits")
    return "".join("1" if (k >> (j - 1)) & 1 else "0"
                   for j in range(1, n_qubits + 1))


def basis_index(ket: str) -> int:
    """Inverse of ket_label: '10' -> 1 (qubit 1 excited)."""
    if not ket or any(c not in "01" for c in ket):
        raise ParameterError(f"ket label must be a nonempty 0/1 string, "
                             f"got {ket!r}")
    return sum(1 << (j - 1) for j, c in enumerate(ket, start=1) if c == "1")


# ---------------------------------------------------------------------------
# diagonal register states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagonalState:
    """Classical mixture over the 2^N sigma^z product basis.

    probs[k] is the population of basis state k.  Entries must lie in [0, 1]
    and sum to 1 within 1e-12; the stored array is a read-only copy.
    """

    n_qubits: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        if self.n_qubits < 0:
            raise ParameterError("n_qubits must be >= 0")
        probs = np.asarray(self.probs, float)
        if probs.shape != ((1 << self.n_qubits),):
            raise ParameterError(
                f"probs must have length 2^{self.n_qubits} = "
                f"{1 << self.n_qubits}, got shape {probs.shape}")
        if not np.all(np.isfinite(probs)):
            raise ParameterError("probs must be finite")
        if np.any(probs < -1e-12) or np.any(probs > 1.0 + 1e-12):
            raise ParameterError("probs must lie in [0, 1]")
        total = float(probs.sum())
        if abs(total - 1.0) > 1e-12:
            raise ParameterError(
                f"probs must sum to 1 within 1e-12, got {total!r}")
        probs = np.clip(probs, 0.0, 1.0).copy()
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @classmethod
    def basis(cls, n_qubits: int, k: int) -> "DiagonalState":
        probs = np.zeros(1 << n_qubits)
        probs[k] = 1.0
        return cls(n_qubits, probs)

    @classmethod
    def from_ket(cls, ket: str) -> "DiagonalState":
        return cls.basis(len(ket), basis_index(ket))

    @classmethod
    def uniform(cls, n_qubits: int) -> "DiagonalState":
        dim = 1 << n_qubits
        return cls(n_qubits, np.full(dim, 1.0 / dim))

    def ket_labels(self) -> list[str]:
        return [ket_label(k, self.n_qubits) for k in range(len(self.probs))]


def expectation_z(state: DiagonalState, subset: Iterable[int]) -> float:
    """Expectation of the product of sigma^z over the given qubit subset.

    The empty subset gives 1 exactly.  Linear in the state; the result is
    bounded by 1 in magnitude.
    """
    subset = tuple(subset)
    seen: set[int] = set()
    for j in subset:
        j = int(j)
        if not 1 <= j <= state.n_qubits:
            raise ParameterError(
                f"subset qubit {j} outside register of {state.n_qubits}")
        if j in seen:
            raise ParameterError(f"subset repeats qubit {j}")
        seen.add(j)
    if not subset:
        return 1.0
    k = np.arange(1 << state.n_qubits)
    signs = np.ones(len(k))
    for j in subset:
        signs *= np.where((k >> (j - 1)) & 1, 1.0, -1.0)
    return float(signs @ state.probs)


def subset_expectations(state: DiagonalState) -> np.ndarray:
    """expectation_z for every subset at once, indexed by subset bitmask.

    Computed with the fast parity (Walsh) butterfly in O(N 2^N); entry S is
    sum_k probs[k] * prod_{j in S} sign_j(k).
    """
    values = np.array(state.probs, float)
    h = 1
    size = len(values)
    while h < size:
        for start in range(0, size, 2 * h):
            top = values[start:start + h].copy()
            bottom = values[start + h:start + 2 * h]
            values[start:start + h] = top + bottom
            values[start + h:start + 2 * h] = top - bottom
        h *= 2
    # butterfly computed sum_k (-1)^{popcount(S & k)} p_k; the sigma^z
    # product differs by a global (-1)^{popcount(S)}
    parity = np.zeros(size, dtype=int)
    for mask in range(1, size):
        parity[mask] = parity[mask >> 1] ^ (mask & 1)
    values[parity == 1] *= -1.0
    return values


# ---------------------------------------------------------------------------
# frequency grids and spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform probe-frequency grid (angular rad/us, inclusive endpoints)."""

    start: float
    stop: float
    count: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", _require_finite("start", self.start))
        object.__setattr__(self, "stop", _require_finite("stop", self.stop))
        if not self.start < self.stop:
            raise ParameterError("grid start must be < stop")
        if self.count < 2:
            raise ParameterError("grid needs at least 2 points")

    @property
    def step(self) -> float:
        return (self.stop - self.start) / (self.count - 1)

    def omegas(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    @classmethod
    def from_center(cls, center: float, half_span: float,
                    count: int) -> "FrequencyGrid":
        return cls(center - half_span, center + half_span, count)

    @classmethod
    def default_window(cls, params: DeviceParams,
                       count: int = 1001) -> "FrequencyGrid":
        """Window wide enough for every dispersively shifted peak:
        cavity_freq +/- (sum of shifts + 10 kappa)."""
        params = derive_dispersive_shifts(params)
        span = float(params.shifts.sum()) + 10.0 * params.cavity_decay
        return cls.from_center(params.cavity_freq, span, count)


@dataclass(frozen=True)
class Spectrum:
    """Drive-normalized steady transmission S(omega_L) = <a^dag a>/eps^2 on a
    grid.  Values carry units 1/(rad/us)^2 and are nonnegative."""

    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, float)
        if values.shape != (self.grid.count,):
            raise ParameterError(
                f"values shape {values.shape} does not match grid count "
                f"{self.grid.count}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("spectrum values must be finite")
        floor = -1e-12 * max(1.0, float(np.max(np.abs(values), initial=0.0)))
        if np.any(values < floor):
            raise ParameterError("spectrum values must be >= 0")
        values = np.clip(values, 0.0, None).copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def omegas(self) -> np.ndarray:
        return self.grid.omegas()
