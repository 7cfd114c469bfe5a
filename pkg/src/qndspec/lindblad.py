"""Brute-force master-equation oracle in a truncated photon space.

Nothing here knows that the correlator chain closes: the full density matrix
of (cavity up to n_max photons) x (N qubits) is integrated with fixed-step
RK4 until the photon number settles.  The result is the slow, trusted
reference the analytic routes are tested against.

The drive term makes the steady photon number scale as eps^2 exactly (the
model is a driven damped oscillator inside each qubit sector), so the
reported spectrum <a^dag a>/eps^2 is drive-independent as long as the
truncation holds; tests check that too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .model import (
    DeviceParams,
    DiagonalState,
    FrequencyGrid,
    ParameterError,
    Spectrum,
    derive_dispersive_shifts,
)

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8
TAIL_LIMIT = 1e-6

# fixed-step cap: time_step <= 0.05 / (|detuning| + sum Gamma + kappa)
STEP_SAFETY = 0.05
# RK4 imaginary-axis stability: keep dt * (fastest Fock-ladder phase) modest
STABILITY_MARGIN = 1.5


class ConvergenceError(RuntimeError):
    """Time marching failed to reach a steady state.

    Carries the probe frequency and the last observed relative change so the
    failure is reportable without rerunning.
    """

    def __init__(self, message: str, *, omega_probe: float | None = None,
                 last_rel_change: float | None = None,
                 last_photon_number: float | None = None,
                 steps: int = 0, elapsed: float = 0.0):
        super().__init__(message)
        self.omega_probe = omega_probe
        self.last_rel_change = last_rel_change
        self.last_photon_number = last_photon_number
        self.steps = steps
        self.elapsed = elapsed


@dataclass(frozen=True)
class TruncationConfig:
    """Controls for the truncated-space integration.

    n_max is the highest retained Fock level.  drive overrides the device
    drive; time_step (us) overrides the automatic step but may not exceed
    the 0.05/(|detuning| + sum Gamma + kappa) cap.  Convergence is declared
    when the relative change of <a^dag a> over one cavity lifetime 1/kappa
    falls below convergence_tol before max_time (us) runs out.
    """

    n_max: int = 8
    drive: float | None = None
    time_step: float | None = None
    convergence_tol: float = 1e-6
    max_time: float | None = None

    def __post_init__(self) -> None:
        if self.n_max < 2:
            raise ParameterError("n_max must be >= 2")
        if self.drive is not None and not self.drive >= 0.0:
            raise ParameterError("drive must be >= 0")
        if self.time_step is not None and not self.time_step > 0.0:
            raise ParameterError("time_step must be > 0")
        if not self.convergence_tol > 0.0:
            raise ParameterError("convergence_tol must be > 0")
        if self.max_time is not None and not self.max_time > 0.0:
            raise ParameterError("max_time must be > 0")


@dataclass(frozen=True)
class DensityOperator:
    """Density matrix on (n_max+1) x 2^N with its sanity checks attached."""

    matrix: np.ndarray
    n_max: int
    n_qubits: int

    def __post_init__(self) -> None:
        dim = (self.n_max + 1) * (1 << self.n_qubits)
        if self.matrix.shape != (dim, dim):
            raise ParameterError(
                f"density matrix shape {self.matrix.shape} does not match "
                f"(n_max+1) * 2^N = {dim}")

    def validate(self) -> None:
        matrix = self.matrix
        herm = float(np.max(np.abs(matrix - matrix.conj().T)))
        if herm > HERMITICITY_TOL:
            raise ParameterError(
                f"density matrix not Hermitian: deviation {herm:.3e}")
        trace_err = abs(float(np.trace(matrix).real) - 1.0)
        if trace_err > TRACE_TOL:
            raise ParameterError(
                f"density matrix trace off by {trace_err:.3e}")
        lowest = float(np.linalg.eigvalsh(matrix)[0])
        if lowest < -POSITIVITY_TOL:
            raise ParameterError(
                f"density matrix not positive: lowest eigenvalue {lowest:.3e}")

    def photon_number(self) -> float:
        diag = self.matrix.diagonal().real
        levels = np.repeat(np.arange(self.n_max + 1), 1 << self.n_qubits)
        return float(levels @ diag)

    def tail_occupation(self) -> float:
        """Total population of the highest retained Fock level."""
        diag = self.matrix.diagonal().real
        sector = 1 << self.n_qubits
        return float(diag[self.n_max * sector:].sum())

    def z_expectation(self, subset: tuple[int, ...]) -> float:
        signs = np.ones(1 << self.n_qubits)
        ks = np.arange(1 << self.n_qubits)
        for j in subset:
            signs *= np.where((ks >> (j - 1)) & 1, 1.0, -1.0)
        diag = self.matrix.diagonal().real
        return float(np.tile(signs, self.n_max + 1) @ diag)


@dataclass(frozen=True)
class SteadyResult:
    """Outcome of one time marching run."""

    rho: DensityOperator
    converged: bool
    steps: int
    elapsed: float            # simulated time, us
    last_rel_change: float
    stationarity: float       # ||rho_dot||_F at the final state, diagnostic


@dataclass(frozen=True)
class OraclePoint:
    omega_probe: float
    value: float
    converged: bool
    steps: int
    elapsed: float
    tail_occupation: float


@dataclass(frozen=True)
class OracleResult:
    spectrum: Spectrum
    points: tuple[OraclePoint, ...]

    @property
    def all_converged(self) -> bool:
        return all(p.converged for p in self.points)


# ---------------------------------------------------------------------------
# operator construction
# ---------------------------------------------------------------------------

def _destroy(n_max: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1.0, n_max + 1)), 1)


def _qubit_sigma_z(j: int, n_qubits: int) -> np.ndarray:
    # qubit 1 is the least significant bit, hence the rightmost kron factor
    factors = [np.eye(2) if i != j else np.diag([-1.0, 1.0])
               for i in range(n_qubits, 0, -1)]
    return reduce(np.kron, factors, np.eye(1))


def build_operators(params: DeviceParams, omega_probe: float,
                    trunc: TruncationConfig) -> dict[str, np.ndarray]:
    """Dense Hamiltonian and collapse operators in the rotating frame.

    H = delta a^dag a + (1/2) sum_j wtilde_j sigma_j^z
        - a^dag a sum_j Gamma_j sigma_j^z + eps (a + a^dag)

    with delta = omega_f - omega_L.  The free qubit term (wtilde_j, the
    shift-renormalized frequency, taken as 0 when the bare frequency is
    unknown) commutes with every observable evaluated here and with the
    initial diagonal states, so it has no effect on results; it is kept so
    the generator is the full model, not a pre-simplified one.
    """
    params = derive_dispersive_shifts(params)
    n_qubits = params.n_qubits
    sector = 1 << n_qubits
    eye_q = np.eye(sector)
    eye_c = np.eye(trunc.n_max + 1)

    lower = _destroy(trunc.n_max)
    a_full = np.kron(lower, eye_q)
    number_full = np.kron(lower.T @ lower, eye_q)

    detuning = params.cavity_freq - omega_probe
    drive = params.drive if trunc.drive is None else trunc.drive

    pull = np.zeros((sector, sector))
    free = np.zeros((sector, sector))
    for j, qubit in enumerate(params.qubits, start=1):
        sz = _qubit_sigma_z(j, n_qubits)
        pull += qubit.dispersive_shift * sz
        wtilde = qubit.renormalized_freq
        if wtilde is not None:
            free += 0.5 * wtilde * sz

    hamiltonian = (detuning * number_full
                   + np.kron(eye_c, free)
                   - np.kron(lower.T @ lower, pull)
                   + drive * (a_full + a_full.T))
    return {"hamiltonian": hamiltonian.astype(complex), "lower": a_full,
            "number": number_full, "drive": drive}


def build_generator(params: DeviceParams, omega_probe: float,
                    trunc: TruncationConfig):
    """Return the Lindblad map rho -> rho_dot as a closure over dense ops.

    rho_dot = -i[H, rho] + (kappa/2)(2 a rho a^dag - a^dag a rho
                                     - rho a^dag a)
    """
    ops = build_operators(params, omega_probe, trunc)
    hamiltonian = ops["hamiltonian"]
    lower = ops["lower"]
    number = ops["number"]
    kappa = params.cavity_decay

    def rhs(rho: np.ndarray) -> np.ndarray:
        h_rho = hamiltonian @ rho
        jump = lower @ rho @ lower.conj().T
        n_rho = number @ rho
        return (-1j * (h_rho - h_rho.conj().T)
                + kappa * jump
                - 0.5 * kappa * (n_rho + n_rho.conj().T))

    return rhs


# ---------------------------------------------------------------------------
# time marching
# ---------------------------------------------------------------------------

def _rate_scale(params: DeviceParams, omega_probe: float) -> float:
    shifts_total = float(params.shifts.sum())
    return (abs(params.cavity_freq - omega_probe) + shifts_total
            + params.cavity_decay)


def _resolve_step(params: DeviceParams, omega_probe: float,
                  trunc: TruncationConfig) -> float:
    rate = _rate_scale(params, omega_probe)
    cap = STEP_SAFETY / rate
    # the fastest retained coherence oscillates ~n_max times faster
    stability = STABILITY_MARGIN / (rate * max(1, trunc.n_max))
    if trunc.time_step is not None:
        if trunc.time_step > cap * (1.0 + 1e-12):
            raise ParameterError(
                f"time_step {trunc.time_step:.3e} exceeds the cap "
                f"{cap:.3e} = 0.05/(|detuning| + sum Gamma + kappa)")
        return min(trunc.time_step, stability)
    return min(cap, stability)


def _rk4_step(rho: np.ndarray, rhs, dt: float) -> np.ndarray:
    k1 = rhs(rho)
    k2 = rhs(rho + 0.5 * dt * k1)
    k3 = rhs(rho + 0.5 * dt * k2)
    k4 = rhs(rho + dt * k3)
    return rho + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def initial_density(state: DiagonalState,
                    trunc: TruncationConfig) -> DensityOperator:
    """Cavity vacuum tensored with the diagonal register state."""
    sector = 1 << state.n_qubits
    dim = (trunc.n_max + 1) * sector
    rho = np.zeros((dim, dim), complex)
    rho[:sector, :sector] = np.diag(state.probs)
    return DensityOperator(matrix=rho, n_max=trunc.n_max,
                           n_qubits=state.n_qubits)


def evolve_to_steady(params: DeviceParams, state: DiagonalState,
                     omega_probe: float,
                     trunc: TruncationConfig | None = None) -> SteadyResult:
    """March rho from (vacuum x state) until <a^dag a> stops moving.

    Convergence: relative change of <a^dag a> across one cavity lifetime
    1/kappa below trunc.convergence_tol.  Raises ConvergenceError (carrying
    the last relative change) when max_time passes first, or when positivity
    degrades beyond tolerance, which indicates the step is too coarse.
    """
    params = derive_dispersive_shifts(params)
    if state.n_qubits != params.n_qubits:
        raise ParameterError(
            f"state has {state.n_qubits} qubits but device has "
            f"{params.n_qubits}")
    trunc = trunc or TruncationConfig()
    dt = _resolve_step(params, omega_probe, trunc)
    max_time = (trunc.max_time if trunc.max_time is not None
                else 50.0 / params.cavity_decay)
    lifetime = 1.0 / params.cavity_decay
    steps_per_check = max(1, int(round(lifetime / dt)))

    rhs = build_generator(params, omega_probe, trunc)
    rho = initial_density(state, trunc).matrix
    sector = 1 << params.n_qubits
    levels = np.repeat(np.arange(trunc.n_max + 1), sector)

    def photon_number(matrix: np.ndarray) -> float:
        return float(levels @ matrix.diagonal().real)

    previous = photon_number(rho)
    steps = 0
    elapsed = 0.0
    rel_change = math.inf
    converged = False
    while elapsed < max_time:
        for _ in range(steps_per_check):
            rho = _rk4_step(rho, rhs, dt)
        steps += steps_per_check
        elapsed = steps * dt
        current = photon_number(rho)
        scale = max(abs(current), abs(previous))
        rel_change = 0.0 if scale == 0.0 else abs(current - previous) / scale
        previous = current
        lowest = float(np.linalg.eigvalsh(rho)[0])
        if lowest < -POSITIVITY_TOL:
            raise ConvergenceError(
                f"positivity lost (lowest eigenvalue {lowest:.3e}); "
                "reduce time_step", omega_probe=omega_probe,
                last_rel_change=rel_change, last_photon_number=current,
                steps=steps, elapsed=elapsed)
        if rel_change < trunc.convergence_tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"no steady state within {max_time:.3g} us "
            f"(last relative change {rel_change:.3e})",
            omega_probe=omega_probe, last_rel_change=rel_change,
            last_photon_number=previous, steps=steps, elapsed=elapsed)

    result = DensityOperator(matrix=rho, n_max=trunc.n_max,
                             n_qubits=params.n_qubits)
    result.validate()
    stationarity = float(np.linalg.norm(rhs(rho)))
    return SteadyResult(rho=result, converged=True, steps=steps,
                        elapsed=elapsed, last_rel_change=rel_change,
                        stationarity=stationarity)


def oracle_spectrum(params: DeviceParams, state: DiagonalState,
                    grid: FrequencyGrid,
                    trunc: TruncationConfig | None = None,
                    strict: bool = True) -> OracleResult:
    """Drive-normalized spectrum from full density-matrix integrations.

    One time marching per grid point; each point reports convergence and the
    occupation of the highest Fock level (points with tail above 1e-6 are
    not trustworthy).  With strict=True the first non-converged point raises
    (the error carries its omega_L); with strict=False it is recorded and
    the marching's last value is kept so the caller can inspect the damage.
    """
    params = derive_dispersive_shifts(params)
    trunc = trunc or TruncationConfig()
    drive = params.drive if trunc.drive is None else trunc.drive
    if drive <= 0.0:
        # undriven cavity stays empty; S = <a^dag a>/eps^2 -> 0 point by point
        points = tuple(OraclePoint(float(w), 0.0, True, 0, 0.0, 0.0)
                       for w in grid.omegas())
        return OracleResult(
            spectrum=Spectrum(grid=grid, values=np.zeros(grid.count)),
            points=points)

    values = np.empty(grid.count)
    points: list[OraclePoint] = []
    for index, omega in enumerate(grid.omegas()):
        try:
            run = evolve_to_steady(params, state, float(omega), trunc)
            photon = run.rho.photon_number()
            tail = run.rho.tail_occupation()
            point = OraclePoint(float(omega), photon / drive ** 2,
                                True, run.steps, run.elapsed, tail)
        except ConvergenceError as err:
            if strict:
                raise
            last = max(err.last_photon_number or 0.0, 0.0)
            point = OraclePoint(float(omega), last / drive ** 2,
                                False, err.steps, err.elapsed, math.nan)
        values[index] = point.value
        points.append(point)
    return OracleResult(spectrum=Spectrum(grid=grid, values=values),
                        points=tuple(points))
