"""Qubit energy relaxation between preparation and readout.

Each qubit decays independently: over a wait tau the excited population
survives with probability exp(-tau/t1_j), giving the per-qubit stochastic
map [[1, 1 - e], [0, e]] on (ground, excited).  The register map is the
tensor product, applied to diagonal states only (readout never creates
coherences here).

Time-averaged readout uses the linearity of the spectrum in the populations:
averaging the spectrum over the measurement window equals evaluating one
spectrum of the time-averaged populations.  The population average itself is
done analytically in the per-qubit eigenbasis of the decay map, where every
mode is a pure exponential with rate sum_{j in S} 1/t1_j and the window
average of exp(-r tau) over [0, tau_max] is (1 - exp(-r tau_max))/(r tau_max).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chain import exact_spectrum
from .model import (
    DeviceParams,
    DiagonalState,
    FrequencyGrid,
    ParameterError,
    Spectrum,
    derive_dispersive_shifts,
)

#: t1 filled in when a decay computation needs one and none was given (us).
DEFAULT_T1 = 1.0


class QuasiStaticWarning(UserWarning):
    """Readout is not fast against qubit decay; snapshots are approximate."""


def resolve_t1(n_qubits: int, t1s: Sequence[float | None] | None,
               params: DeviceParams | None = None) -> list[float]:
    """Per-qubit t1 list in us; explicit values win over device values, and
    missing entries fall back to the 1 us default."""
    if t1s is None:
        if params is not None:
            t1s = [q.t1 for q in params.qubits]
        else:
            t1s = [None] * n_qubits
    t1s = list(t1s)
    if len(t1s) != n_qubits:
        raise ParameterError(
            f"need {n_qubits} t1 values, got {len(t1s)}")
    resolved = []
    for index, t1 in enumerate(t1s, start=1):
        if t1 is None:
            resolved.append(DEFAULT_T1)
            continue
        t1 = float(t1)
        if math.isinf(t1):
            resolved.append(math.inf)
        elif not t1 > 0.0:
            raise ParameterError(f"t1 for qubit {index} must be > 0 us")
        else:
            resolved.append(t1)
    return resolved


def _survival(t1: float, tau: float) -> float:
    return 1.0 if math.isinf(t1) else math.exp(-tau / t1)


def _apply_per_qubit(probs: np.ndarray, n_qubits: int,
                     factors: Sequence[float]) -> np.ndarray:
    """Apply [[1, 1-e_j], [0, e_j]] on every qubit axis.

    probs is indexed by k with qubit j on bit j-1; reshaped to (2,)*N the
    most significant bit (qubit N) sits on axis 0, so qubit j acts on axis
    N - j.
    """
    if n_qubits == 0:
        return probs.copy()
    grid = probs.reshape((2,) * n_qubits).copy()
    for j, e in enumerate(factors, start=1):
        axis = n_qubits - j
        ground = np.take(grid, 0, axis=axis)
        excited = np.take(grid, 1, axis=axis)
        stacked = np.stack([ground + (1.0 - e) * excited, e * excited],
                           axis=axis)
        grid = stacked
    return grid.reshape(-1)


def decay_populations(state: DiagonalState, t1s: Sequence[float | None],
                      tau: float) -> DiagonalState:
    """Populations after every qubit relaxes independently for tau (us)."""
    if tau < 0.0:
        raise ParameterError("tau must be >= 0")
    t1s = resolve_t1(state.n_qubits, t1s)
    factors = [_survival(t1, tau) for t1 in t1s]
    probs = _apply_per_qubit(np.asarray(state.probs, float),
                             state.n_qubits, factors)
    return DiagonalState(state.n_qubits, probs)


@dataclass(frozen=True)
class DecayTrajectory:
    """Populations sampled along a wait-time axis.

    The all-ground population never decreases along the trajectory, which
    the constructor asserts.
    """

    times: np.ndarray
    states: tuple[DiagonalState, ...]

    def __post_init__(self) -> None:
        times = np.asarray(self.times, float)
        if times.ndim != 1 or len(times) != len(self.states):
            raise ParameterError("times and states lengths differ")
        if np.any(np.diff(times) <= 0.0):
            raise ParameterError("times must be strictly increasing")
        ground = np.array([s.probs[0] for s in self.states])
        if np.any(np.diff(ground) < -1e-12):
            raise ParameterError(
                "all-ground population decreased along the trajectory")
        times = times.copy()
        times.flags.writeable = False
        object.__setattr__(self, "times", times)

    def populations(self) -> np.ndarray:
        """(len(times), 2^N) matrix of populations."""
        return np.array([s.probs for s in self.states])


def decay_trajectory(state: DiagonalState, t1s: Sequence[float | None],
                     times: Sequence[float]) -> DecayTrajectory:
    states = tuple(decay_populations(state, t1s, float(t)) for t in times)
    return DecayTrajectory(times=np.asarray(times, float), states=states)


def averaged_populations(state: DiagonalState,
                         t1s: Sequence[float | None], tau_max: float,
                         n_steps: int = 64,
                         method: str = "analytic") -> DiagonalState:
    """Populations averaged uniformly over the wait window [0, tau_max].

    method="analytic" (default) evaluates the window integrals exactly, so
    n_steps is irrelevant to it; method="trapezoid" averages
    decay_populations at n_steps+1 equally spaced times and exists as an
    independent cross-check of the analytic path.
    """
    if tau_max < 0.0:
        raise ParameterError("tau_max must be >= 0")
    if tau_max == 0.0:
        return DiagonalState(state.n_qubits, np.array(state.probs))
    t1s = resolve_t1(state.n_qubits, t1s)
    if method == "trapezoid":
        if n_steps < 1:
            raise ParameterError("n_steps must be >= 1")
        times = np.linspace(0.0, tau_max, n_steps + 1)
        table = np.array([decay_populations(state, t1s, float(t)).probs
                          for t in times])
        weights = np.full(n_steps + 1, 1.0 / n_steps)
        weights[0] = weights[-1] = 0.5 / n_steps
        return DiagonalState(state.n_qubits, weights @ table)
    if method != "analytic":
        raise ParameterError(f"unknown averaging method {method!r}")

    # per-qubit eigenbasis of the decay map: T = V diag(1, e) V^-1 with
    # V = [[1, -1], [0, 1]]; modes are labeled by the same bit patterns and
    # decay at rate sum of 1/t1 over the set bits
    n = state.n_qubits
    probs = np.asarray(state.probs, float)
    if n == 0:
        return DiagonalState(0, probs.copy())
    grid = probs.reshape((2,) * n).copy()
    for j in range(1, n + 1):
        axis = n - j
        ground = np.take(grid, 0, axis=axis)
        excited = np.take(grid, 1, axis=axis)
        grid = np.stack([ground + excited, excited], axis=axis)  # V^-1
    coeffs = grid.reshape(-1)

    rates = np.zeros(1 << n)
    masks = np.arange(1 << n)
    for j, t1 in enumerate(t1s, start=1):
        gamma = 0.0 if math.isinf(t1) else 1.0 / t1
        rates += gamma * ((masks >> (j - 1)) & 1)
    x = rates * tau_max
    averages = np.where(x > 0.0, -np.expm1(-x) / np.where(x > 0.0, x, 1.0),
                        1.0)
    coeffs = coeffs * averages

    grid = coeffs.reshape((2,) * n)
    for j in range(1, n + 1):
        axis = n - j
        ground = np.take(grid, 0, axis=axis)
        excited = np.take(grid, 1, axis=axis)
        grid = np.stack([ground - excited, excited], axis=axis)  # V
    return DiagonalState(n, grid.reshape(-1))


def _warn_if_slow(params: DeviceParams, t1s: Sequence[float]) -> None:
    finite = [t1 for t1 in t1s if not math.isinf(t1)]
    if not finite:
        return
    worst = max(1.0 / t1 for t1 in finite)
    if worst > 0.5 * params.cavity_decay:
        warnings.warn(
            "qubit decay is not slow against the cavity linewidth "
            f"(max 1/t1 = {worst:.3g}/us vs kappa = "
            f"{params.cavity_decay:.3g}); the quasi-static snapshot is "
            "unreliable", QuasiStaticWarning, stacklevel=3)


def quasi_static_spectrum(params: DeviceParams, initial: DiagonalState,
                          tau: float, grid: FrequencyGrid,
                          t1s: Sequence[float | None] | None = None
                          ) -> Spectrum:
    """Spectrum of the snapshot populations after waiting tau (us).

    Valid when readout is fast against decay (kappa >> 1/t1); a warning is
    issued otherwise.
    """
    params = derive_dispersive_shifts(params)
    resolved = resolve_t1(initial.n_qubits, t1s, params)
    _warn_if_slow(params, resolved)
    snapshot = decay_populations(initial, resolved, tau)
    return exact_spectrum(params, snapshot, grid)


def time_averaged_spectrum(params: DeviceParams, initial: DiagonalState,
                           tau_max: float, grid: FrequencyGrid,
                           n_steps: int = 64,
                           t1s: Sequence[float | None] | None = None,
                           method: str = "analytic") -> Spectrum:
    """Spectrum averaged over a readout window [0, tau_max] (us).

    The spectrum is linear in the populations, so the window average of the
    spectrum equals one spectrum of the window-averaged populations; the
    implementation exploits exactly that.
    """
    params = derive_dispersive_shifts(params)
    resolved = resolve_t1(initial.n_qubits, t1s, params)
    _warn_if_slow(params, resolved)
    averaged = averaged_populations(initial, resolved, tau_max,
                                    n_steps=n_steps, method=method)
    return exact_spectrum(params, averaged, grid)
