"""Closed-form steady-state spectra for small registers.

These are independent algebraic routes to the same drive-normalized
transmission the chain solver produces: the empty cavity, the mean-field
(single pulled Lorentzian) approximation, and the explicit one- and
two-qubit rational forms.  Cross-checks against the chain live in the tests;
no closed form is trusted on its own.
"""

from __future__ import annotations

import enum

import numpy as np

from .model import (
    DeviceParams,
    DiagonalState,
    FrequencyGrid,
    ParameterError,
    Spectrum,
    derive_dispersive_shifts,
    expectation_z,
)


class ClosedFormKind(enum.Enum):
    """Which analytic route to evaluate."""

    EMPTY_CAVITY = "empty"
    MEAN_FIELD = "meanfield"
    ONE_QUBIT = "closed1"
    TWO_QUBIT = "closed2"


def empty_cavity_spectrum(params: DeviceParams,
                          grid: FrequencyGrid) -> Spectrum:
    """Bare-cavity Lorentzian: S = 1/((omega_L - omega_f)^2 + (kappa/2)^2).

    Peak 4/kappa^2 at omega_f, half width kappa/2.
    """
    detuning = grid.omegas() - params.cavity_freq
    values = 1.0 / (detuning ** 2 + (0.5 * params.cavity_decay) ** 2)
    return Spectrum(grid=grid, values=values)


def meanfield_spectrum(params: DeviceParams, state: DiagonalState,
                       grid: FrequencyGrid) -> Spectrum:
    """Mean-field spectrum: factorize <sigma_j^z a> ~ <sigma_j^z><a>.

    The whole register then acts as a single average pull
    delta_omega = sum_j Gamma_j <sigma_j^z> and the spectrum is one
    Lorentzian centered at omega_f - delta_omega.  Exact only for basis
    states; for genuine mixtures it misses the multi-peak structure
    entirely (that failure is the point of keeping it around).
    """
    params = derive_dispersive_shifts(params)
    if state.n_qubits != params.n_qubits:
        raise ParameterError(
            f"state has {state.n_qubits} qubits but device has "
            f"{params.n_qubits}")
    mean_pull = sum(shift * expectation_z(state, (j,))
                    for j, shift in enumerate(params.shifts, start=1))
    detuning = grid.omegas() - (params.cavity_freq - mean_pull)
    values = 1.0 / (detuning ** 2 + (0.5 * params.cavity_decay) ** 2)
    return Spectrum(grid=grid, values=values)


def closed_form_n1(params: DeviceParams, state: DiagonalState,
                   grid: FrequencyGrid) -> Spectrum:
    """Single-qubit rational form.

    With y = omega_L - omega_f, Z = <sigma_1^z> and
    Lambda = Gamma_1^2 + (kappa/2)^2:

        S = (y^2 - 2 y Gamma_1 Z + Lambda) / ((y^2 - Lambda)^2 + (kappa y)^2)

    The denominator is written with Lambda to first power, the only
    dimensionally consistent reading; in that form the expression is
    algebraically identical to the two-Lorentzian mixture, which the tests
    confirm against the chain solver.
    """
    params = derive_dispersive_shifts(params)
    if params.n_qubits != 1 or state.n_qubits != 1:
        raise ParameterError("closed_form_n1 requires exactly one qubit")
    shift = float(params.shifts[0])
    kappa = params.cavity_decay
    z1 = expectation_z(state, (1,))
    y = grid.omegas() - params.cavity_freq
    lam = shift ** 2 + (0.5 * kappa) ** 2
    numer = y ** 2 - 2.0 * y * shift * z1 + lam
    denom = (y ** 2 - lam) ** 2 + (kappa * y) ** 2
    return Spectrum(grid=grid, values=numer / denom)


def closed_form_n2(params: DeviceParams, state: DiagonalState,
                   grid: FrequencyGrid) -> Spectrum:
    """Two-qubit rational form S = -2(AC + BD) / (kappa (A^2 + B^2)).

    A + iB is (up to phase) the determinant of the four-dimensional chain
    and C + iD the corresponding cofactor sum; A^2 + B^2 equals the product
    of the four mixture-Lorentzian denominators.  Evaluated exactly as the
    algebra dictates, coefficient for coefficient; any discrepancy against
    the chain solver is a test failure, not something to patch here.
    """
    params = derive_dispersive_shifts(params)
    if params.n_qubits != 2 or state.n_qubits != 2:
        raise ParameterError("closed_form_n2 requires exactly two qubits")
    g1, g2 = (float(s) for s in params.shifts)
    kappa = params.cavity_decay
    z1 = expectation_z(state, (1,))
    z2 = expectation_z(state, (2,))
    z12 = expectation_z(state, (1, 2))
    y = grid.omegas() - params.cavity_freq

    quarter_k2 = 0.25 * kappa ** 2
    sum_g2 = g1 ** 2 + g2 ** 2
    y2 = y ** 2

    a = ((g1 ** 2 - g2 ** 2) ** 2 + 2.0 * (quarter_k2 - y2) * sum_g2
         + (quarter_k2 - y2) ** 2 - kappa ** 2 * y2)
    b = -2.0 * kappa * y * (sum_g2 + quarter_k2 - y2)
    c = (kappa * z12 * g1 * g2 - kappa * y * (z1 * g1 + z2 * g2)
         + 0.5 * kappa * (3.0 * y2 - quarter_k2 - sum_g2))
    d = (-2.0 * z12 * y * g1 * g2
         - z1 * g1 * (g1 ** 2 - g2 ** 2 + quarter_k2 - y2)
         - z2 * g2 * (g2 ** 2 - g1 ** 2 + quarter_k2 - y2)
         + y * (sum_g2 + 3.0 * quarter_k2 - y2))

    values = -2.0 * (a * c + b * d) / (kappa * (a ** 2 + b ** 2))
    return Spectrum(grid=grid, values=values)


def closed_form_spectrum(kind: ClosedFormKind, params: DeviceParams,
                         state: DiagonalState | None,
                         grid: FrequencyGrid) -> Spectrum:
    """Dispatch helper used by the CLI."""
    if kind is ClosedFormKind.EMPTY_CAVITY:
        return empty_cavity_spectrum(params, grid)
    if state is None:
        raise ParameterError(f"{kind.value} spectrum requires a state")
    if kind is ClosedFormKind.MEAN_FIELD:
        return meanfield_spectrum(params, state, grid)
    if kind is ClosedFormKind.ONE_QUBIT:
        return closed_form_n1(params, state, grid)
    if kind is ClosedFormKind.TWO_QUBIT:
        return closed_form_n2(params, state, grid)
    raise ParameterError(f"unknown closed form {kind!r}")
