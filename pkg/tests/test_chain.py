"""Correlator-chain solver against its independent analytic routes."""

import math

import numpy as np
import pytest

from qndspec import (
    DeviceParams,
    DiagonalState,
    FrequencyGrid,
    ParameterError,
    QubitParams,
    build_chain_matrix,
    cavity_pulls,
    exact_spectrum,
    fast_spectrum,
    mixture_spectrum,
    preset_device,
    steady_correlators,
    subset_expectations,
)

TWO_PI = 2.0 * math.pi


def random_device(rng, n, kappa_range=(0.2, 5.0), shift_range=(0.5, 50.0)):
    kappa = rng.uniform(*kappa_range)
    qubits = [QubitParams.from_mhz(gamma_shift_mhz=rng.uniform(*shift_range))
              for _ in range(n)]
    return DeviceParams.from_mhz(cavity_freq_mhz=6000.0, kappa_mhz=kappa,
                                 qubits=qubits)


def random_state(rng, n):
    return DiagonalState(n, rng.dirichlet(np.ones(1 << n)))


def test_chain_matrix_structure_two_qubits():
    params = preset_device("n2-2010")
    omega = params.cavity_freq + TWO_PI * 3.0
    matrix = build_chain_matrix(params, omega)
    g1, g2 = TWO_PI * 13.0, TWO_PI * 4.0
    diag = -1j * (params.cavity_freq - omega) - 0.5 * params.cavity_decay
    expected = np.array([
        [diag, 1j * g1, 1j * g2, 0],
        [1j * g1, diag, 0, 1j * g2],
        [1j * g2, 0, diag, 1j * g1],
        [0, 1j * g2, 1j * g1, diag],
    ])
    np.testing.assert_allclose(matrix, expected, rtol=0, atol=1e-12)


def test_chain_eigenvalues_sit_on_minus_half_kappa():
    # every eigenvalue real part is exactly -kappa/2; the imaginary parts
    # are the basis-state pulls
    rng = np.random.default_rng(23)
    for n in (1, 2, 3, 4):
        params = random_device(rng, n)
        omega = params.cavity_freq + TWO_PI * rng.uniform(-20, 20)
        eigs = np.linalg.eigvals(build_chain_matrix(params, omega))
        np.testing.assert_allclose(eigs.real, -0.5 * params.cavity_decay,
                                   rtol=1e-12)
        detuning = params.cavity_freq - omega
        expected_imag = np.sort(-detuning + cavity_pulls(params))
        np.testing.assert_allclose(np.sort(eigs.imag), expected_imag,
                                   rtol=1e-9, atol=1e-9)


def test_steady_correlators_solve_and_bound():
    rng = np.random.default_rng(5)
    params = random_device(rng, 2)
    state = random_state(rng, 2)
    omega = params.cavity_freq + TWO_PI * 2.0
    corr = steady_correlators(params, state, omega)
    matrix = build_chain_matrix(params, omega)
    rhs = 1j * params.drive * subset_expectations(state)
    np.testing.assert_allclose(matrix @ corr.entries, rhs,
                               rtol=0, atol=1e-12 * np.abs(rhs).max())
    bound = 2.0 * params.drive / params.cavity_decay
    assert np.all(np.abs(corr.entries) <= bound * (1 + 1e-9))
    assert corr.amplitude == corr.entry(0)
    with pytest.raises(ParameterError):
        corr.entry(4)


def test_register_size_mismatch_rejected():
    params = preset_device("n2-2010")
    state = DiagonalState.uniform(1)
    grid = FrequencyGrid.default_window(params, count=11)
    for fn in (exact_spectrum, mixture_spectrum, fast_spectrum):
        with pytest.raises(ParameterError, match="qubits"):
            fn(params, state, grid)
    with pytest.raises(ParameterError, match="qubits"):
        steady_correlators(params, state, params.cavity_freq)


def test_cavity_pulls_hand_values():
    pulls = cavity_pulls(preset_device("n2-2010")) / TWO_PI
    # k indexes (00, 10, 01, 11); pull = Gamma_1 s_1 + Gamma_2 s_2
    np.testing.assert_allclose(pulls, [-17.0, 9.0, -9.0, 17.0])


def test_three_routes_agree_on_random_instances():
    rng = np.random.default_rng(42)
    for n in (1, 2, 3, 4):
        for _ in range(5):
            params = random_device(rng, n)
            state = random_state(rng, n)
            grid = FrequencyGrid.default_window(params, count=201)
            dense = exact_spectrum(params, state, grid).values
            mix = mixture_spectrum(params, state, grid).values
            fast = fast_spectrum(params, state, grid).values
            scale = dense.max()
            assert np.abs(dense - mix).max() <= 1e-10 * scale
            assert np.abs(dense - fast).max() <= 1e-10 * scale


def test_spectrum_is_drive_independent():
    # S = <a^dag a>/eps^2; the chain is linear in eps so normalization
    # removes the drive entirely
    rng = np.random.default_rng(3)
    base = random_device(rng, 2)
    state = random_state(rng, 2)
    grid = FrequencyGrid.default_window(base, count=101)
    weak = DeviceParams(cavity_freq=base.cavity_freq,
                        cavity_decay=base.cavity_decay, qubits=base.qubits,
                        drive=base.cavity_decay / 100.0)
    strong = DeviceParams(cavity_freq=base.cavity_freq,
                          cavity_decay=base.cavity_decay, qubits=base.qubits,
                          drive=5.0 * base.cavity_decay)
    np.testing.assert_allclose(exact_spectrum(weak, state, grid).values,
                               exact_spectrum(strong, state, grid).values,
                               rtol=1e-12)


def test_basis_state_gives_single_lorentzian():
    params = preset_device("n2-2010")
    grid = FrequencyGrid.default_window(params, count=501)
    pulls = cavity_pulls(params)
    for k in range(4):
        state = DiagonalState.basis(2, k)
        values = exact_spectrum(params, state, grid).values
        center = params.cavity_freq - pulls[k]
        lorentz = 1.0 / ((grid.omegas() - center) ** 2
                         + (0.5 * params.cavity_decay) ** 2)
        np.testing.assert_allclose(values, lorentz, rtol=1e-10)


def test_spectrum_linear_in_populations():
    params = preset_device("n2-2010")
    grid = FrequencyGrid.default_window(params, count=101)
    a = DiagonalState.from_ket("10")
    b = DiagonalState.from_ket("01")
    mix = DiagonalState(2, 0.3 * a.probs + 0.7 * b.probs)
    combo = (0.3 * exact_spectrum(params, a, grid).values
             + 0.7 * exact_spectrum(params, b, grid).values)
    np.testing.assert_allclose(exact_spectrum(params, mix, grid).values,
                               combo, rtol=1e-12)


def test_peak_value_at_center_is_four_over_kappa_squared():
    params = preset_device("n1-2010")
    from qndspec import derive_dispersive_shifts
    derived = derive_dispersive_shifts(params)
    center = derived.cavity_freq - derived.shifts[0]
    grid = FrequencyGrid.from_center(center, TWO_PI * 5.0, 2001)
    state = DiagonalState.from_ket("1")
    values = exact_spectrum(derived, state, grid).values
    # grid contains the exact center (odd count, centered)
    assert values.max() == pytest.approx(4.0 / derived.cavity_decay ** 2,
                                         rel=1e-9)


def test_empty_register_reduces_to_bare_cavity():
    params = DeviceParams.from_mhz(cavity_freq_mhz=6000.0, kappa_mhz=2.0)
    state = DiagonalState(0, np.array([1.0]))
    grid = FrequencyGrid.default_window(params, count=101)
    values = exact_spectrum(params, state, grid).values
    lorentz = 1.0 / ((grid.omegas() - params.cavity_freq) ** 2
                     + (0.5 * params.cavity_decay) ** 2)
    np.testing.assert_allclose(values, lorentz, rtol=1e-12)
