"""Reading register populations back out of a measured spectrum.

The forward model is a nonnegative mixture of fixed-width Lorentzians whose
centers follow from the device parameters alone, so inference is: predict
the centers, detect peaks (diagnostics and sanity), and unmix the spectrum
with nonnegative least squares over the center dictionary.  Peak heights
alone are kept only as a cross-check; the fit is the estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import find_peaks as _scipy_find_peaks

from .chain import cavity_pulls
from .model import (
    DeviceParams,
    DiagonalState,
    ParameterError,
    Spectrum,
    derive_dispersive_shifts,
)

KKT_TOL = 1e-10
DEFAULT_PROMINENCE = 0.02
#: centers closer than kappa/100 cannot be told apart by a width-kappa line
DEGENERACY_FRACTION = 0.01


def _axis_values(spectrum, values=None) -> tuple[np.ndarray, np.ndarray]:
    if values is None:
        if isinstance(spectrum, Spectrum):
            return spectrum.omegas, np.asarray(spectrum.values, float)
        spectrum, values = spectrum
    omegas = np.asarray(spectrum, float)
    values = np.asarray(values, float)
    if omegas.ndim != 1 or omegas.shape != values.shape:
        raise ParameterError(
            f"axis shape {omegas.shape} and values shape {values.shape} "
            "must be equal one-dimensional")
    if len(omegas) == 0:
        raise ParameterError("empty spectrum")
    if not (np.all(np.isfinite(omegas)) and np.all(np.isfinite(values))):
        raise ParameterError("spectrum data must be finite")
    if np.any(np.diff(omegas) <= 0.0):
        raise ParameterError("frequency axis must be strictly increasing")
    return omegas, values


def predicted_centers(params: DeviceParams) -> np.ndarray:
    """Peak center for every basis state k: omega_f - sum_j Gamma_j s_j(k)."""
    params = derive_dispersive_shifts(params)
    return params.cavity_freq - cavity_pulls(params)


def center_groups(params: DeviceParams,
                  tol: float | None = None
                  ) -> tuple[np.ndarray, tuple[tuple[int, ...], ...]]:
    """Cluster predicted centers closer than tol (default kappa/100).

    Returns (group centers, groups of basis indices); groups are sorted by
    center and each group's center is the mean of its members.
    """
    params = derive_dispersive_shifts(params)
    if tol is None:
        tol = DEGENERACY_FRACTION * params.cavity_decay
    centers = predicted_centers(params)
    order = np.argsort(centers, kind="stable")
    groups: list[list[int]] = []
    for idx in order:
        if groups and centers[idx] - centers[groups[-1][-1]] <= tol:
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    group_centers = np.array([centers[g].mean() for g in groups])
    return group_centers, tuple(tuple(sorted(g)) for g in groups)


# ---------------------------------------------------------------------------
# peak detection
# ---------------------------------------------------------------------------

def find_peaks(spectrum, values=None,
               prominence: float = DEFAULT_PROMINENCE
               ) -> list[tuple[float, float]]:
    """Local maxima refined by 3-point quadratic interpolation.

    prominence is a fraction of the global maximum; candidates below it are
    dropped.  Accepts a Spectrum or an (omegas, values) pair.  Returns
    (location, height) tuples in increasing location order; a flat trace has
    no peaks.
    """
    if not 0.0 < prominence < 1.0:
        raise ParameterError("prominence must be a fraction in (0, 1)")
    omegas, heights = _axis_values(spectrum, values)
    top = float(heights.max())
    if top <= 0.0 or np.allclose(heights, heights[0]):
        return []
    indices, _ = _scipy_find_peaks(heights, prominence=prominence * top)
    peaks = []
    for i in indices:
        if 0 < i < len(heights) - 1:
            left, mid, right = heights[i - 1], heights[i], heights[i + 1]
            curvature = 2.0 * mid - left - right
            offset = 0.0 if curvature == 0.0 else (right - left) / (
                2.0 * curvature)
            location = omegas[i] + offset * (omegas[i + 1] - omegas[i - 1]) / 2
            height = mid - 0.25 * (left - right) * offset
        else:
            location, height = float(omegas[i]), float(heights[i])
        peaks.append((float(location), float(height)))
    return peaks


@dataclass(frozen=True)
class PeakInfo:
    location: float
    height: float
    basis_index: int | None = None


@dataclass(frozen=True)
class PeakReport:
    """Detected peaks matched to predicted basis-state centers.

    residual is the largest |location - assigned center| among matched
    peaks; degenerate_groups lists basis indices whose centers cannot be
    separated (their assignment carries the lowest index of the group).
    """

    peaks: tuple[PeakInfo, ...]
    residual: float
    degenerate_groups: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        assigned = [p.basis_index for p in self.peaks
                    if p.basis_index is not None]
        if len(assigned) != len(set(assigned)):
            raise ParameterError("peak-to-center assignment is not unique")


def match_peaks(spectrum, params: DeviceParams, values=None,
                prominence: float = DEFAULT_PROMINENCE) -> PeakReport:
    """Assign detected peaks to the nearest unclaimed predicted center.

    Peaks are processed tallest first; a peak farther than kappa from every
    free center stays unassigned.
    """
    params = derive_dispersive_shifts(params)
    detected = find_peaks(spectrum, values, prominence=prominence)
    group_centers, groups = center_groups(params)
    free = list(range(len(groups)))
    assignment: dict[int, int] = {}
    for peak_index in sorted(range(len(detected)),
                             key=lambda i: -detected[i][1]):
        location = detected[peak_index][0]
        if not free:
            break
        best = min(free, key=lambda g: abs(group_centers[g] - location))
        if abs(group_centers[best] - location) <= params.cavity_decay:
            assignment[peak_index] = best
            free.remove(best)
    infos = []
    residual = 0.0
    for i, (location, height) in enumerate(detected):
        group = assignment.get(i)
        basis = None if group is None else groups[group][0]
        if group is not None:
            residual = max(residual,
                           abs(location - float(group_centers[group])))
        infos.append(PeakInfo(location=location, height=height,
                              basis_index=basis))
    degenerate = tuple(g for g in groups if len(g) > 1)
    return PeakReport(peaks=tuple(infos), residual=residual,
                      degenerate_groups=degenerate)


# ---------------------------------------------------------------------------
# nonnegative least squares
# ---------------------------------------------------------------------------

def nnls(matrix: np.ndarray, target: np.ndarray, *,
         kkt_tol: float = KKT_TOL,
         max_iter: int | None = None) -> tuple[np.ndarray, float]:
    """Lawson-Hanson active-set NNLS with a deterministic pivot.

    Stops when every passive-set gradient component is below kkt_tol times
    the initial gradient scale (the KKT condition), or at the iteration cap.
    Returns (x >= 0, ||matrix x - target||).
    """
    matrix = np.asarray(matrix, float)
    target = np.asarray(target, float)
    m, n = matrix.shape
    if target.shape != (m,):
        raise ParameterError("target length does not match matrix rows")
    if max_iter is None:
        max_iter = 3 * n + 30
    x = np.zeros(n)
    active = np.zeros(n, dtype=bool)  # True = allowed nonzero
    gradient = matrix.T @ target
    scale = float(np.max(np.abs(gradient), initial=0.0))
    if scale == 0.0:
        return x, float(np.linalg.norm(target))
    threshold = kkt_tol * scale

    for _ in range(max_iter):
        residual_grad = matrix.T @ (target - matrix @ x)
        candidates = np.where(~active & (residual_grad > threshold))[0]
        if len(candidates) == 0:
            break
        # deterministic pivot: largest gradient, ties to the lowest index
        pivot = candidates[int(np.argmax(residual_grad[candidates]))]
        active[pivot] = True
        while True:
            trial = np.zeros(n)
            cols = np.where(active)[0]
            solution, *_ = np.linalg.lstsq(matrix[:, cols], target,
                                           rcond=None)
            trial[cols] = solution
            if np.all(trial[cols] > 0.0):
                x = trial
                break
            # step back to the boundary and drop the blocking variables
            blocked = cols[trial[cols] <= 0.0]
            ratios = x[blocked] / (x[blocked] - trial[blocked])
            alpha = float(np.min(ratios))
            x = x + alpha * (trial - x)
            x[x < 0.0] = 0.0
            drop = blocked[np.isclose(ratios, alpha)]
            active[drop] = False
            x[~active] = 0.0
    return x, float(np.linalg.norm(matrix @ x - target))


@dataclass(frozen=True)
class WeightEstimate:
    """Normalized basis-state weights unmixed from a spectrum.

    groups lists the basis indices behind each weight; degenerate centers
    are merged into one group and their split is never fabricated.  When all
    groups are singletons, as_basis_vector() lays the weights out over the
    2^N basis indices.
    """

    n_qubits: int
    groups: tuple[tuple[int, ...], ...]
    weights: np.ndarray
    residual_norm: float

    @property
    def degenerate(self) -> bool:
        return any(len(g) > 1 for g in self.groups)

    def as_basis_vector(self) -> np.ndarray:
        if self.degenerate:
            raise ParameterError(
                "degenerate centers: weights are only defined per group")
        probs = np.zeros(1 << self.n_qubits)
        for group, weight in zip(self.groups, self.weights):
            probs[group[0]] = weight
        return probs

    def weight_of(self, basis_index: int) -> float:
        for group, weight in zip(self.groups, self.weights):
            if basis_index in group:
                return float(weight)
        raise ParameterError(f"basis index {basis_index} out of range")


def infer_weights(spectrum, params: DeviceParams, values=None, *,
                  kkt_tol: float = KKT_TOL) -> WeightEstimate:
    """Unmix a spectrum into basis-state weights by NNLS over the predicted
    Lorentzian dictionary.

    Requires the axis to span every predicted center and to resolve the
    linewidth (at least 3 points per kappa).  The fitted weights are
    normalized to sum to 1.  Accepts a Spectrum or an (omegas, values) pair;
    noisy data is fine, the nonnegativity constraint handles it.
    """
    params = derive_dispersive_shifts(params)
    omegas, data = _axis_values(spectrum, values)
    group_centers, groups = center_groups(params)
    if group_centers.min() < omegas[0] or group_centers.max() > omegas[-1]:
        raise ParameterError(
            "frequency axis does not span every predicted center")
    step = float(np.max(np.diff(omegas)))
    if step > params.cavity_decay / 3.0:
        raise ParameterError(
            "frequency axis too coarse: need >= 3 points per linewidth "
            f"kappa (step {step:.3g}, kappa {params.cavity_decay:.3g})")

    half_width_sq = (0.5 * params.cavity_decay) ** 2
    dictionary = 1.0 / ((omegas[:, None] - group_centers[None, :]) ** 2
                        + half_width_sq)
    weights, residual = nnls(dictionary, data, kkt_tol=kkt_tol)
    total = float(weights.sum())
    if total <= 0.0:
        raise ParameterError(
            "spectrum fitted to zero weight everywhere; nothing to infer")
    return WeightEstimate(n_qubits=params.n_qubits, groups=groups,
                          weights=weights / total, residual_norm=residual)
