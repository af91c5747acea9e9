"""Single-user SNR maximization: closed forms, element-wise BCD for the surface
phases, optimal grid placement via dynamic programming, and the outer
alternating loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import BsIrsModel, cascaded_row
from .config import IrsGeometry, TransmitRegion
from .errors import (DegenerateChannelError, DegenerateGeometryError,
                     InfeasibleSpacingError, InvalidParameterError)

_TINY = 1e-300


def reflection_from_phases(phases) -> np.ndarray:
    return np.exp(1j * np.asarray(phases, dtype=float))


def random_reflection(rng: np.random.Generator, num_elements: int) -> np.ndarray:
    return reflection_from_phases(rng.uniform(0, 2 * np.pi, num_elements))


def snr(h_iu, phi, h_bi, w, power: float, noise_power: float) -> float:
    """Received SNR (P/sigma^2) |h_iu^H diag(phi) H w|^2 for unit-norm w."""
    row = cascaded_row(h_iu, phi, h_bi)
    w = np.asarray(w)
    if row.shape[0] != w.shape[0]:
        raise InvalidParameterError("beamformer length does not match antenna count")
    return power / noise_power * abs(row @ w) ** 2


def mrt(h_iu, phi, h_bi) -> np.ndarray:
    """Matched unit-norm transmit beamformer for the cascaded row."""
    row = cascaded_row(h_iu, phi, h_bi)
    norm = np.linalg.norm(row)
    if norm == 0:
        raise DegenerateChannelError("cascaded channel is zero; no matched direction")
    return row.conj() / norm


def optimal_irs_phase_su(h_iu, h_bi) -> np.ndarray:
    """Per-element phases co-phasing both hops (single-antenna transmitter).

    Zero-magnitude entries contribute nothing to the gain; their phase is 0.
    """
    h_iu = np.asarray(h_iu)
    h_bi = np.asarray(h_bi)
    phases = np.where((h_iu == 0) | (h_bi == 0), 0.0, np.angle(h_iu) - np.angle(h_bi))
    return reflection_from_phases(phases)


def gain_closed_form(t, geometry: IrsGeometry, h_iu, wavelength: float) -> float:
    """End-to-end power gain under co-phased reflection: (lam/4pi)^2 (sum |h|/D)^2."""
    d = np.linalg.norm(geometry.element_positions() - np.asarray(t, dtype=float), axis=1)
    if np.any(d <= 0):
        raise DegenerateGeometryError("antenna coincides with a reflecting element")
    return float((wavelength / (4 * np.pi)) ** 2 * np.sum(np.abs(h_iu) / d) ** 2)


def _h_radial(t, geometry: IrsGeometry, h_iu) -> float:
    """Radial-distance surrogate sum |h_m| / sqrt(R^2 + y_m^2 + z_m^2)."""
    t = np.asarray(t, dtype=float)
    r2 = float(t @ t)
    e = geometry.element_positions()
    return float(np.sum(np.abs(h_iu) / np.sqrt(r2 + e[:, 1] ** 2 + e[:, 2] ** 2)))


def gain_radial_approx(t, geometry: IrsGeometry, h_iu,
                       wavelength: float) -> tuple[float, tuple[float, float]]:
    """Transverse-offset-free gain approximation and its premise magnitudes.

    Valid when y_t*d/R^2 and z_t*d/R^2 are small; both are returned so the
    caller can check the premise. Exact when y_t = z_t = 0.
    """
    t = np.asarray(t, dtype=float)
    r2 = float(t @ t)
    if r2 == 0:
        raise DegenerateGeometryError("antenna at the surface center")
    premise = (abs(t[1]) * geometry.spacing / r2, abs(t[2]) * geometry.spacing / r2)
    h = _h_radial(t, geometry, h_iu)
    return (wavelength / (4 * np.pi)) ** 2 * h ** 2, premise


def optimal_single_ma_position(region: TransmitRegion) -> np.ndarray:
    """Point of the region closest to the surface center (the origin)."""
    s = float(np.clip(-region.axis_array @ region.center_array,
                      -region.length / 2, region.length / 2))
    return region.point(s)


def gain_difference(t1, t2, geometry: IrsGeometry, h_iu, wavelength: float) -> float:
    """Gain spread H^2(t1) - H^2(t2) for R(t1) <= R(t2); (lam/4pi)^2 omitted."""
    r1 = float(np.linalg.norm(t1))
    r2 = float(np.linalg.norm(t2))
    if r1 > r2 + 1e-12:
        raise InvalidParameterError("expected R(t1) <= R(t2)")
    h1 = _h_radial(t1, geometry, h_iu)
    h2 = _h_radial(t2, geometry, h_iu)
    return h1 ** 2 - h2 ** 2


@dataclass(frozen=True)
class SamplingGrid:
    """Uniform sampling of the transmit segment, with the index gap that
    guarantees the continuous spacing constraint."""

    points: np.ndarray  # (L, 3), sorted along the axis
    spacing: float
    min_gap: int

    @property
    def num_points(self) -> int:
        return len(self.points)

    @classmethod
    def from_region(cls, region: TransmitRegion, sample_spacing: float,
                    min_spacing: float) -> "SamplingGrid":
        if sample_spacing <= 0 or min_spacing <= 0:
            raise InvalidParameterError("spacings must be positive")
        num = max(1, int(round(region.length / sample_spacing)))
        delta = region.length / num
        # cell-center placement keeps symmetric fixed layouts on the grid
        offsets = (np.arange(num) + 0.5 - num / 2) * delta
        min_gap = max(1, math.ceil(min_spacing / delta - 1e-9))
        return cls(region.point(offsets), delta, min_gap)


def graph_position_select(weights, num_select: int, min_gap: int) -> list[int]:
    """Pick `num_select` indices maximizing the weight sum with pairwise index
    gaps >= min_gap. Optimal via a fixed-hop dynamic program; lowest-index
    tie-breaks throughout."""
    w = np.asarray(weights, dtype=float)
    num_points = len(w)
    if num_select < 1 or min_gap < 1:
        raise InvalidParameterError("need num_select >= 1 and min_gap >= 1")
    if (num_select - 1) * min_gap + 1 > num_points:
        raise InfeasibleSpacingError(
            f"cannot place {num_select} points with gap {min_gap} on {num_points} samples")

    value = w.copy()
    preds: list[np.ndarray] = []
    for _ in range(1, num_select):
        # prefix maxima of the previous layer, earliest index on ties
        pref_val = np.maximum.accumulate(value)
        pref_idx = np.zeros(num_points, dtype=int)
        best = value[0]
        best_i = 0
        for l in range(num_points):
            if value[l] > best:
                best, best_i = value[l], l
            pref_idx[l] = best_i
        nxt = np.full(num_points, -np.inf)
        pred = np.full(num_points, -1, dtype=int)
        nxt[min_gap:] = w[min_gap:] + pref_val[:-min_gap]
        pred[min_gap:] = pref_idx[:-min_gap]
        value, preds = nxt, preds + [pred]

    last = int(np.argmax(value))
    chosen = [last]
    for pred in reversed(preds):
        last = int(pred[last])
        chosen.append(last)
    return sorted(chosen)


def bcd_irs(h_iu, h_bi, phi_init, tol: float = 1e-3,
            max_sweeps: int = 100) -> tuple[np.ndarray, list[float]]:
    """Element-wise coordinate ascent on the cascaded-channel power.

    Returns the reflection vector and the objective trace, one entry per
    element update (plus the initial value). Each update is closed-form
    optimal, so the trace never decreases.
    """
    h_iu = np.asarray(h_iu)
    h_bi = np.atleast_2d(np.asarray(h_bi))
    phi = np.asarray(phi_init, dtype=complex).copy()
    g1 = h_iu.conj()[:, None] * h_bi  # rows g_m
    total = phi @ g1
    trace = [float(np.linalg.norm(total) ** 2)]
    num_elements = len(phi)
    for _ in range(max_sweeps):
        sweep_start = trace[-1]
        for m in range(num_elements):
            alpha = total - phi[m] * g1[m]
            inner = alpha @ g1[m].conj()
            if abs(inner) > 0:
                phi[m] = np.exp(1j * np.angle(inner))
            total = alpha + phi[m] * g1[m]
            trace.append(float(np.linalg.norm(total) ** 2))
        if trace[-1] - sweep_start <= tol * max(abs(sweep_start), _TINY):
            break
    return phi, trace


@dataclass
class SuSolution:
    """Outcome of the single-user alternating loop."""

    phi: np.ndarray
    positions: np.ndarray
    indices: list[int]
    beamformer: np.ndarray
    snr: float
    trace: list[float] = field(default_factory=list)
    iterations: int = 0


def ao_single_user(h_iu, bs_irs: BsIrsModel, grid: SamplingGrid, phi_init,
                   init_indices, power: float, noise_power: float, *,
                   tol_bcd: float = 1e-3, tol_outer: float = 1e-3,
                   max_outer: int = 50, optimize_phi: bool = True,
                   optimize_positions: bool = True) -> SuSolution:
    """Alternate reflection BCD and optimal grid placement with matched transmit
    beamforming; the SNR trace is non-decreasing."""
    h_iu = np.asarray(h_iu)
    phi = np.asarray(phi_init, dtype=complex).copy()
    indices = list(init_indices)
    num_mas = len(indices)
    grid_columns = bs_irs.matrix(grid.points)  # (M, L)
    scale = power / noise_power

    def objective(phi_cur, idx):
        row = (h_iu.conj() * phi_cur) @ grid_columns[:, idx]
        return scale * float(np.linalg.norm(row) ** 2)

    trace = [objective(phi, indices)]
    iterations = 0
    for _ in range(max_outer):
        iterations += 1
        if optimize_phi:
            phi, _ = bcd_irs(h_iu, grid_columns[:, indices], phi, tol=tol_bcd)
        gamma1 = objective(phi, indices)
        if optimize_positions:
            weights = np.abs((h_iu.conj() * phi) @ grid_columns) ** 2
            indices = graph_position_select(weights, num_mas, grid.min_gap)
        gamma2 = objective(phi, indices)
        trace.append(gamma2)
        if abs(gamma2 - gamma1) <= tol_outer * max(gamma1, _TINY):
            break

    h_sel = grid_columns[:, indices]
    w = mrt(h_iu, phi, h_sel)
    return SuSolution(phi=phi, positions=grid.points[indices], indices=indices,
                      beamformer=w, snr=snr(h_iu, phi, h_sel, w, power, noise_power),
                      trace=trace, iterations=iterations)


def fpa_indices(grid: SamplingGrid, num_mas: int, min_spacing: float) -> list[int]:
    """Grid indices of the fixed layout: symmetric about the region center with
    spacing `min_spacing`, snapped to the nearest grid points."""
    gap = max(grid.min_gap, int(round(min_spacing / grid.spacing)))
    span = (num_mas - 1) * gap
    if span + 1 > grid.num_points:
        raise InfeasibleSpacingError("fixed layout does not fit on the grid")
    first = (grid.num_points - 1 - span) / 2
    start = int(round(first))
    start = min(max(start, 0), grid.num_points - 1 - span)
    return [start + n * gap for n in range(num_mas)]
