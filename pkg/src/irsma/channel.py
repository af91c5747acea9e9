"""Channel synthesis: spherical-wave LoS, multipath, Rician and far-field models.

Sign convention: propagation phase is +2*pi*D/lambda throughout. Amplitudes use
the free-space law lambda/(4*pi*D). Element/antenna orderings follow
``IrsGeometry.element_positions`` (z-major) and the column order of the antenna
position array.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .config import IrsGeometry
from .errors import DegenerateGeometryError, InvalidParameterError


def _distances(points: np.ndarray, source: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(points - np.asarray(source, dtype=float), axis=-1)
    if np.any(d <= 0):
        raise DegenerateGeometryError("source coincides with an array point")
    return d


def rayleigh_distance(geometry: IrsGeometry, region_length: float, wavelength: float) -> float:
    """Near/far-field boundary 2*(D_irs + A)^2 / lambda for the combined aperture."""
    if wavelength <= 0:
        raise InvalidParameterError("wavelength must be positive")
    return 2.0 * (geometry.aperture + region_length) ** 2 / wavelength


def nusw_los_vector(t, geometry: IrsGeometry, wavelength: float) -> np.ndarray:
    """Spherical-wave LoS channel from a point antenna to every element, (M,)."""
    if wavelength <= 0:
        raise InvalidParameterError("wavelength must be positive")
    d = _distances(geometry.element_positions(), t)
    return wavelength / (4 * np.pi * d) * np.exp(2j * np.pi * d / wavelength)


def nusw_los_matrix(positions, geometry: IrsGeometry, wavelength: float) -> np.ndarray:
    """Per-antenna LoS channel columns stacked into an (M, N) matrix."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    return np.column_stack([nusw_los_vector(t, geometry, wavelength) for t in positions])


def near_field_response(points, source, wavelength: float) -> np.ndarray:
    """Unit-modulus spherical phase response exp(j*2*pi*||s - p||/lambda)."""
    if wavelength <= 0:
        raise InvalidParameterError("wavelength must be positive")
    d = _distances(np.atleast_2d(np.asarray(points, dtype=float)), source)
    return np.exp(2j * np.pi * d / wavelength)


@dataclass(frozen=True)
class PathCluster:
    """One scattered path: scatterer location, power ratio and complex gain."""

    scatterer: tuple[float, float, float]
    power_ratio: complex
    gain: complex

    @property
    def scatterer_array(self) -> np.ndarray:
        return np.asarray(self.scatterer, dtype=float)


@dataclass(frozen=True)
class ClusterSet:
    """LoS power ratio plus the scattered paths of one channel realization."""

    los_ratio: complex
    clusters: tuple[PathCluster, ...] = ()


def sample_clusters(rng: np.random.Generator, num_paths: int, box_center, box_size,
                    wavelength: float, bs_center) -> ClusterSet:
    """Draw the LoS/NLoS power ratios and scatterer geometry of one realization.

    Ratios l_p ~ CN(0, 1/(L+1)) for p = 0..L. Scatterers are uniform in an
    axis-aligned box. |gain_p| follows the product-path distance through the
    scatterer referenced to the region center, with uniform random phase.
    """
    if num_paths < 0:
        raise InvalidParameterError("number of paths must be >= 0")
    box_size = np.asarray(box_size, dtype=float)
    if np.any(box_size <= 0):
        raise InvalidParameterError("scatterer box must have positive side lengths")
    box_center = np.asarray(box_center, dtype=float)
    bs_center = np.asarray(bs_center, dtype=float)

    var = 1.0 / (num_paths + 1)
    ratios = np.sqrt(var / 2) * (rng.standard_normal(num_paths + 1)
                                 + 1j * rng.standard_normal(num_paths + 1))
    clusters = []
    for p in range(num_paths):
        s = box_center + (rng.random(3) - 0.5) * box_size
        path_len = np.linalg.norm(bs_center - s) + np.linalg.norm(s)
        amp = wavelength / (4 * np.pi * path_len)
        phase = rng.uniform(0, 2 * np.pi)
        clusters.append(PathCluster(tuple(s), complex(ratios[p + 1]),
                                    complex(amp * np.exp(1j * phase))))
    return ClusterSet(complex(ratios[0]), tuple(clusters))


def multipath_bs_irs(positions, geometry: IrsGeometry, clusters: ClusterSet,
                     wavelength: float) -> np.ndarray:
    """LoS component plus rank-1 scattered components, (M, N)."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    h = clusters.los_ratio * nusw_los_matrix(positions, geometry, wavelength)
    elements = geometry.element_positions()
    for c in clusters.clusters:
        a = near_field_response(elements, c.scatterer_array, wavelength)
        b = near_field_response(positions, c.scatterer_array, wavelength)
        h = h + c.power_ratio * c.gain * np.outer(a, b)
    return h


@dataclass(frozen=True)
class BsIrsModel:
    """Channel between antenna positions and the surface; columns are per-antenna.

    ``clusters=None`` means a pure LoS channel (unit LoS ratio).
    """

    geometry: IrsGeometry
    wavelength: float
    clusters: ClusterSet | None = None

    def column(self, t) -> np.ndarray:
        return self.matrix(np.atleast_2d(np.asarray(t, dtype=float)))[:, 0]

    def matrix(self, positions) -> np.ndarray:
        if self.clusters is None:
            return nusw_los_matrix(positions, self.geometry, self.wavelength)
        return multipath_bs_irs(positions, self.geometry, self.clusters, self.wavelength)


def plane_wave_response(points, direction, wavelength: float) -> np.ndarray:
    """Unit-modulus far-field response exp(j*2*pi*<p, u>/lambda) over points."""
    if wavelength <= 0:
        raise InvalidParameterError("wavelength must be positive")
    direction = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(direction) - 1.0) > 1e-9:
        raise InvalidParameterError("direction must be unit-norm")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.exp(2j * np.pi * points @ direction / wavelength)


def far_field_bs_irs(positions, geometry: IrsGeometry, arrival_direction,
                     departure_direction, path_gain: complex,
                     wavelength: float) -> np.ndarray:
    """Rank-1 far-field channel path_gain * u v^H over elements x antennas."""
    u = plane_wave_response(geometry.element_positions(), arrival_direction, wavelength)
    v = plane_wave_response(positions, departure_direction, wavelength)
    return path_gain * np.outer(u, v.conj())


def rician_iu_channel(rng: np.random.Generator, geometry: IrsGeometry,
                      user_distance: float, user_direction, rician_factor: float,
                      pathloss_exponent: float, wavelength: float) -> np.ndarray:
    """Rician surface-to-user channel with plane-wave LoS component, (M,)."""
    if user_distance <= 0:
        raise InvalidParameterError("user distance must be positive")
    if rician_factor < 0:
        raise InvalidParameterError("rician factor must be >= 0")
    m = geometry.num_elements
    h_los = plane_wave_response(geometry.element_positions(), user_direction, wavelength)
    h_nlos = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2)
    mix = (np.sqrt(rician_factor / (1 + rician_factor)) * h_los
           + np.sqrt(1 / (1 + rician_factor)) * h_nlos)
    return wavelength / (4 * np.pi) * user_distance ** (-pathloss_exponent / 2) * mix


def cascaded_row(h_iu: np.ndarray, phi: np.ndarray, h_bi: np.ndarray) -> np.ndarray:
    """End-to-end row h_iu^H diag(phi) H over antennas, (N,)."""
    h_iu = np.asarray(h_iu)
    phi = np.asarray(phi)
    h_bi = np.atleast_2d(np.asarray(h_bi))
    if h_iu.shape[0] != phi.shape[0] or phi.shape[0] != h_bi.shape[0]:
        raise InvalidParameterError("dimension mismatch between channel factors")
    return (h_iu.conj() * phi) @ h_bi


def direct_bs_user(t, user_position, wavelength: float) -> complex:
    """Spherical-wave LoS scalar channel from an antenna to a user."""
    if wavelength <= 0:
        raise InvalidParameterError("wavelength must be positive")
    d = float(np.linalg.norm(np.asarray(t, dtype=float) - np.asarray(user_position, dtype=float)))
    if d <= 0:
        raise DegenerateGeometryError("antenna coincides with the user")
    return complex(wavelength / (4 * np.pi * d) * np.exp(2j * np.pi * d / wavelength))


def dump_channel_csv(matrix: np.ndarray, path) -> None:
    """Write a complex matrix as (row, col, re, im) CSV for debugging."""
    matrix = np.atleast_2d(np.asarray(matrix))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "re", "im"])
        for i in range(matrix.shape[0]):
            for j in range(matrix.shape[1]):
                z = matrix[i, j]
                writer.writerow([i, j, repr(float(z.real)), repr(float(z.imag))])
