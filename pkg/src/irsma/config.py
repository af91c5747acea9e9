"""Experiment geometry and scenario configuration.

The reflecting surface lies in the x=0 plane centered at the origin; element
(iy, iz) sits at [0, y_off[iy], z_off[iz]] with offsets centered on the origin.
Flattened element/channel indexing is z-major everywhere in the package:
``m = iz * num_y + iy``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import InvalidParameterError

SPEED_OF_LIGHT = 299_792_458.0


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise InvalidParameterError("zero direction vector")
    return v / n


@dataclass(frozen=True)
class IrsGeometry:
    """Rectangular lattice of reflecting elements in the x=0 plane."""

    num_y: int
    num_z: int
    spacing: float  # m

    def __post_init__(self):
        if self.num_y < 1 or self.num_z < 1:
            raise InvalidParameterError("element counts must be positive")
        if self.spacing < 0:
            raise InvalidParameterError("element spacing must be non-negative")

    @property
    def num_elements(self) -> int:
        return self.num_y * self.num_z

    @property
    def aperture(self) -> float:
        return float(np.hypot(self.num_y, self.num_z) * self.spacing)

    def element_positions(self) -> np.ndarray:
        """(M, 3) element coordinates, z-major flattening, centered at origin."""
        y_off = (np.arange(self.num_y) - (self.num_y - 1) / 2.0) * self.spacing
        z_off = (np.arange(self.num_z) - (self.num_z - 1) / 2.0) * self.spacing
        yy = np.tile(y_off, self.num_z)
        zz = np.repeat(z_off, self.num_y)
        return np.column_stack([np.zeros_like(yy), yy, zz])


@dataclass(frozen=True)
class TransmitRegion:
    """1D segment of length `length` centered at `center` along `axis`."""

    center: tuple[float, float, float]
    axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    length: float = 0.6  # m

    def __post_init__(self):
        if self.length < 0:
            raise InvalidParameterError("region length must be non-negative")
        object.__setattr__(self, "axis", tuple(_unit(self.axis)))
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    @property
    def axis_array(self) -> np.ndarray:
        return np.asarray(self.axis, dtype=float)

    def point(self, offset) -> np.ndarray:
        """Map axial offset(s) in [-length/2, length/2] to 3D coordinates."""
        s = np.asarray(offset, dtype=float)
        return self.center_array + np.multiply.outer(s, self.axis_array)

    def offset_of(self, t) -> float:
        return float(np.dot(np.asarray(t, dtype=float) - self.center_array, self.axis_array))

    def contains(self, t, tol: float = 1e-9) -> bool:
        t = np.asarray(t, dtype=float)
        s = self.offset_of(t)
        if abs(s) > self.length / 2 + tol:
            return False
        perp = t - self.center_array - s * self.axis_array
        return bool(np.linalg.norm(perp) <= tol)


def validate_positions(positions: np.ndarray, region: TransmitRegion, min_spacing: float,
                       tol: float = 1e-9) -> None:
    """Check that an antenna position set lies in the region with pairwise spacing."""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    for t in positions:
        if not region.contains(t, tol=tol):
            raise InvalidParameterError(f"position {t} outside transmit region")
    n = len(positions)
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(positions[i] - positions[j]) < min_spacing - tol:
                raise InvalidParameterError(
                    f"positions {i} and {j} violate minimum spacing {min_spacing}")


@dataclass(frozen=True)
class Scenario:
    """Full experiment parameterization (defaults follow the reference setup)."""

    carrier_frequency: float = 5e9  # Hz
    num_mas: int = 4
    num_users: int = 3
    transmit_power: float = 10 ** (46 / 10) * 1e-3  # 46 dBm in watts
    noise_power: float = 10 ** (-80 / 10) * 1e-3  # -80 dBm in watts
    min_spacing: float | None = None  # default lambda/2
    sample_spacing: float | None = None  # default lambda/10
    rician_factor: float = 10 ** 0.3  # 3 dB, linear
    pathloss_exponent: float = 2.8
    num_paths: int = 0
    master_seed: int = 0
    num_realizations: int = 50

    irs_num_y: int = 15
    irs_num_z: int = 15
    irs_spacing: float | None = None  # default lambda/2
    region_length: float = 0.6  # m
    region_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    bs_distance: float = 8.0  # m, IRS center to region center
    bs_direction: tuple[float, float, float] = (
        0.7071067811865476, 0.7071067811865476, 0.0)

    user_distance_range: tuple[float, float] = (30.0, 50.0)
    user_azimuth_range: tuple[float, float] = (-np.pi / 3, np.pi / 3)
    user_elevation_range: tuple[float, float] = (-np.pi / 6, np.pi / 6)
    scatterer_box_size: tuple[float, float, float] = (2.0, 2.0, 2.0)

    def __post_init__(self):
        if self.carrier_frequency <= 0:
            raise InvalidParameterError("carrier frequency must be positive")
        if self.num_mas < 1 or self.num_users < 1:
            raise InvalidParameterError("antenna and user counts must be >= 1")
        if self.transmit_power <= 0 or self.noise_power <= 0:
            raise InvalidParameterError("powers must be positive")
        if self.rician_factor < 0 or self.num_paths < 0:
            raise InvalidParameterError("rician factor and path count must be >= 0")
        lam = SPEED_OF_LIGHT / self.carrier_frequency
        if self.min_spacing is None:
            object.__setattr__(self, "min_spacing", lam / 2)
        if self.sample_spacing is None:
            object.__setattr__(self, "sample_spacing", lam / 10)
        if self.irs_spacing is None:
            object.__setattr__(self, "irs_spacing", lam / 2)
        if self.min_spacing <= 0 or self.sample_spacing <= 0:
            raise InvalidParameterError("spacings must be positive")
        object.__setattr__(self, "bs_direction", tuple(_unit(self.bs_direction)))
        object.__setattr__(self, "region_axis", tuple(_unit(self.region_axis)))

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    @property
    def transmit_snr(self) -> float:
        return self.transmit_power / self.noise_power

    def geometry(self) -> IrsGeometry:
        return IrsGeometry(self.irs_num_y, self.irs_num_z, self.irs_spacing)

    def region(self) -> TransmitRegion:
        center = self.bs_distance * np.asarray(self.bs_direction)
        return TransmitRegion(tuple(center), self.region_axis, self.region_length)

    def replace(self, **kwargs) -> "Scenario":
        return dataclasses.replace(self, **kwargs)


def scenario_from_dict(d: dict) -> Scenario:
    known = {f.name for f in dataclasses.fields(Scenario)}
    unknown = set(d) - known
    if unknown:
        raise InvalidParameterError(f"unknown scenario keys: {sorted(unknown)}")
    kwargs = dict(d)
    for key in ("region_axis", "bs_direction", "user_distance_range",
                "user_azimuth_range", "user_elevation_range", "scatterer_box_size"):
        if key in kwargs and kwargs[key] is not None:
            kwargs[key] = tuple(kwargs[key])
    return Scenario(**kwargs)


def load_config(path) -> dict:
    """Load a YAML key-value tree config file."""
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return data or {}


def load_scenario(path) -> Scenario:
    data = load_config(path)
    return scenario_from_dict(data.get("scenario", {}))
