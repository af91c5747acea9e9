"""Benchmark schemes, Monte-Carlo sweeps and CSV persistence.

Within one (parameter value, realization) cell every scheme consumes the same
channel realization; randomized initial points come from named substreams so
serial and parallel execution produce identical results.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel, mu_opt, su_opt
from .config import Scenario
from .errors import InvalidParameterError
from .rng import substream

PROPOSED = "PROPOSED"
FPA = "FPA"
AS = "AS"
MA_RPS = "MA_RPS"
FPA_RPS = "FPA_RPS"
ALL_SCHEMES = (PROPOSED, FPA, AS, MA_RPS, FPA_RPS)

SWEEPABLE = ("bs_irs_distance", "region_length", "num_paths")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple
    schemes: tuple = ALL_SCHEMES
    realizations: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.parameter not in SWEEPABLE:
            raise InvalidParameterError(f"unknown sweep parameter {self.parameter!r}")
        if not self.values or not self.schemes:
            raise InvalidParameterError("sweep needs non-empty values and schemes")
        unknown = set(self.schemes) - set(ALL_SCHEMES)
        if unknown:
            raise InvalidParameterError(f"unknown schemes: {sorted(unknown)}")
        if self.realizations < 1:
            raise InvalidParameterError("realizations must be >= 1")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "schemes", tuple(self.schemes))


def sweep_spec_from_dict(d: dict) -> SweepSpec:
    known = {f.name for f in dataclasses.fields(SweepSpec)}
    unknown = set(d) - known
    if unknown:
        raise InvalidParameterError(f"unknown sweep keys: {sorted(unknown)}")
    return SweepSpec(**d)


def apply_parameter(scenario: Scenario, parameter: str, value) -> Scenario:
    if parameter == "bs_irs_distance":
        return scenario.replace(bs_distance=float(value))
    if parameter == "region_length":
        return scenario.replace(region_length=float(value))
    if parameter == "num_paths":
        return scenario.replace(num_paths=int(value))
    raise InvalidParameterError(f"unknown sweep parameter {parameter!r}")


@dataclass(frozen=True)
class Realization:
    """One channel draw shared by every scheme of a sweep cell."""

    h_iu: np.ndarray  # (K, M)
    bs_irs: channel.BsIrsModel

    @property
    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self.h_iu).tobytes())
        cl = self.bs_irs.clusters
        if cl is not None:
            digest.update(repr(cl).encode())
        return digest.hexdigest()


def draw_realization(scenario: Scenario, rng: np.random.Generator) -> Realization:
    geometry = scenario.geometry()
    lam = scenario.wavelength
    h_iu = np.vstack([
        channel.rician_iu_channel(
            rng, geometry, rng.uniform(*scenario.user_distance_range),
            _direction(rng, scenario), scenario.rician_factor,
            scenario.pathloss_exponent, lam)
        for _ in range(scenario.num_users)])
    clusters = None
    if scenario.num_paths > 0:
        region_center = scenario.region().center_array
        clusters = channel.sample_clusters(
            rng, scenario.num_paths, region_center / 2, scenario.scatterer_box_size,
            lam, region_center)
    return Realization(h_iu=h_iu, bs_irs=channel.BsIrsModel(geometry, lam, clusters))


def _direction(rng, scenario: Scenario) -> np.ndarray:
    az = rng.uniform(*scenario.user_azimuth_range)
    el = rng.uniform(*scenario.user_elevation_range)
    return np.array([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)])


@dataclass
class SchemeRun:
    scheme: str
    rate: float  # bits/s/Hz (single user: log2(1 + SNR))
    iterations: int
    solution: object = None
    wall_time: float = 0.0


def _grids(scenario: Scenario):
    region = scenario.region()
    fine = su_opt.SamplingGrid.from_region(region, scenario.sample_spacing,
                                           scenario.min_spacing)
    coarse = su_opt.SamplingGrid.from_region(region, scenario.min_spacing,
                                             scenario.min_spacing)
    return fine, coarse


def _nearest_indices(grid, positions: np.ndarray) -> list[int]:
    d = np.linalg.norm(positions[:, None, :] - grid.points[None, :, :], axis=2)
    return [int(i) for i in np.argmin(d, axis=1)]


def run_scheme(scheme: str, scenario: Scenario, realization: Realization, *,
               rng: np.random.Generator, rps_phi: np.ndarray | None = None,
               warm: object = None) -> SchemeRun:
    """Run one benchmark scheme on a fixed channel realization.

    `warm` is an optional solution of another scheme on the same cell used as
    the starting point (shared initialization makes the nesting orderings
    PROPOSED >= FPA and MA_RPS >= FPA_RPS hold per instance).
    """
    if scheme not in ALL_SCHEMES:
        raise InvalidParameterError(f"unknown scheme {scheme!r}")
    start = time.perf_counter()
    fine, coarse = _grids(scenario)
    grid = coarse if scheme == AS else fine
    num_mas = scenario.num_mas
    m = realization.bs_irs.geometry.num_elements

    if scheme in (MA_RPS, FPA_RPS):
        if rps_phi is None:
            raise InvalidParameterError("random-phase schemes need rps_phi")
        phi0 = np.asarray(rps_phi)
        optimize_phi = False
    else:
        phi0 = (np.asarray(warm.phi) if warm is not None
                else su_opt.random_reflection(rng, m))
        optimize_phi = True
    if warm is not None:
        # warm starts may come from a different (coarser, nested) grid:
        # carry positions over, not indices
        idx0 = _nearest_indices(grid, np.asarray(warm.positions))
    else:
        idx0 = su_opt.fpa_indices(grid, num_mas, scenario.min_spacing)
    optimize_positions = scheme in (PROPOSED, AS, MA_RPS)

    if scenario.num_users == 1:
        sol = su_opt.ao_single_user(
            realization.h_iu[0], realization.bs_irs, grid, phi0, idx0,
            scenario.transmit_power, scenario.noise_power,
            optimize_phi=optimize_phi, optimize_positions=optimize_positions)
        rate = float(np.log2(1 + sol.snr))
        iterations = sol.iterations
    else:
        w0 = getattr(warm, "w", None) if warm is not None else None
        sol = mu_opt.ao_multi_user(
            realization.h_iu, realization.bs_irs, grid, phi0, idx0,
            scenario.transmit_power, scenario.noise_power,
            min_spacing=scenario.min_spacing, w_init=w0,
            optimize_phi=optimize_phi, optimize_positions=optimize_positions)
        rate = sol.sum_rate
        iterations = sol.iterations
    return SchemeRun(scheme=scheme, rate=rate, iterations=iterations, solution=sol,
                     wall_time=time.perf_counter() - start)


@dataclass(frozen=True)
class Record:
    scheme: str
    param: float
    realization: int
    rate: float
    iterations: int
    wall_time: float


@dataclass
class SweepResult:
    spec: SweepSpec
    records: list[Record] = field(default_factory=list)

    def to_csv(self, path) -> None:
        """Deterministic per-record CSV (wall time is intentionally omitted)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scheme", "param", "realization", "metric", "value"])
            for r in self.records:
                writer.writerow([r.scheme, repr(float(r.param)), r.realization,
                                 "sum_rate", repr(r.rate)])
                writer.writerow([r.scheme, repr(float(r.param)), r.realization,
                                 "iterations", r.iterations])

    def summary_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scheme", "param", "mean_rate", "halfwidth95", "n"])
            for (scheme, value), (mean, hw, n) in sorted(summarize(self).items()):
                writer.writerow([scheme, repr(float(value)), repr(mean), repr(hw), n])


# run order makes warm starts available to the schemes that consume them
_CELL_ORDER = (FPA_RPS, MA_RPS, FPA, AS, PROPOSED)


def run_cell(scenario: Scenario, spec: SweepSpec, value, value_index: int,
             realization_index: int) -> list[Record]:
    scen = apply_parameter(scenario, spec.parameter, value)
    chan_rng = substream(spec.seed, "chan", spec.parameter, value_index, realization_index)
    realization = draw_realization(scen, chan_rng)
    rps_phi = su_opt.random_reflection(
        substream(spec.seed, "rps", value_index, realization_index),
        realization.bs_irs.geometry.num_elements)
    runs: dict[str, SchemeRun] = {}
    records = []
    for scheme in _CELL_ORDER:
        if scheme not in spec.schemes:
            continue
        warm = None
        if scheme == MA_RPS and FPA_RPS in runs:
            warm = runs[FPA_RPS].solution
        elif scheme == PROPOSED:
            candidates = [runs[s] for s in (FPA, AS) if s in runs]
            if candidates:
                warm = max(candidates, key=lambda r: r.rate).solution
        init_rng = substream(spec.seed, "init", value_index, realization_index, scheme)
        run = run_scheme(scheme, scen, realization, rng=init_rng,
                         rps_phi=rps_phi, warm=warm)
        runs[scheme] = run
        records.append(Record(scheme=scheme, param=float(value),
                              realization=realization_index, rate=run.rate,
                              iterations=run.iterations, wall_time=run.wall_time))
    return records


def run_sweep(spec: SweepSpec, scenario: Scenario, threads: int = 1) -> SweepResult:
    """Iterate (value, realization) cells; deterministic under the sweep seed
    regardless of execution order or thread count. Failed cells are skipped
    with a console note instead of aborting the sweep."""
    cells = [(value, vi, r) for vi, value in enumerate(spec.values)
             for r in range(spec.realizations)]

    def work(cell):
        value, vi, r = cell
        try:
            return (vi, r), run_cell(scenario, spec, value, vi, r)
        except Exception as exc:  # noqa: BLE001 - cell isolation is intentional
            print(f"cell value={value} realization={r} failed: {exc!r}")
            return (vi, r), []

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(work, cells))
    else:
        outputs = [work(c) for c in cells]
    outputs.sort(key=lambda item: item[0])
    scheme_rank = {s: i for i, s in enumerate(_CELL_ORDER)}
    records = []
    for _, recs in outputs:
        records.extend(sorted(recs, key=lambda r: scheme_rank[r.scheme]))
    return SweepResult(spec=spec, records=records)


def summarize(result: SweepResult) -> dict:
    """Per-(scheme, value) mean rate and normal-approximation 95% half-width."""
    groups: dict[tuple, list[float]] = {}
    for r in result.records:
        groups.setdefault((r.scheme, r.param), []).append(r.rate)
    out = {}
    for key, vals in groups.items():
        arr = np.asarray(vals)
        n = len(arr)
        hw = 0.0 if n < 2 else float(1.96 * np.std(arr, ddof=1) / np.sqrt(n))
        out[key] = (float(np.mean(arr)), hw, n)
    return out
