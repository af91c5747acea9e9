"""Command-line harness: sweep, verify, profile, convergence."""

from __future__ import annotations

import argparse
import csv
import re
import sys
from pathlib import Path

import numpy as np

from . import analysis, harness, mu_opt, su_opt
from .config import Scenario, load_config, scenario_from_dict
from .rng import substream


def _load(args) -> tuple[Scenario, dict]:
    data = load_config(args.config) if args.config else {}
    scenario = scenario_from_dict(data.get("scenario", {}))
    if args.seed is not None:
        scenario = scenario.replace(master_seed=args.seed)
    return scenario, data


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_sweep(args) -> int:
    scenario, data = _load(args)
    sweep_cfg = dict(data.get("sweep", {}))
    if args.realizations is not None:
        sweep_cfg["realizations"] = args.realizations
    if args.seed is not None:
        sweep_cfg["seed"] = args.seed
    sweep_cfg.setdefault("seed", scenario.master_seed)
    spec = harness.sweep_spec_from_dict(sweep_cfg)
    result = harness.run_sweep(spec, scenario, threads=args.threads)
    out = _outdir(args)
    result.to_csv(out / "records.csv")
    result.summary_csv(out / "summary.csv")
    for (scheme, value), (mean, hw, n) in sorted(harness.summarize(result).items()):
        print(f"{scheme:10s} {spec.parameter}={value:g}: "
              f"{mean:.4f} +/- {hw:.4f} bits/s/Hz (n={n})")
    return 0


def cmd_verify(args) -> int:
    scenario, _ = _load(args)
    out = _outdir(args)
    reports = analysis.verify_all(scenario)
    ok = True
    for i, report in enumerate(reports):
        print(report.to_text())
        slug = re.sub(r"[^A-Za-z0-9]+", "_", report.title).strip("_")
        report.write_csv(out / f"verify_{i}_{slug}.csv")
        ok = ok and report.passed
    return 0 if ok else 1


def cmd_profile(args) -> int:
    """Gain fluctuation along the transmit region, optimized vs random phases."""
    scenario, _ = _load(args)
    out = _outdir(args)
    rng = substream(scenario.master_seed, "profile")
    scen = scenario.replace(num_users=1)
    realization = harness.draw_realization(scen, rng)
    region = scen.region()
    grid, _ = harness._grids(scen)
    idx0 = su_opt.fpa_indices(grid, scen.num_mas, scen.min_spacing)
    h_iu = realization.h_iu[0]

    phi_rand = su_opt.random_reflection(rng, realization.bs_irs.geometry.num_elements)
    sol = su_opt.ao_single_user(h_iu, realization.bs_irs, grid, phi_rand, idx0,
                                scen.transmit_power, scen.noise_power)
    rows = []
    for label, phi in (("optimized", sol.phi), ("random", phi_rand)):
        offsets, gains, spread = analysis.fluctuation_profile(
            h_iu, phi, realization.bs_irs, region, resolution=args.resolution)
        print(f"{label}: max-min spread {spread:.2f} dB")
        rows.extend((label, s, g) for s, g in zip(offsets, gains))
    with open(out / "profile.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["reflection", "offset_m", "gain"])
        for label, s, g in rows:
            writer.writerow([label, repr(float(s)), repr(float(g))])
    return 0


def cmd_convergence(args) -> int:
    """Dump the outer-loop rate trace of the joint optimizer on one draw."""
    scenario, _ = _load(args)
    out = _outdir(args)
    rng = substream(scenario.master_seed, "convergence")
    realization = harness.draw_realization(scenario, rng)
    grid, _ = harness._grids(scenario)
    idx0 = su_opt.fpa_indices(grid, scenario.num_mas, scenario.min_spacing)
    phi0 = su_opt.random_reflection(rng, realization.bs_irs.geometry.num_elements)
    if scenario.num_users == 1:
        sol = su_opt.ao_single_user(realization.h_iu[0], realization.bs_irs, grid,
                                    phi0, idx0, scenario.transmit_power,
                                    scenario.noise_power)
        trace = [float(np.log2(1 + g)) for g in sol.trace]
    else:
        sol = mu_opt.ao_multi_user(realization.h_iu, realization.bs_irs, grid, phi0,
                                   idx0, scenario.transmit_power, scenario.noise_power,
                                   min_spacing=scenario.min_spacing)
        trace = sol.trace
    with open(out / "convergence.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "sum_rate"])
        for i, v in enumerate(trace):
            writer.writerow([i, repr(v)])
    print(f"converged in {sol.iterations} outer iterations, "
          f"final rate {trace[-1]:.4f} bits/s/Hz")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irsma",
        description="Simulation harness for the reflecting-surface-assisted "
                    "movable-antenna downlink.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("sweep", cmd_sweep), ("verify", cmd_verify),
                     ("profile", cmd_profile), ("convergence", cmd_convergence)):
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None, help="YAML config path")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--realizations", type=int, default=None)
        p.add_argument("--out", type=str, default="out")
        p.add_argument("--threads", type=int, default=1)
        if name == "profile":
            p.add_argument("--resolution", type=int, default=200)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
