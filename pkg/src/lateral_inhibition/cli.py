"""Command-line front end: ``lateral-inhibition {analyze,simulate,sweep,validate} CONFIG``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .graph import NotEquitable, check_equitable
from .network import Network
from .patterning import classify_patterning, crossing_pattern_holds, find_fixed_points, reduced_system
from .simulate import (HOUR, NotConverged, StiffnessError, estimate_time_constant, integrate,
                       seeded_initial_state)
from .sweep import is_contiguous, run_sweep, PATTERNED
from .validation import run_validation

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NOT_EQUITABLE = 2
EXIT_NOT_CONVERGED = 3
EXIT_VALIDATION = 4

log = logging.getLogger("lateral_inhibition")


def write_json(path: Path, payload: dict) -> None:
    doc = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _finite(x):
    return float(x) if x is not None and np.isfinite(x) else None


def cmd_analyze(cfg: ExperimentConfig, out: Path) -> int:
    try:
        pair = check_equitable(cfg.graph)
    except NotEquitable as exc:
        print(f"not equitable: {exc}", file=sys.stderr)
        write_json(out / "analyze.json", {"error": "not_equitable", "vertex": exc.vertex,
                                          "other": exc.other, "target_class": exc.target_class,
                                          "discrepancy": exc.discrepancy})
        return EXIT_NOT_EQUITABLE
    report = find_fixed_points(reduced_system(pair, cfg.params, cfg.params_B))
    label, marginal = classify_patterning(report)
    payload = report.to_dict()
    payload.update({"d_AB": pair.d_AB, "d_BA": pair.d_BA, "contrasting_outer_points": crossing_pattern_holds(report)})
    write_json(out / "analyze.json", payload)
    print(f"d_AB = {pair.d_AB:.6g} 1/s, d_BA = {pair.d_BA:.6g} 1/s")
    for pt in report.points:
        print(f"  z_A = {pt.z_A:.6g} M  z_B = {pt.z_B:.6g} M  slope = {pt.slope:.6g}  ({pt.label})")
    print(f"classification: {label}{' (marginal)' if marginal else ''}")
    return EXIT_OK


OBSERVABLE_COLUMN = {"R_A": "{a}:R_A", "R_B": "{b}:R_B", "p_I_A": "{a}:p_I", "p_I_B": "{b}:p_I"}


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> int:
    net = Network.from_graph(cfg.graph, cfg.params, cfg.params_B)
    s = cfg.simulate
    y0 = seeded_initial_state(net, cfg.seed, s.seed_amplitude)
    try:
        traj = integrate(y0, net, s.t_end, s.controls)
    except StiffnessError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    traj.to_csv(out / "trajectory.csv")
    st = traj.state()
    a, b = net.order[0], net.order[net.n_A]
    taus = {}
    for name in s.observables:
        col = OBSERVABLE_COLUMN[name].format(a=a, b=b)
        try:
            taus[name] = estimate_time_constant(traj, col) if traj.steady else None
        except ValueError:
            taus[name] = None
    payload = {
        "steady": traj.steady,
        "t_end_h": s.t_end / HOUR,
        "final": {"R_A": st.R_A.tolist(), "R_B": st.R_B.tolist(),
                  "p_I_A": st.p_I_A.tolist(), "p_I_B": st.p_I_B.tolist()},
        "time_constant_h": {k: _finite(v) for k, v in taus.items()},
        "projection_total_M": traj.projection_total,
        "winner": "A" if st.p_I_A.mean() > st.p_I_B.mean() else "B",
        "contrast_M": float(abs(st.p_I_A.mean() - st.p_I_B.mean())),
    }
    write_json(out / "simulate.json", payload)
    print(f"steady: {traj.steady}; winner: {payload['winner']}; "
          + ", ".join(f"tau[{k}] = {v:.3g} h" for k, v in taus.items() if v is not None))
    if not traj.steady:
        print("trajectory did not reach steady state; increase t_end_h", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, out: Path, threads: int | None) -> int:
    sw = cfg.sweep
    grid = run_sweep(cfg.params, sw.p_axis, sw.l_axis, sw.width_factor, threads)
    grid.to_matrix_csv(out / "sweep_matrix.csv")
    write_json(out / "sweep.json", grid.to_dict())
    n_pat = int(np.sum(grid.codes == PATTERNED))
    failed = int(np.sum(grid.codes < 0))
    print(f"{grid.codes.size} cells: {n_pat} patterned, {failed} failed")
    bands = [is_contiguous(grid.codes[i] == PATTERNED) for i in range(grid.l12.size)]
    if not all(bands):
        print(f"patterned set is not contiguous along p_Ri in {bands.count(False)} rows")
    return EXIT_OK


def cmd_validate(cfg: ExperimentConfig, out: Path) -> int:
    v = cfg.validate
    checks = run_validation(cfg.graph, cfg.params, cfg.params_B, cfg.seed, v.random_states,
                            v.compare_pde, v.pde_cells, v.t_end)
    failed = [c.name for c in checks if c.status == "fail"]
    write_json(out / "validate.json", {"checks": [c.to_dict() for c in checks], "passed": not failed,
                                       "failed": failed})
    for c in checks:
        print(f"{c.name}: {c.status}")
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lateral-inhibition", description=__doc__)
    ap.add_argument("command", choices=["analyze", "simulate", "sweep", "validate"])
    ap.add_argument("config", help="JSON experiment config")
    ap.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    ap.add_argument("--threads", type=int, default=None, help="worker threads for sweep")
    ap.add_argument("--out-dir", default=".", help="directory for CSV/JSON outputs")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "analyze":
            return cmd_analyze(cfg, out)
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "sweep":
            return cmd_sweep(cfg, out, args.threads)
        return cmd_validate(cfg, out)
    except NotEquitable as exc:
        print(f"not equitable: {exc}", file=sys.stderr)
        return EXIT_NOT_EQUITABLE
    except NotConverged as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
