"""Command-line entry point: sweeps, single-trial debugging, scene dumps."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib
from pathlib import Path

import numpy as np

from .experiment import (RAW_COLUMNS, ExperimentConfig, run_sweep, run_trial,
                         write_aggregate_csv, write_raw_csv)
from .refine import RefineConfig
from .scene import SceneConfig, sample_scene

OUT_DIR_ENV = "MA_CHANEST_OUT"

SCENE_KEYS = {"num_paths", "tau_max", "gain_variance", "wavelength",
              "sample_period", "num_subcarriers", "cp_length"}
REFINE_KEYS = {"step_a0", "step_d0", "step_min", "max_outer", "armijo_xi",
               "shrink_kappa", "fd_step"}


def load_config(path: str | None) -> ExperimentConfig:
    """Build a config from a JSON or TOML file; missing keys keep defaults."""
    cfg = ExperimentConfig()
    if path is None:
        return cfg
    text = Path(path).read_text()
    if path.endswith(".toml"):
        data = tomllib.loads(text)
    else:
        data = json.loads(text)
    scene_over = {k: v for k, v in data.pop("scene", {}).items() if k in SCENE_KEYS}
    refine_over = {k: v for k, v in data.pop("refine", {}).items() if k in REFINE_KEYS}
    cfg = replace(cfg, scene=replace(cfg.scene, **scene_over),
                  refine_cfg=replace(cfg.refine_cfg, **refine_over))
    known = {f for f in vars(cfg)}
    unknown = set(data) - known
    if unknown:
        raise SystemExit(f"unknown config keys: {sorted(unknown)}")
    if "values" in data:
        data["values"] = tuple(data["values"])
    return replace(cfg, **data)


def _parse_values(axis: str, raw: str) -> tuple:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if axis == "layout":
        return tuple(items)
    if axis == "mc":
        return tuple(int(s) for s in items)
    return tuple(float(s) for s in items)


def _resolve_out(arg: str | None) -> Path:
    out = os.environ.get(OUT_DIR_ENV) or arg or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.axis:
        cfg = replace(cfg, axis=args.axis)
    if args.values:
        cfg = replace(cfg, values=_parse_values(cfg.axis, args.values))
    if args.trials:
        cfg = replace(cfg, trials=args.trials)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.threads:
        cfg = replace(cfg, threads=args.threads)
    out = _resolve_out(args.out)
    records = run_sweep(cfg)
    raw_path = out / f"{cfg.axis}_raw.csv"
    agg_path = out / f"{cfg.axis}_aggregate.csv"
    write_raw_csv(records, raw_path)
    write_aggregate_csv(records, agg_path)
    print(f"wrote {raw_path} and {agg_path} ({len(records)} records)")
    return 0


def cmd_trial(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    value = cfg.values[0] if cfg.axis != "snr" else cfg.snr_db
    if args.value is not None:
        value = _parse_values(cfg.axis, args.value)[0]
    record = run_trial(cfg, value, 0, args.trial)
    for col in RAW_COLUMNS:
        print(f"{col}: {record[col]}")
    if "_error" in record:
        print(f"error: {record['_error']}")
    if args.trace and "_trace" in record:
        out = _resolve_out(args.out)
        trace_path = out / "refine_trace.csv"
        with open(trace_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "objective", "step_a", "step_d", "accepted"])
            for row in record["_trace"]:
                w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3]),
                            int(row[4])])
        print(f"wrote {trace_path}")
    return 0


def cmd_scene(args) -> int:
    cfg = load_config(args.config)
    rng = np.random.default_rng(
        np.random.SeedSequence((args.seed if args.seed is not None
                                else cfg.master_seed, 0, 0)))
    scene = sample_scene(cfg.scene, rng)
    doc = {
        "wavelength": scene.wavelength,
        "sample_period": scene.sample_period,
        "num_subcarriers": scene.num_subcarriers,
        "cp_length": scene.cp_length,
        "tau_max": scene.tau_max,
        "delays": scene.prt.delays.tolist(),
        "tx_virtual_angles": scene.tx_virtual_angles.tolist(),
        "rx_virtual_angles": scene.rx_virtual_angles.tolist(),
        "gains": [[float(z.real), float(z.imag)]
                  for z in scene.prt.gains.ravel()],
        "gains_shape": list(scene.prt.gains.shape),
    }
    text = json.dumps(doc, indent=2)
    if args.out:
        out = _resolve_out(args.out)
        path = out / "scene.json"
        path.write_text(text)
        print(f"wrote {path}")
    else:
        print(text)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ma-chanest",
        description="Movable-antenna wideband channel estimation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a Monte-Carlo sweep, write CSVs")
    p_sweep.add_argument("--config", help="JSON or TOML config file")
    p_sweep.add_argument("--axis", choices=["snr", "mc", "region", "layout"])
    p_sweep.add_argument("--values", help="comma-separated sweep values")
    p_sweep.add_argument("--trials", type=int)
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--out", help=f"output dir (or ${OUT_DIR_ENV})")
    p_sweep.add_argument("--threads", type=int)
    p_sweep.set_defaults(func=cmd_sweep)

    p_trial = sub.add_parser("trial", help="run one trial and print the record")
    p_trial.add_argument("--config")
    p_trial.add_argument("--seed", type=int)
    p_trial.add_argument("--value", help="sweep-axis value for this trial")
    p_trial.add_argument("--trial", type=int, default=0)
    p_trial.add_argument("--trace", action="store_true",
                         help="also write the refinement trace CSV")
    p_trial.add_argument("--out")
    p_trial.set_defaults(func=cmd_trial)

    p_scene = sub.add_parser("scene", help="sample a scene and dump it as JSON")
    p_scene.add_argument("--config")
    p_scene.add_argument("--seed", type=int)
    p_scene.add_argument("--out")
    p_scene.set_defaults(func=cmd_scene)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
