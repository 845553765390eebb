"""Monte-Carlo sweep orchestration and CSV persistence.

A sweep varies one axis (snr, mc, region, layout) over a list of values and
runs a number of independent trials per value.  Every trial derives its own
seed from (master seed, sweep index, trial index), so results do not depend
on execution order or worker count.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import Region
from .metrics import GridSpec, achievable_rate, fpa_rate, nmse
from .pilots import PilotGrid, build_plan, synthesize_pilots
from .prt_ls import somp_pipeline
from .refine import RefineConfig, RefineProblem, refine
from .scene import SceneConfig, sample_scene, snap_scene_to_grids
from .somp import AngleGrid, DelayGrid

RAW_COLUMNS = ["axis_value", "trial", "nmse_somp", "nmse_refined", "rate_somp",
               "rate_refined", "rate_perfect", "rate_fpa", "lt_hat", "lr_hat",
               "ld_hat", "warn_flags", "wall_ms"]

AGG_METRICS = ["nmse_somp", "nmse_refined", "rate_somp", "rate_refined",
               "rate_perfect", "rate_fpa"]

WARN_TRIAL_FAILED = "trial_failed"


@dataclass
class ExperimentConfig:
    """Full experiment setup; the defaults reproduce the reference scenario."""

    scene: SceneConfig = field(default_factory=SceneConfig)
    region_size: float = 3.0
    num_tx_meas: int = 64
    num_rx_meas: int = 64
    num_joint_meas: int = 200
    layout: str = "upa"
    pilot_spacing: int = 16
    angle_resolution: int = 100
    delay_resolution: int = 100
    eval_points_per_side: int = 16
    somp_eps0: float = 0.02
    somp_imax: int = 10
    refine_cfg: RefineConfig = field(default_factory=lambda: RefineConfig(max_outer=10))
    snr_db: float = 20.0
    tx_power: float = 1.0
    axis: str = "snr"
    values: tuple = (5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    trials: int = 20
    master_seed: int = 0
    threads: int = 1
    on_grid: bool = False
    noiseless: bool = False
    run_refine: bool = True
    compute_rates: bool = True

    def noise_variance(self) -> float:
        if self.noiseless:
            return 0.0
        return self.tx_power * 10.0 ** (-self.snr_db / 10.0)


def apply_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    """Return a copy of cfg with one sweep-axis value applied."""
    if axis == "snr":
        return replace(cfg, snr_db=float(value))
    if axis == "mc":
        return replace(cfg, num_joint_meas=int(value))
    if axis == "region":
        s = float(value)
        side = round(s / 0.4 + 1.0)
        return replace(cfg, region_size=s, num_tx_meas=side * side,
                       num_rx_meas=side * side)
    if axis == "layout":
        return replace(cfg, layout=str(value))
    raise ValueError(f"unknown sweep axis {axis!r}")


def run_trial(cfg: ExperimentConfig, sweep_value, sweep_index: int,
              trial_index: int) -> dict:
    """Run one seeded trial and return a raw record dict.

    Estimation failures (e.g. an empty recovered support) are captured into
    warn_flags with NaN metrics so a sweep always completes.
    """
    t0 = time.perf_counter()
    trial_cfg = apply_axis(cfg, cfg.axis, sweep_value)
    rng = np.random.default_rng(
        np.random.SeedSequence((cfg.master_seed, sweep_index, trial_index)))

    record = {c: float("nan") for c in RAW_COLUMNS}
    record["axis_value"] = sweep_value
    record["trial"] = trial_index
    record["lt_hat"] = record["lr_hat"] = record["ld_hat"] = 0
    flags: list[str] = []

    angle_grid = AngleGrid(trial_cfg.angle_resolution)
    delay_grid = DelayGrid(trial_cfg.delay_resolution, trial_cfg.scene.tau_max)
    eval_grid = GridSpec(trial_cfg.eval_points_per_side)
    region = Region(trial_cfg.region_size)
    pilot_grid = PilotGrid(trial_cfg.scene.num_subcarriers, trial_cfg.pilot_spacing)
    sigma2 = trial_cfg.noise_variance()
    rate_sigma2 = sigma2 if sigma2 > 0 else trial_cfg.tx_power * 1e-2

    try:
        scene = sample_scene(trial_cfg.scene, rng)
        if trial_cfg.on_grid:
            scene = snap_scene_to_grids(scene, angle_grid.atoms, delay_grid.atoms)
        plan = build_plan(region, region, trial_cfg.num_tx_meas, trial_cfg.num_rx_meas,
                          trial_cfg.num_joint_meas, trial_cfg.layout, rng)
        obs = synthesize_pilots(scene, plan, pilot_grid, trial_cfg.tx_power, sigma2, rng)

        est = somp_pipeline(obs, plan, angle_grid, delay_grid,
                            trial_cfg.scene.sample_period, trial_cfg.somp_eps0,
                            trial_cfg.somp_imax)
        flags.extend(est.warn_flags)
        record["lt_hat"] = est.num_tx_paths
        record["lr_hat"] = est.num_rx_paths
        record["ld_hat"] = est.num_delays
        record["nmse_somp"] = nmse(scene, est, eval_grid, region, region)

        refined = None
        if trial_cfg.run_refine:
            prob = RefineProblem(
                v_d_T=obs.stacked().T / np.sqrt(trial_cfg.tx_power),
                plan=plan, pilot_indices=pilot_grid.pilot_indices,
                num_subcarriers=trial_cfg.scene.num_subcarriers,
                sample_period=trial_cfg.scene.sample_period,
                tau_max=trial_cfg.scene.tau_max,
                num_tx_paths=est.num_tx_paths, num_rx_paths=est.num_rx_paths)
            refined, trace = refine(est, prob, trial_cfg.refine_cfg)
            record["nmse_refined"] = nmse(scene, refined, eval_grid, region, region)
            record["_trace"] = trace
            record["_refined"] = refined
            for fl in refined.warn_flags:
                if fl not in flags:
                    flags.append(fl)

        if trial_cfg.compute_rates:
            record["rate_somp"], _, _ = achievable_rate(
                scene, est, eval_grid, region, region, trial_cfg.tx_power, rate_sigma2)
            if refined is not None:
                record["rate_refined"], _, _ = achievable_rate(
                    scene, refined, eval_grid, region, region,
                    trial_cfg.tx_power, rate_sigma2)
            record["rate_perfect"], _, _ = achievable_rate(
                scene, scene, eval_grid, region, region, trial_cfg.tx_power, rate_sigma2)
            record["rate_fpa"] = fpa_rate(scene, eval_grid, region, region,
                                          trial_cfg.tx_power, rate_sigma2)
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        flags.append(WARN_TRIAL_FAILED)
        record["_error"] = f"{type(exc).__name__}: {exc}"

    record["warn_flags"] = ";".join(flags)
    record["wall_ms"] = (time.perf_counter() - t0) * 1e3
    return record


def run_sweep(cfg: ExperimentConfig):
    """Run all (value, trial) pairs; returns the list of raw record dicts.

    Trials run on a bounded thread pool; the result order is fixed by
    (sweep index, trial index) regardless of scheduling.
    """
    jobs = [(vi, value, ti) for vi, value in enumerate(cfg.values)
            for ti in range(cfg.trials)]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            records = list(pool.map(
                lambda j: run_trial(cfg, j[1], j[0], j[2]), jobs))
    else:
        records = [run_trial(cfg, value, vi, ti) for vi, value, ti in jobs]
    return records


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_raw_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RAW_COLUMNS)
        for rec in records:
            w.writerow([_fmt(rec[c]) for c in RAW_COLUMNS])


def write_aggregate_csv(records, path) -> None:
    """Per-axis-value medians and means of the metric columns."""
    values = []
    for rec in records:
        if rec["axis_value"] not in values:
            values.append(rec["axis_value"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = ["axis_value", "n_trials"]
        for m in AGG_METRICS:
            header += [f"median_{m}", f"mean_{m}"]
        w.writerow(header)
        for value in values:
            group = [r for r in records if r["axis_value"] == value]
            row = [_fmt(value), len(group)]
            for m in AGG_METRICS:
                col = np.array([float(r[m]) for r in group])
                if np.all(np.isnan(col)):
                    row += ["nan", "nan"]
                else:
                    row += [repr(float(np.nanmedian(col))),
                            repr(float(np.nanmean(col)))]
            w.writerow(row)
