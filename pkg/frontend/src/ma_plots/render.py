"""Render sweep-result CSV files into figures.

Two input schemas are understood: the aggregate sweep CSV (axis_value plus
median/mean metric columns) and the refinement trace CSV (iteration,
objective, step sizes).  Rendering never modifies its inputs; it reads the
CSV rows and writes a single image file.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

AGG_COLUMNS = ["axis_value", "n_trials"]
for _m in ["nmse_somp", "nmse_refined", "rate_somp", "rate_refined",
           "rate_perfect", "rate_fpa"]:
    AGG_COLUMNS += [f"median_{_m}", f"mean_{_m}"]

TRACE_COLUMNS = ["iteration", "objective", "step_a", "step_d", "accepted"]

KINDS = ("convergence", "nmse_snr", "rate_snr", "nmse_mc", "rate_mc",
         "nmse_region", "rate_region")

AXIS_LABELS = {
    "snr": "SNR (dB)",
    "mc": "number of joint measurements",
    "region": "normalized region size",
}


class SchemaError(ValueError):
    """CSV header does not match the expected schema."""


@dataclass
class PlotSpec:
    kind: str
    inputs: list = field(default_factory=list)
    output: str = "figure.png"
    log_y: bool | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")

    def wants_log_y(self) -> bool:
        if self.log_y is not None:
            return self.log_y
        return self.kind == "convergence" or self.kind.startswith("nmse")


def _read_csv(path, expected_columns):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file, expected header "
                          f"{expected_columns}")
    header = rows[0]
    if header != expected_columns:
        missing = [c for c in expected_columns if c not in header]
        extra = [c for c in header if c not in expected_columns]
        raise SchemaError(f"{path}: column mismatch; missing {missing}, "
                          f"unexpected {extra}")
    if len(rows) == 1:
        raise SchemaError(f"{path}: no data rows")
    data = {}
    for j, col in enumerate(header):
        raw = [r[j] for r in rows[1:]]
        try:
            data[col] = np.array([float(v) for v in raw])
        except ValueError:
            data[col] = np.array(raw)
    return data


def _stem(path) -> str:
    name = str(path).rsplit("/", 1)[-1]
    return name.rsplit(".", 1)[0]


def _plot_convergence(ax, spec):
    for path in spec.inputs:
        data = _read_csv(path, TRACE_COLUMNS)
        label = _stem(path) if len(spec.inputs) > 1 else "objective"
        ax.plot(data["iteration"], data["objective"], marker="o", label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("pilot-fit objective")


def _plot_sweep(ax, spec):
    metric = "nmse" if spec.kind.startswith("nmse") else "rate"
    axis = spec.kind.split("_", 1)[1]
    if metric == "nmse":
        series = [("median_nmse_somp", "somp"),
                  ("median_nmse_refined", "refined")]
    else:
        series = [("median_rate_somp", "somp"),
                  ("median_rate_refined", "refined"),
                  ("median_rate_perfect", "perfect"),
                  ("median_rate_fpa", "fpa")]
    for path in spec.inputs:
        data = _read_csv(path, AGG_COLUMNS)
        prefix = f"{_stem(path)} " if len(spec.inputs) > 1 else ""
        for col, name in series:
            y = data[col]
            if np.all(np.isnan(y)):
                continue
            ax.plot(data["axis_value"], y, marker="o", label=prefix + name)
    ax.set_xlabel(AXIS_LABELS.get(axis, axis))
    ax.set_ylabel("NMSE" if metric == "nmse" else "achievable rate (bit/s/Hz)")


def render(spec: PlotSpec) -> str:
    """Draw the figure described by spec and write it to spec.output.

    Any input problem (missing column, empty file) raises before the output
    file is created.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    try:
        if spec.kind == "convergence":
            _plot_convergence(ax, spec)
        else:
            _plot_sweep(ax, spec)
        if spec.wants_log_y():
            ax.set_yscale("log")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        fig.savefig(spec.output, dpi=150)
    finally:
        plt.close(fig)
    return spec.output
