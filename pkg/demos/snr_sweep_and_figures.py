"""Run a small SNR sweep, save the CSV outputs, and render the figures.

A scaled-down version of the full benchmark: fewer trials and a coarser
evaluation grid so it finishes in a couple of minutes on one core.  The
rendering step shells out to the ma-plot tool from the frontend package,
which talks to the sweep only through the CSV files.
"""

import subprocess
import sys
from pathlib import Path

from ma_chanest import (ExperimentConfig, run_sweep, write_aggregate_csv,
                        write_raw_csv)

out = Path("demo_out")
out.mkdir(exist_ok=True)

cfg = ExperimentConfig(axis="snr", values=(5.0, 15.0, 25.0), trials=4,
                       eval_points_per_side=8, master_seed=1)
records = run_sweep(cfg)
write_raw_csv(records, out / "snr_raw.csv")
write_aggregate_csv(records, out / "snr_aggregate.csv")
print("wrote", out / "snr_raw.csv", "and", out / "snr_aggregate.csv")

for kind in ("nmse_snr", "rate_snr"):
    fig = out / f"{kind}.png"
    ret = subprocess.run(
        [sys.executable, "-m", "ma_plots.cli", "plot", "--kind", kind,
         "--in", str(out / "snr_aggregate.csv"), "--out", str(fig)])
    if ret.returncode == 0:
        print("rendered", fig)
    else:
        print("ma_plots not installed; skipping", kind)
