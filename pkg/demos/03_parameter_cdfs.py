"""Fit every window of a small PLA dataset and compare the per-label
distributions of the fitted parameters.

    python demos/03_parameter_cdfs.py [dims]
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from mdhp.metrics import ks_statistic
from mdhp.solver import batch_estimate
from mdhp.traffic import SCENARIO_TABLE, build_dataset, read_windows

dims = int(sys.argv[1]) if len(sys.argv) > 1 else 3
with tempfile.TemporaryDirectory() as tmp:
    build_dataset([SCENARIO_TABLE[0]], 60, tmp, master_seed=0, dims=dims)
    windows = [w for s in ("train", "val") for _, w in read_windows(Path(tmp) / f"{s}.jsonl")]

results, report = batch_estimate([w.to_events(dims) for w in windows], workers=2)
print(f"{report.n_windows} windows, {report.window_cost * 1e3:.1f} ms each")
by = {lab: [r.params for r, w in zip(results, windows) if r and w.label == lab] for lab in ("normal", "attack")}
for name in ("alpha", "beta", "theta"):
    a = np.concatenate([getattr(p, name).ravel() for p in by["normal"]])
    b = np.concatenate([getattr(p, name).ravel() for p in by["attack"]])
    print(f"{name:>5}: median normal {np.median(a):.3f}  attack {np.median(b):.3f}  KS {ks_statistic(a, b):.3f}")
