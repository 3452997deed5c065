"""Simulate a 2-D Hawkes process and recover its parameters.

    python demos/01_simulate_and_fit.py
"""

import numpy as np

from mdhp import MdhpParams, SimConfig, SolverConfig, estimate, simulate_mdhp

truth = MdhpParams.uniform(2, 0.6, 1.5, 0.2)
print(f"branching radius {truth.branching_radius():.2f}")

fits = []
for seed in range(5):
    ev = simulate_mdhp(SimConfig(truth, 200.0, seed=seed))
    res = estimate(ev, SolverConfig(standardize=False))
    fits.append(res.params)
    print(f"seed {seed}: events {ev.counts.tolist()}, lnL {res.final_lnl:.2f} after {res.epochs_run} epochs")

for name in ("alpha", "beta", "theta"):
    est = np.median([getattr(p, name) for p in fits], axis=0)
    print(f"{name}: true {getattr(truth, name).ravel().round(3).tolist()}  median fit {est.ravel().round(3).tolist()}")
