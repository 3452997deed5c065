"""Generate benign SOME/IP-style windows and inject time-exciting attacks.

    python demos/02_attack_traffic.py
"""

import numpy as np

from mdhp.traffic import (
    SCENARIO_TABLE,
    attack_rate,
    attack_window,
    default_ecus,
    gen_normal_window,
    ip_count,
    scenario_for_row,
)

dims = 6
ecus = default_ecus(dims)
w = gen_normal_window(dims, seed=0)
span = w.messages[-1].timestamp - w.messages[0].timestamp
print(f"normal window: {len(w.messages)} messages over {span * 1e3:.1f} ms")
print("per-ECU counts:", w.to_events(dims).counts.tolist())

t = np.linspace(0, 1, 5)
for row in SCENARIO_TABLE:
    scen = scenario_for_row(row, dims)
    aw = attack_window(scen, row.id, ecus, master_seed=0, index=0)
    rate = attack_rate(scen, t).round(2).tolist() if row.attack_rate else "random (DRP)"
    print(f"row {row.id} {row.attack_rate or '/':>3} {row.ip_ctrl} {row.sampler:>3}: "
          f"{aw.n_injected:3d}/128 injected, g(t) at quartiles {rate}, IPs {ip_count(scen, t).tolist()}")
