"""
Sequential insertion against global re-optimisation
===================================================

The desk scenario is sized so the insertion policy turns away roughly one
customer in five.  Both policies see identical demand for each seed; the
V2RB policy may reshuffle customers who have not boarded yet.
"""

from dataclasses import replace
from pathlib import Path

import numpy as np

from odrp import ScenarioConfig, run_scenario

cfg = ScenarioConfig.load(Path(__file__).parent / "configs" / "desk.cfg")
seeds = range(8)

rows = []
for seed in seeds:
    ins, _ = run_scenario(replace(cfg, seed=seed, policy="insertion"))
    adv, sim = run_scenario(replace(cfg, seed=seed, policy="v2rb"))
    reassigned = sum(1 for e in sim.events if e[1] == "reassign")
    rows.append((seed, ins.n_requests, ins.served_share, adv.served_share, ins.rsd, adv.rsd,
                 reassigned))
    print(f"seed {seed}: {ins.n_requests:3d} requests  served {ins.served_share:.3f} -> "
          f"{adv.served_share:.3f}  rsd {ins.rsd:+.3f} -> {adv.rsd:+.3f}  "
          f"({reassigned} reassignments)")

###############################################################################
# The gap is a few points at this size.  It comes from reassignments: a
# customer promised to one vehicle is moved when a newcomer fits better.

arr = np.array([r[2:6] for r in rows], dtype=float)
print()
print(f"mean served share  insertion {arr[:, 0].mean():.3f}   v2rb {arr[:, 1].mean():.3f}")
print(f"mean rsd           insertion {arr[:, 2].mean():+.3f}   v2rb {arr[:, 3].mean():+.3f}")
