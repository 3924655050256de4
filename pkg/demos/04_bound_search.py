"""
Searching two-state programs
============================

Enumerate two-state programs on a grid, keep those within the intensity
budget, solve the agent's reply to each and look at the best minimal
long-run mass. The myopic search stops at 2*mu - 1; the patient search at
mu/c - 1. (The grids here are coarse so the script runs in a few seconds.)
"""

import numpy as np

from sluggish import ModelParams, search_two_state

params = ModelParams(mu=2, c=0.25, delta=0.999, epsilon=0.01)

grid = np.array([0.1, 0.25, 0.5, 0.75, 0.9, 0.98, 0.999, 1.0])
rep = search_two_state(params, "myopic", range(7), grid)
print("myopic:", rep.counts(), "best", rep.best_min_mass, rep.best_policy)

grid = np.array([0.1, 0.25, 0.334, 0.5, 0.75, 0.9, 0.999, 1.0])
rep = search_two_state(params, "patient", range(0, 11), grid)
print("patient:", rep.counts(), "best", rep.best_min_mass, rep.best_policy)

best = sorted(rep.evaluated, key=lambda r: (-r.min_mass, -r.average_mass))[:5]
for r in best:
    print(f"  d=({r.spec.d_low},{r.spec.d_high}) a={r.spec.alpha} b={r.spec.beta}: "
          f"min {r.min_mass}, mean {r.average_mass:.4f}, E[d] {r.average_intensity:.4f}")
