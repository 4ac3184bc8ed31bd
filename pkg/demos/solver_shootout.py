#!/usr/bin/env python3
"""Accuracy and speed of the two solvers across paired replicates.

Usage:
    python3 demos/solver_shootout.py [replicates]

For each replicate both solvers fit the same budget grid on the same data;
the script reports the per-budget median log10 objective ratio (near zero
means matched accuracy) and total wall time (the geodesic solver should win
by well over an order of magnitude).  Three replicates take ~half a minute.
"""

import sys
import time

import numpy as np

from frechetreg import SimConfigA, SolverOptions, gen_experiment_a, solution_path

n_rep = int(sys.argv[1]) if len(sys.argv) > 1 else 3
taus = np.arange(1.0, 20.001, 1.0)
opts = SolverOptions(eps=0.0075)

ratios = []
walls = {"gsd": 0.0, "mcd": 0.0}
for rep in range(n_rep):
    design, qm = gen_experiment_a(SimConfigA(n=50, p=10, m=50), seed=200 + rep)
    cs = qm.constraint_system()
    paths = {}
    for method in ("gsd", "mcd"):
        t0 = time.perf_counter()
        paths[method] = solution_path(
            design, qm.values, cs, taus, method=method, opts=opts
        )
        walls[method] += time.perf_counter() - t0
    ratios.append(
        np.log10(np.asarray(paths["mcd"].f_values) / np.asarray(paths["gsd"].f_values))
    )

ratios = np.asarray(ratios)
med = np.median(ratios, axis=0)
print(f"{n_rep} paired replicates, {taus.size} budgets each")
print(f"median log10(f_mcd / f_gsd): min {med.min():+.4f}, max {med.max():+.4f}")
print(f"wall time: gsd {walls['gsd']:.1f}s, mcd {walls['mcd']:.1f}s "
      f"({walls['mcd'] / walls['gsd']:.0f}x)")
