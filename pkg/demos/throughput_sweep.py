"""
How dense should the network be?
================================

Area spectral efficiency grows with intensity until interference takes over.
Sweep lambda_1, find the optimum numerically, and write a plot-ready CSV.
"""

import csv
import sys

import numpy as np

from hetadhoc import perf
from hetadhoc.model import table1_network
from hetadhoc.sirdist import CancellationSpec

grid = np.geomspace(1e-6, 1e-2, 17)
rows = []
for lam in grid:
    net = table1_network(lam)
    plain = perf.throughput_capacity(net).C
    cancelled = perf.throughput_capacity(net, cancel=CancellationSpec(1)).C
    rows.append((lam, plain, cancelled))

best = perf.optimize_throughput(table1_network())
best_cancel = perf.optimize_throughput(table1_network(), cancel=CancellationSpec(1))
print(f"optimum lambda_1 {best.optimal_lambda[0]:.3e}  C = {best.C:.4e} bps/Hz/m^2", file=sys.stderr)
print(f"with one cancellation {best_cancel.optimal_lambda[0]:.3e}  C = {best_cancel.C:.4e}", file=sys.stderr)

###############################################################################
# The per-type stationarity formulas give a different optimum; they are shown
# only for comparison.

ref = perf.throughput_reference(table1_network())
print(f"reference formulas: {ref}", file=sys.stderr)

writer = csv.writer(sys.stdout)
writer.writerow(["lambda1", "C", "C_cancel1"])
writer.writerows(rows)
