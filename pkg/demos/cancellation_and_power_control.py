"""
Cancelling strong interferers and shaping transmit power
========================================================

Removing the L strongest interferers helps every class, but the weakest class
gains the most in relative terms. Stochastic power control trades low-intensity
losses for high-intensity gains.
"""

import warnings

import numpy as np

from hetadhoc import perf
from hetadhoc.errors import QualityWarning
from hetadhoc.model import PowerControlSpec, table1_network
from hetadhoc.sirdist import CancellationSpec

grid = np.geomspace(1e-5, 1e-3, 5)

###############################################################################
# Relative success gain p_L / p for L = 2.

cancel = CancellationSpec(2)
for lam in grid:
    net = table1_network(lam)
    gains = [perf.success_prob_cancel(net, cancel, 1.0, k) / perf.success_prob(net, 1.0, k)
             for k in range(net.K)]
    print(f"lambda_1={lam:.1e}  gain per type: " + "  ".join(f"{g:.3f}" for g in gains))

###############################################################################
# Power control with exponent 0.5 against constant power, type 1.

for lam in grid:
    net = table1_network(lam)
    pc = PowerControlSpec.uniform(net, 0.5)
    p_pc = perf.success_prob_pc(net, pc, 1.0, 0, numeric=True).value
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QualityWarning)
        c_pc = perf.ergodic_capacity_pc(net, pc, 0)
    print(f"lambda_1={lam:.1e}  p {perf.success_prob(net, 1.0, 0):.4f} -> {p_pc:.4f}   "
          f"c {perf.ergodic_capacity(net, 0):.3f} -> {c_pc:.3f}")
