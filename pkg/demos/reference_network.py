"""
Three transmitter classes sharing one band
==========================================

Walk through the reference network: one effective intensity summarizes the
interference, closed forms give each class's success probability, and a Monte
Carlo run confirms them. Then look at when flat channels beat Rayleigh fading.
"""

import numpy as np

from hetadhoc import perf
from hetadhoc.model import DistributionSpec, derive_intensities, table1_network
from hetadhoc.simulator import SimScenario, simulate

net = table1_network(1e-4)
derived = derive_intensities(net)
print(f"effective intensity: {derived.lambda_tilde:.4e} per m^2 "
      f"({derived.lambda_tilde / 1e-4:.4f} x lambda_1)")

###############################################################################
# Success probability at theta = 1, analytic vs simulated.

draws = simulate(SimScenario(net, replications=50_000, seed=7))
for k in range(net.K):
    exact = perf.success_prob(net, 1.0, k)
    est = draws.success_prob(1.0, k)
    print(f"type {k + 1}: analytic {exact:.4f}  mc {est.mean:.4f} +- {est.stderr:.4f}")

###############################################################################
# Fading helps a link only while the normalized intensity stays above a
# threshold. For the middle class that translates into a lambda_1 crossover.

region = perf.fading_region(4.0, 1.0)
lam_cross = region.boundary / derived.Lambda_tilde_k[1] * 1e-4
print(f"fading boundary {region.boundary:.5f} -> lambda_1 = {lam_cross:.3e}")

for lam in np.geomspace(1e-4, 1e-3, 6):
    faded = perf.success_prob(table1_network(lam), 1.0, 1)
    flat = perf.success_prob(table1_network(lam, fading=DistributionSpec.constant(1.0)), 1.0, 1)
    better = "Rayleigh" if faded > flat else "flat"
    print(f"lambda_1={lam:.2e}  Rayleigh {faded:.4f}  flat {flat:.4f}  -> {better}")
