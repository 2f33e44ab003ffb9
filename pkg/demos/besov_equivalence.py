"""
Two Besov energies, one space
=============================

The double-integral energy of ``f`` and the weighted sum of its squared Haar
coefficients define the same space.  On a finite tree both are exact finite
sums, so the equivalence constants can simply be measured.
"""

import numpy as np

from dyadicwave.besov import besov_report, nu_form
from dyadicwave.haar import build_haar, synthesize
from dyadicwave.tree import build_uniform_tree

tree = build_uniform_tree(3, 5)
system = build_haar(tree)
rng = np.random.default_rng(7)

# %%
# Random functions with coefficients damped at different rates.
for sigma in (0.25, 0.5, 0.75):
    ratios = []
    for _ in range(50):
        s = system.zeros()
        s.coefficients[:] = rng.standard_normal(len(system)) * system.cube_measure ** rng.uniform(-0.5, 1.5)
        ratios.append(besov_report(synthesize(s), system, sigma).ratio)
    print(f"sigma={sigma}: coefficient/integral energy in [{min(ratios):.4f}, {max(ratios):.4f}]")

# %%
# Why it works: distinct wavelets are orthogonal for the energy form, and
# restricted to its own cube every wavelet has energy ``2 mu(Q)^-2 sigma``.
k = system.find((1, 2), 1)
print("nu(h, h) on Q x Q:", nu_form(system, k, k, 0.4, cube=(1, 2)), "expected", 2 * 9 ** 0.8)
print("nu(h, h') for a neighbour:", nu_form(system, k, k + 1, 0.4))
