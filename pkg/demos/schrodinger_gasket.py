"""
A fractional Schrodinger flow on the Sierpinski gasket
======================================================

With the Haar coefficients of ``u0`` in hand, the solution of
``i du/dt = D^beta u`` is a phase rotation of each coefficient.  We follow a
smooth initial state back to ``t = 0``, check the equation by finite
differences and export the probability density for plotting.
"""

from pathlib import Path

from dyadicwave import io
from dyadicwave.gasket import build_gasket, decay_spectrum, flow_experiment
from dyadicwave.haar import build_haar, synthesize

out = Path(__file__).with_name("output")
tree, geometry = build_gasket(5)
system = build_haar(tree)

beta, lam = 0.3, 0.6
f = synthesize(decay_spectrum(system, lam + 0.1, phase_seed=3))
result = flow_experiment(f, system, geometry, beta, lam, [1e-1, 1e-2, 1e-3, 1e-4],
                              density_times=[0.0, 0.5, 1.0])

# %%
# Errors against the initial data shrink as ``t`` goes to zero.
print("       t       L2 error    Besov error    sup error")
for t, l2, bes, sup in result.table.rows():
    print(f"{t:8.0e}  {l2:11.3e}  {bes:12.3e}  {sup:11.3e}")

# %%
# Central differences in time match ``-i D^beta u`` to second order.
for r in result.residuals:
    print(f"t={r.t:.0e} tau={r.tau:.1e} residual={r.l2:.3e} max E*tau={r.max_phase_step:.3f}")

# %%
# Triangles and densities join on the address column.
io.write_geometry(out / "gasket_geometry.csv", tree, geometry)
io.write_density(out / "gasket_density.csv", result.density)
io.write_convergence(out / "gasket_convergence", result.table)
print("wrote", sorted(p.name for p in out.iterdir()))
