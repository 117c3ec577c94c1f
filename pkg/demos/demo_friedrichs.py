"""Walk through the two-particle fiber analysis on the built-in
trigonometric reference model.

Shows the critical couplings, the monotone determinant Delta(p, .), the
bound-state branch over a coarse momentum grid, and the square-root
threshold expansion at the critical coupling.

Run:  python demos/demo_friedrichs.py
"""

import numpy as np

import trispec as ts
from trispec.torus import UniformGrid

quad = UniformGrid(24)

model = ts.reference_cos_model(1.0, 1.0)
mu0 = ts.mu_zero(model, 1, quad)
mumax = ts.mu_max(model, 1, 12, quad)
print(f"critical couplings: mu0 = {mu0:.8f}, mu_max = {mumax:.8f}")

model = model.with_couplings(2.0 * mumax, 2.0 * mumax)

p = np.array([0.9, -0.4, 0.2])
ext = ts.slice_extrema(model, 1, p)
print(f"\nslice at p = {p}: min {ext.m:.6f} at q = {ext.minimizer.round(4)}, "
      f"max {ext.M_big:.6f}")

print("\nDelta(p, z) is strictly decreasing in z:")
for z in (-6.0, -4.0, -2.0, ext.m):
    print(f"  z = {z:8.4f}   Delta = {ts.delta(model, 1, p, z, quad_grid=quad):+.6f}")

z_star = ts.bound_state(model, 1, p, quad_grid=quad)
print(f"\nbound state at z = {z_star:.8f} "
      f"(Delta there = {ts.delta(model, 1, p, z_star, quad_grid=quad):+.2e})")

branch = ts.bound_state_branch(model, 1, p_grid_n=8, quad_grid=quad)
z = branch.values[branch.present]
print(f"\nbranch over the 8^3 grid: present at {branch.present.sum()}/"
      f"{len(branch.values)} nodes, range [{z.min():.4f}, {z.max():.4f}]")

critical = model.with_couplings(mu0, mu0)
cls = ts.classify_threshold(critical, 1, quad)
print(f"\nthreshold class at mu = mu0: {cls.kind}")
rep = ts.threshold_expansion_check(critical, 1, quad)
print(f"sqrt-slope of Delta(0, -z): fitted {rep['fitted_slope']:.6f}, "
      f"predicted {rep['predicted_slope']:.6f} "
      f"(rel err {rep['relative_error']:.2e})")
