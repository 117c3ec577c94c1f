"""The accumulation constant U0 in N(z) ~ U0 |log|z||.

When both subsystems have a zero-energy resonance the discrete spectrum
accumulates logarithmically at the bottom of the essential spectrum.
The constant is a function of the dispersion curvature alone; this demo
computes it three ways: the fiber-integral formula, the finite-window
counting operator S_r, and a direct (desk-scale) eigenvalue count.

Run:  python demos/demo_efimov.py
"""

import numpy as np

import trispec as ts
from trispec.torus import UniformGrid

blocks = ts.estimate_hessian_blocks(ts.reference_cos_model(1.0, 1.0))
params = ts.sobolev_params(blocks.l1, blocks.l2, blocks.l)
print(f"curvature blocks (l1, l2, l) = ({blocks.l1:.4f}, {blocks.l2:.4f}, "
      f"{blocks.l:.4f})  ->  u12 = {params.u12:.6f}, s12 = {params.s12:.6f}")

u0 = ts.efimov_constant(params)
print(f"\nU0 from the fiber integral: {u0:.8f}")
print(f"closed-form comparison value log(2*u12)/pi^2 = "
      f"{ts.lower_bound_constant(params):.8f}")

print("\nfinite-window counts n(1, S_r), expected ~ 2 r U0:")
for r in (25.0, 50.0, 100.0, 200.0):
    n = ts.s_r_count(params, r, grid_1d_n=max(256, int(4 * r)))
    print(f"  r = {r:5.0f}   n = {n:3d}   n/(2r) = {0.5 * n / r:.4f}")

print("\ndirect counts N(z) on a coarse kernel grid (resolution-limited):")
quad = UniformGrid(24)
model = ts.reference_cos_model(1.0, 1.0)
mu0 = ts.mu_zero(model, 1, quad)
model = model.with_couplings(mu0, mu0)
schedule = (-1.0, -0.6, -0.4, -0.3, -0.1, -0.03)
results = ts.count_schedule(model, schedule, 12, quad)
for c in results:
    flag = "  (grid too coarse for this z)" if c.resolution_flag else ""
    print(f"  z = {c.z:8.3f}   N = {c.count}{flag}")

est = ts.fit_nz_slope(results, params)
print(f"\nfitted N(z) slope {est.nz_slope:.4f} vs U0 = {u0:.4f}; "
      f"range_too_shallow = {est.range_too_shallow}")
print("(one extra eigenvalue needs ~5 more decades of z, far below what a"
      " trustworthy kernel grid resolves -- hence the flag)")
