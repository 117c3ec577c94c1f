"""Essential-spectrum band structure across the three coupling regimes.

The essential spectrum is the union of the three-particle band [0, M]
with the bands swept by the two two-particle bound-state branches; its
shape changes qualitatively as the couplings cross mu0 and mu_max.

Run:  python demos/demo_spectrum.py
"""

import trispec as ts
from trispec.torus import UniformGrid

quad = UniformGrid(24)
grid_n = 8

base = ts.reference_cos_model(1.0, 1.0)
mu0 = ts.mu_zero(base, 1, quad)
mumax = ts.mu_max(base, 1, grid_n, quad)
print(f"mu0 = {mu0:.8f}, mu_max = {mumax:.8f}")

setups = [
    ("mu = mu0/2 (subcritical)", base.with_couplings(0.5 * mu0, 0.5 * mu0)),
    ("mu = (mu0 + mu_max)/2", base.with_couplings(0.5 * (mu0 + mumax),
                                                  0.5 * (mu0 + mumax))),
    ("mu = (2, 4) * mu_max", base.with_couplings(2.0 * mumax, 4.0 * mumax)),
]

for label, model in setups:
    es = ts.essential_spectrum(model, grid_n, quad)
    print(f"\n{label}  ->  regime {es.regime}")
    for band in es.bands:
        print(f"  band [{band.lo:10.5f}, {band.hi:10.5f}]")
    if es.a1 is not None:
        print(f"  branch 1 endpoints: a1 = {es.a1:.5f}, b1 = {es.b1:.5f}")
    if es.a2 is not None:
        print(f"  branch 2 endpoints: a2 = {es.a2:.5f}, b2 = {es.b2:.5f}")
