"""Essential spectrum of the three-particle operator.

It is the union of the two-particle branches  { z_alpha(p) : p in T^3 }
with the three-particle band [0, M], M = max u.  Depending on where each
coupling sits relative to (mu0, mu_max) the result is one, two or three
disjoint bands; the regime tag records the case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, NumericalError
from .friedrichs import (_refine_extremum, bound_state, bound_state_branch,
                         mu_max, mu_zero, slice_extrema)
from .models import ModelSpec
from .torus import UniformGrid, grid_points


@dataclass(frozen=True)
class SpectralBand:
    """Closed interval [lo, hi]; *_err are refinement-difference error bars."""

    lo: float
    hi: float
    lo_err: float = 0.0
    hi_err: float = 0.0

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"band has lo={self.lo} > hi={self.hi}")


@dataclass(frozen=True)
class EssentialSpectrum:
    bands: tuple
    regime: str  # BothAboveMuMax | Intermediate | AtOrBelowMuZero | Mixed
    M: float
    a1: Optional[float] = None
    b1: Optional[float] = None
    a2: Optional[float] = None
    b2: Optional[float] = None


def global_max_energy(model: ModelSpec, grid_n: int = 16) -> float:
    """max over (p, q) of the dispersion: grid scan plus damped-Newton
    ascent in the six joint variables."""
    if grid_n < 8:
        raise DomainError("grid_n must be >= 8")
    pts = grid_points(UniformGrid(grid_n))
    best_val = -np.inf
    best_pq = None
    chunk = 256
    for start in range(0, len(pts), chunk):
        P = pts[start:start + chunk]
        vals = model.dispersion(P[:, None, :], pts[None, :, :])
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[i, j] > best_val:
            best_val = float(vals[i, j])
            best_pq = np.concatenate([P[i], pts[j]])

    def f(x):
        return float(model.dispersion(x[:3], x[3:]))

    _, refined = _refine_extremum(f, best_pq, sign=-1.0)
    return max(best_val, refined)


def _branch_eval(model, alpha, mu, quad, absent_value):
    """z_alpha as a scalar function of p for the endpoint refinement."""

    def z_of(p):
        ext = slice_extrema(model, alpha, p)
        z = bound_state(model, alpha, p, mu, quad, extrema=ext)
        return absent_value if z is None else z

    return z_of


def _refine_endpoint(z_of, p0, sign):
    """Nelder-Mead polish of min (sign=+1) or max (sign=-1) of z(p)."""
    from scipy.optimize import minimize
    res = minimize(lambda p: sign * z_of(p), p0, method="Nelder-Mead",
                   options={"xatol": 1e-4, "fatol": 1e-9, "maxiter": 120})
    return sign * float(res.fun)


def two_particle_band(model: ModelSpec, alpha: int, mu: Optional[float] = None,
                      grid_n: int = 16, quad_grid=None) -> Optional[SpectralBand]:
    """The band swept by the two-particle bound state z_alpha(p).

    mu > mu_max: [min z, max z] with max z < 0.  mu in (mu0, mu_max]:
    [min z, 0] (the branch reaches 0 on the coupling-region boundary).
    mu <= mu0: absent.
    """
    if mu is None:
        mu = model.mu(alpha)
    if grid_n < 8:
        raise DomainError("grid_n must be >= 8")
    mu0 = mu_zero(model, alpha, quad_grid)
    if mu <= mu0:
        return None
    mumax = mu_max(model, alpha, grid_n, quad_grid)

    branch = bound_state_branch(model, alpha, mu, grid_n, quad_grid)
    z = branch.values
    neg = z[~np.isnan(z)]
    if neg.size == 0:
        raise NumericalError(
            f"no bound states sampled for alpha={alpha}, mu={mu} > mu0={mu0}"
        )
    z_of = _branch_eval(model, alpha, mu, quad_grid, absent_value=np.inf)
    i_lo = int(np.nanargmin(z))
    grid_lo = float(z[i_lo])
    lo = min(grid_lo, _refine_endpoint(z_of, branch.points[i_lo], +1.0))

    if mu > mumax:
        i_hi = int(np.nanargmax(z))
        grid_hi = float(z[i_hi])
        z_max = _branch_eval(model, alpha, mu, quad_grid, absent_value=-np.inf)
        hi = max(grid_hi, _refine_endpoint(z_max, branch.points[i_hi], -1.0))
        return SpectralBand(lo, hi, lo_err=abs(lo - grid_lo),
                            hi_err=abs(hi - grid_hi))
    return SpectralBand(lo, 0.0, lo_err=abs(lo - grid_lo))


def _regime_of(mu, mu0, mumax):
    if mu > mumax:
        return "above"
    if mu > mu0:
        return "intermediate"
    return "below"


_REGIME_TAG = {"above": "BothAboveMuMax", "intermediate": "Intermediate",
               "below": "AtOrBelowMuZero"}


def _merge_bands(bands):
    bands = sorted(bands, key=lambda b: b.lo)
    merged = [bands[0]]
    for b in bands[1:]:
        last = merged[-1]
        if b.lo <= last.hi + 1e-12:
            if b.hi > last.hi:
                merged[-1] = SpectralBand(last.lo, b.hi, last.lo_err, b.hi_err)
        else:
            merged.append(b)
    return tuple(merged)


def essential_spectrum(model: ModelSpec, grid_n: int = 16,
                       quad_grid=None) -> EssentialSpectrum:
    """Union of both two-particle bands with [0, M], merged and sorted,
    plus the coupling-regime classification."""
    if grid_n < 8:
        raise DomainError("grid_n must be >= 8")
    M = global_max_energy(model, grid_n)
    if M <= 0:
        raise NumericalError(f"global max energy {M} is not positive")

    bands = [SpectralBand(0.0, M)]
    endpoints = {}
    regimes = []
    for alpha in (1, 2):
        mu = model.mu(alpha)
        mu0 = mu_zero(model, alpha, quad_grid)
        mumax = mu_max(model, alpha, grid_n, quad_grid)
        regimes.append(_regime_of(mu, mu0, mumax))
        band = two_particle_band(model, alpha, mu, grid_n, quad_grid)
        if band is not None:
            bands.append(band)
            endpoints[f"a{alpha}"] = band.lo
            endpoints[f"b{alpha}"] = band.hi

    merged = _merge_bands(bands)
    tol = 1e-9 * max(1.0, M)
    if merged[-1].hi > M + tol:
        raise NumericalError(
            f"band content {merged[-1].hi} above the three-particle band top {M}"
        )
    regime = _REGIME_TAG[regimes[0]] if regimes[0] == regimes[1] else "Mixed"
    return EssentialSpectrum(bands=merged, regime=regime, M=M, **endpoints)
