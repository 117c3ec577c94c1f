"""Geometry and deterministic quadrature on the 3-torus (-pi, pi]^3.

Provides the uniform product grid, the periodic-trapezoid rule (spectrally
accurate for smooth periodic integrands) and a singularity-subtracted rule
for integrands of the form g(t)/(d(t)+w) where d vanishes quadratically at
a single point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, NumericalError

TWO_PI = 2.0 * np.pi

# Fixed radius of the smooth cutoff used for the analytic regularization of
# quadratic singularities.  Must stay below pi so the cutoff ball fits in the
# fundamental domain.
CUTOFF_RADIUS = 2.0


def normalize_angles(x):
    """Map angles (any real values) into the fundamental domain (-pi, pi].

    Works elementwise on arrays.  Idempotent, and adding multiples of 2*pi
    leaves the result unchanged.
    """
    x = np.asarray(x, dtype=float)
    return np.pi - np.mod(np.pi - x, TWO_PI)


def periodic_delta(x):
    """Shortest signed displacement on the torus, in (-pi, pi]^3."""
    return normalize_angles(x)


@dataclass(frozen=True)
class UniformGrid:
    """Uniform n^3 product grid on (-pi, pi]^3 with equal weights."""

    n: int
    axis: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 4:
            raise DomainError(f"grid needs n >= 4, got n={self.n}")
        axis = normalize_angles(-np.pi + TWO_PI * np.arange(self.n) / self.n)
        object.__setattr__(self, "axis", axis)

    @property
    def weight(self) -> float:
        return (TWO_PI / self.n) ** 3

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    def points(self) -> np.ndarray:
        """All n^3 nodes, shape (n^3, 3), in a fixed deterministic order."""
        a = self.axis
        p1, p2, p3 = np.meshgrid(a, a, a, indexing="ij")
        return np.stack([p1.ravel(), p2.ravel(), p3.ravel()], axis=-1)

    def coarser(self) -> "UniformGrid":
        """The n/2 grid used for two-grid error estimates."""
        return UniformGrid(max(4, self.n // 2))


@lru_cache(maxsize=32)
def _cached_points(n: int) -> np.ndarray:
    pts = UniformGrid(n).points()
    pts.setflags(write=False)
    return pts


def grid_points(grid: UniformGrid) -> np.ndarray:
    """Cached node array for a grid (read-only)."""
    return _cached_points(grid.n)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float


def _plain_sum(f, grid: UniformGrid) -> float:
    pts = grid_points(grid)
    vals = np.asarray(f(pts), dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise NumericalError(
            f"non-finite integrand value at node {pts[bad]} (index {bad})"
        )
    return grid.weight * float(np.sum(vals))


def integrate_smooth(f, grid: UniformGrid) -> QuadratureResult:
    """Periodic-trapezoid (rectangle) rule on the uniform grid.

    Exact for trigonometric polynomials of per-axis degree < n and
    spectrally accurate for analytic periodic integrands.  The error
    estimate compares against the n/2 grid.
    """
    value = _plain_sum(f, grid)
    coarse = _plain_sum(f, grid.coarser())
    return QuadratureResult(value, abs(value - coarse))


# ---------------------------------------------------------------------------
# Singularity-subtracted quadrature.
#
# For f = g/(d + w) with d vanishing quadratically at c (Hessian H, w >= 0)
# we subtract the local model  g(c) * chi(|s|) / (Q(s) + w),
# Q(s) = 0.5 s^T H s, s the periodic displacement from c, and chi a C^2
# polynomial cutoff supported on |s| < CUTOFF_RADIUS.  The model integral is
# done in spherical coordinates: the radial part is elementary, the angular
# part is a smooth sphere integral handled by product Gauss quadrature.
# ---------------------------------------------------------------------------

_SPHERE_N_THETA = 24
_SPHERE_N_PHI = 48


@lru_cache(maxsize=1)
def _sphere_rule():
    x, wx = np.polynomial.legendre.leggauss(_SPHERE_N_THETA)
    phi = TWO_PI * np.arange(_SPHERE_N_PHI) / _SPHERE_N_PHI
    ct = x[:, None]
    st = np.sqrt(1.0 - ct**2)
    omega = np.stack(
        [
            (st * np.cos(phi)[None, :]).ravel(),
            (st * np.sin(phi)[None, :]).ravel(),
            np.broadcast_to(ct, (_SPHERE_N_THETA, _SPHERE_N_PHI)).ravel(),
        ],
        axis=-1,
    )
    w = (wx[:, None] * (TWO_PI / _SPHERE_N_PHI) * np.ones(_SPHERE_N_PHI)[None, :]).ravel()
    return omega, w


def _cutoff(r):
    """C^2 bump: (1 - (r/R)^2)^3 on r < R, else 0."""
    x = (np.asarray(r) / CUTOFF_RADIUS) ** 2
    return np.where(x < 1.0, (1.0 - np.minimum(x, 1.0)) ** 3, 0.0)


def _radial_moments(a, w, R):
    """K_m = int_0^R r^{2m} / (a r^2 + w) dr for m = 1..4, vectorized in a."""
    a = np.asarray(a, dtype=float)
    if w > 0.0:
        w_k0 = np.sqrt(w / a) * np.arctan(R * np.sqrt(a / w))  # w * K_0
    else:
        w_k0 = np.zeros_like(a)
    ks = []
    prev_w_k = w_k0  # holds w * K_{m-1} at m=1, then w * K_{m-1} generally
    for m in range(1, 5):
        km = R ** (2 * m - 1) / ((2 * m - 1) * a) - prev_w_k / a
        ks.append(km)
        prev_w_k = w * km
    return ks


def _model_integral(hessian, w):
    """Integral of chi(|s|) / (Q(s) + w) over R^3, Q = 0.5 s^T H s."""
    omega, sw = _sphere_rule()
    a = 0.5 * np.einsum("ij,jk,ik->i", omega, hessian, omega)
    if np.any(a <= 0):
        raise NumericalError("hessian of the singular denominator is not positive definite")
    k1, k2, k3, k4 = _radial_moments(a, w, CUTOFF_RADIUS)
    R2 = CUTOFF_RADIUS**2
    # chi(r) r^2 = r^2 - 3 r^4 / R^2 + 3 r^6 / R^4 - r^8 / R^6
    radial = k1 - 3.0 * k2 / R2 + 3.0 * k3 / R2**2 - k4 / R2**3
    return float(np.sum(sw * radial))


def _near_singular_sum(g, d, center, hessian, grid, shift):
    pts = grid_points(grid)
    center = normalize_angles(np.asarray(center, dtype=float))
    s = periodic_delta(pts - center)
    r2 = np.sum(s * s, axis=-1)
    nearest = int(np.argmin(r2))

    dv = np.asarray(d(pts), dtype=float)
    gv = np.asarray(g(pts), dtype=float)
    denom = dv + shift
    if shift == 0.0:
        small = np.abs(dv) < 1e-12
        small[nearest] = False
        if np.any(small):
            bad = int(np.flatnonzero(small)[0])
            raise NumericalError(
                f"denominator vanishes away from the singular center, at node {pts[bad]}"
            )

    q = 0.5 * np.einsum("ij,jk,ik->i", s, hessian, s)
    gc = float(np.asarray(g(center[None, :]), dtype=float)[0])
    chi = _cutoff(np.sqrt(r2))

    with np.errstate(divide="ignore", invalid="ignore"):
        rem = gv / denom - gc * chi / (q + shift)
    if shift == 0.0:
        rem[nearest] = 0.0
    if not np.all(np.isfinite(rem)):
        bad = int(np.flatnonzero(~np.isfinite(rem))[0])
        raise NumericalError(f"non-finite integrand value at node {pts[bad]}")

    return grid.weight * float(np.sum(rem)) + gc * _model_integral(hessian, shift)


def integrate_near_singular(g, d, center, hessian, grid: UniformGrid,
                            shift: float = 0.0) -> QuadratureResult:
    """Integrate g(t) / (d(t) + shift) over the torus.

    d must vanish quadratically at `center` (and nowhere else when
    shift == 0); `hessian` is the 3x3 Hessian of d there; shift >= 0.
    """
    if shift < 0.0:
        raise DomainError("shift must be >= 0")
    hessian = np.asarray(hessian, dtype=float)
    value = _near_singular_sum(g, d, center, hessian, grid, shift)
    coarse = _near_singular_sum(g, d, center, hessian, grid.coarser(), shift)
    return QuadratureResult(value, abs(value - coarse))


def integrate_with_quadratic_singularity(numerator, denominator, singular_center,
                                         hessian, grid: UniformGrid) -> QuadratureResult:
    """Integrate numerator(t)/denominator(t) with a single quadratic zero
    of the denominator at singular_center (integrable 1/|t|^2 singularity)."""
    return integrate_near_singular(numerator, denominator, singular_center,
                                   hessian, grid, shift=0.0)
