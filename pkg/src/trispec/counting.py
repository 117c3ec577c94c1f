"""Eigenvalue counting below the essential spectrum via the compact block
operator T(z).

T(z) has zero diagonal blocks; its off-diagonal block T12(z) has kernel

    sqrt(mu1 mu2) phi1(t) phi2(q)
    -----------------------------------------------------------
    sqrt(Delta_mu1(q, z)) sqrt(Delta_mu2(t, z)) (u(t, q) - z)

The eigenvalues of the antidiagonal block operator come in +/- sigma
pairs, so N(z) = n(1, T(z)) equals the number of singular values of the
discretized T12 strictly above 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .friedrichs import delta_on_pgrid
from .models import ModelSpec
from .torus import TWO_PI, UniformGrid, grid_points

# Dense assembly memory cap: a 24^3 grid already means a 13824^2 block.
MAX_KERNEL_GRID_N = 24

COUNT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class KernelBlock:
    """Symmetrized Nystrom matrix of T12(z) with the quadrature weights
    absorbed: entry(q, t) = K(q, t) * sqrt(w_q * w_t)."""

    z: float
    grid: UniformGrid
    matrix: np.ndarray


@dataclass(frozen=True)
class CountResult:
    z: float
    count: int
    top_singular_values: tuple
    grid_n: int
    resolution_flag: bool = False
    count_tolerance: float = COUNT_TOLERANCE


def _sqrt_delta_on_grid(model, alpha, grid, z, quad_grid):
    from .friedrichs import _negation_index
    pts = grid_points(grid)
    neg = _negation_index(grid)
    reps = np.flatnonzero(np.arange(len(pts)) <= neg)
    d = np.empty(len(pts))
    d[reps] = delta_on_pgrid(model, alpha, pts[reps], z, quad_grid=quad_grid)
    d[neg[reps]] = d[reps]  # Delta(p, z) = Delta(-p, z) by evenness
    if np.any(d <= 0.0):
        bad = int(np.flatnonzero(d <= 0.0)[0])
        raise NumericalError(
            f"Delta_{alpha}(p, z) = {d[bad]} <= 0 at p = {pts[bad]}, z = {z}: "
            "z is not below the essential spectrum (or the quadrature failed)"
        )
    return np.sqrt(d)


def assemble_block(model: ModelSpec, z: float, grid: UniformGrid,
                   quad_grid=None, chunk: int = 512) -> KernelBlock:
    """Dense symmetrized Nystrom discretization of T12(z) on the uniform
    grid; the Delta values are computed once per grid node."""
    if z >= 0.0:
        raise DomainError("assemble_block requires z < 0")
    if grid.n > MAX_KERNEL_GRID_N:
        raise DomainError(
            f"dense kernel grids are capped at n = {MAX_KERNEL_GRID_N} "
            "(use the asymptotic route for finer resolution)"
        )
    pts = grid_points(grid)
    n = len(pts)
    sd1 = _sqrt_delta_on_grid(model, 1, grid, z, quad_grid)  # indexed by q
    sd2 = _sqrt_delta_on_grid(model, 2, grid, z, quad_grid)  # indexed by t
    phi1 = np.asarray(model.phi(1)(pts), dtype=float)  # phi1(t)
    phi2 = np.asarray(model.phi(2)(pts), dtype=float)  # phi2(q)
    pref = np.sqrt(model.mu1 * model.mu2) * grid.weight

    # row factor over q, column factor over t
    row = pref * phi2 / sd1
    col = phi1 / sd2

    K = np.empty((n, n))
    for start in range(0, n, chunk):
        idx = slice(start, min(start + chunk, n))
        # u(t, q) with q as the row index
        u = model.slice_matrix(1, pts[idx], pts)
        K[idx] = row[idx, None] * col[None, :] / (u - z)
    if not np.all(np.isfinite(K)):
        raise NumericalError("non-finite kernel entry in T12(z)")
    return KernelBlock(z=z, grid=grid, matrix=K)


def _singular_values_above(matrix, threshold):
    """Descending singular values down to (at least) the first one that
    falls below threshold; sparse iteration for large matrices."""
    n = matrix.shape[0]
    if n <= 1024:
        return np.linalg.svd(matrix, compute_uv=False)
    from scipy.sparse.linalg import svds
    k = 16
    while True:
        k = min(k, n - 1)
        v0 = np.full(n, 1.0 / np.sqrt(n))
        try:
            s = svds(matrix, k=k, v0=v0, return_singular_vectors=False)
        except Exception as exc:  # non-convergence
            raise NumericalError(f"singular-value iteration failed: {exc}")
        s = np.sort(s)[::-1]
        if s[-1] <= threshold or k == n - 1:
            return s
        k *= 2


def count_above_one(block: KernelBlock) -> CountResult:
    """N(z) = number of singular values of T12(z) strictly above
    1 + COUNT_TOLERANCE (the antidiagonal block spectrum is +/- sigma)."""
    s = _singular_values_above(block.matrix, 1.0)
    count = int(np.sum(s > 1.0 + COUNT_TOLERANCE))
    top = tuple(float(v) for v in s[:max(count + 3, 8)])
    return CountResult(z=block.z, count=count, top_singular_values=top,
                       grid_n=block.grid.n)


def resolution_flagged(z: float, grid_n: int) -> bool:
    """True when the kernel grid spacing exceeds the sqrt(|z|) length
    scale of the near-threshold kernel concentration."""
    return TWO_PI / grid_n > np.sqrt(abs(z))


def eigenvalue_count_N(model: ModelSpec, z: float, grid_n: int = 20,
                       quad_grid=None) -> CountResult:
    """Assemble and count at a single z < 0; Delta positivity on the grid
    is the operative below-the-spectrum check."""
    block = assemble_block(model, z, UniformGrid(grid_n), quad_grid)
    res = count_above_one(block)
    return CountResult(z=res.z, count=res.count,
                       top_singular_values=res.top_singular_values,
                       grid_n=res.grid_n,
                       resolution_flag=resolution_flagged(z, grid_n))


def count_schedule(model: ModelSpec, z_schedule, grid_n: int = 20,
                   quad_grid=None) -> list:
    """Counts along a z-schedule increasing strictly toward 0-."""
    zs = [float(z) for z in z_schedule]
    if any(z >= 0 for z in zs):
        raise DomainError("schedule entries must be strictly negative")
    if any(b <= a for a, b in zip(zs, zs[1:])):
        raise DomainError("schedule must be strictly increasing toward 0-")
    return [eigenvalue_count_N(model, z, grid_n, quad_grid) for z in zs]
