"""Discrete-spectrum asymptotics: the constant U0 governing
N(z) ~ U0 * |log|z|| as z -> 0-.

U0 is computed from a pair of model-independent operators built from the
Hessian parameters (l1, l2, l) alone:

* the direct-integral family S_hat(y), whose fiber at y acts on the
  sphere and diagonalizes over Legendre degrees, giving
  U0 = (4 pi)^-1 * int n(1, S_hat(y)) dy; and
* the finite-window operator S_r on (0, r) x S^2, with
  (1/2) r^-1 n(1, S_r) -> U0 as r -> infinity.

The degree-l fiber eigenvalue has the closed Fourier form

    s_hat_l(y) = u12 e^{-i y r12} int_{-1}^{1} P_l(t)
                 sinh(theta_t y) / (sin(theta_t) sinh(pi y)) dt,

theta_t = arccos(s12 t); for l = 0 this reduces to
u12 sinh(y arcsin s12) / (s12 y cosh(pi y / 2)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError

DEFAULT_L_MAX = 6
DEFAULT_Y_STEP = 0.05
DEFAULT_Y_HALF_WIDTH = 50.0


@dataclass(frozen=True)
class SobolevParams:
    """The three parameters (u12, s12, r12) derived from (l1, l2, l)."""

    u12: float
    s12: float
    r12: float


def sobolev_params(l1: float, l2: float, l: float) -> SobolevParams:
    if l1 <= 0 or l2 <= 0:
        raise DomainError("l1 and l2 must be positive")
    if l == 0:
        raise DomainError("l must be nonzero")
    if l1 * l2 <= l * l:
        raise DomainError("l1*l2 must exceed l^2")
    return SobolevParams(
        u12=float(np.sqrt(l1 * l2 / (l1 * l2 - l * l))),
        s12=float(l / np.sqrt(l1 * l2)),
        r12=float(0.5 * np.log(l1 / l2)),
    )


def _sinh_ratio(theta, y):
    """sinh(theta*|y|) / sinh(pi*|y|) computed without overflow;
    theta in (0, pi).  Limit theta/pi at y = 0."""
    theta = np.asarray(theta, dtype=float)
    ay = abs(float(y))
    if ay < 1e-8:
        return theta / np.pi
    num = np.exp((theta - np.pi) * ay) * (1.0 - np.exp(-2.0 * theta * ay))
    return num / (1.0 - np.exp(-2.0 * np.pi * ay))


def _legendre_table(x, l_max):
    """P_0..P_lmax evaluated at x, shape (l_max+1, len(x))."""
    out = np.empty((l_max + 1, len(x)))
    out[0] = 1.0
    if l_max >= 1:
        out[1] = x
    for l in range(1, l_max):
        out[l + 1] = ((2 * l + 1) * x * out[l] - l * out[l - 1]) / (l + 1)
    return out


def _s_hat_moduli(params: SobolevParams, y: float, l_max: int, quad_n: int):
    """|s_hat_l(y)| for l = 0..l_max (the e^{-i y r12} phase has modulus 1)."""
    x, w = np.polynomial.legendre.leggauss(quad_n)
    theta = np.arccos(params.s12 * x)
    kernel = _sinh_ratio(theta, y) / np.sin(theta)
    P = _legendre_table(x, l_max)
    return np.abs(params.u12 * (P @ (w * kernel)))


def s_hat_spectrum(params: SobolevParams, y: float, l_max: int = DEFAULT_L_MAX,
                   quad_n: int = 64):
    """Eigenvalues of the fiber S_hat(y): +/-|s_hat_l(y)| with
    multiplicity 2l+1, as a descending list of (value, multiplicity).

    Faults when doubling the Legendre-projection quadrature moves any
    eigenvalue by more than 1e-8.
    """
    if l_max < 0:
        raise DomainError("l_max must be >= 0")
    if quad_n < 32:
        raise DomainError("quad_n must be >= 32")
    mods = _s_hat_moduli(params, y, l_max, quad_n)
    check = _s_hat_moduli(params, y, l_max, 2 * quad_n)
    if np.max(np.abs(mods - check)) > 1e-8:
        raise NumericalError(
            f"Legendre projection not converged at quad_n={quad_n} (y={y})"
        )
    pairs = []
    for l, v in enumerate(mods):
        pairs.append((float(v), 2 * l + 1))
        pairs.append((float(-v), 2 * l + 1))
    pairs.sort(key=lambda t: -t[0])
    return pairs


def _counts_above(params, lam, y_grid, l_max, quad_n=64):
    """n(lam, S_hat(y)) on the y-grid, vectorized; also the per-degree
    count table (len(y), l_max+1)."""
    x, w = np.polynomial.legendre.leggauss(quad_n)
    theta = np.arccos(params.s12 * x)
    inv_sin = 1.0 / np.sin(theta)
    P = _legendre_table(x, l_max)
    y_grid = np.asarray(y_grid, dtype=float)
    table = np.empty((len(y_grid), l_max + 1), dtype=int)
    mults = 2 * np.arange(l_max + 1) + 1
    for i, y in enumerate(y_grid):
        mods = np.abs(params.u12 * (P @ (w * (_sinh_ratio(theta, y) * inv_sin))))
        table[i] = np.where(mods > lam, mults, 0)
    return table.sum(axis=1), table


def u_of_lambda(params: SobolevParams, lam: float, y_grid=None,
                l_max: int = DEFAULT_L_MAX) -> float:
    """U(lam) = (4 pi)^-1 int n(lam, S_hat(y)) dy (trapezoid on the
    y-grid); U0 = u_of_lambda(params, 1).

    The default grid is widened automatically until the counts vanish at
    the boundary; a user-supplied grid that fails that check faults.
    """
    if lam <= 0:
        raise DomainError("lambda must be positive")
    auto = y_grid is None
    half, step = DEFAULT_Y_HALF_WIDTH, DEFAULT_Y_STEP
    if auto:
        y_grid = np.arange(-half, half + 0.5 * step, step)
    for _ in range(4):
        counts, _ = _counts_above(params, lam, y_grid, l_max)
        if counts[0] == 0 and counts[-1] == 0:
            return float(np.trapezoid(counts, y_grid) / (4.0 * np.pi))
        if not auto:
            raise DomainError(
                "y-grid does not cover the support of n(lambda, S_hat(y)); "
                "widen the grid"
            )
        half *= 2.0
        y_grid = np.arange(-half, half + 0.5 * step, step)
    raise NumericalError("count support did not close even on a widened y-grid")


def efimov_constant(params: SobolevParams, y_grid=None,
                    l_max: int = DEFAULT_L_MAX) -> float:
    """U0 = U(1)."""
    return u_of_lambda(params, 1.0, y_grid, l_max)


def lower_bound_constant(params: SobolevParams) -> float:
    """The closed-form comparison value log(2 u12) / pi^2 (measure of
    {y : 2 u12 e^{-pi|y|/2} > 1} times (4 pi)^-1)."""
    return float(np.log(2.0 * params.u12) / np.pi**2)


def s_r_count(params: SobolevParams, r: float, grid_1d_n: int = 256,
              l_max: int = DEFAULT_L_MAX, quad_n: int = 64) -> int:
    """n(1, S_r) for the window operator on (0, r) x S^2.

    Per Legendre degree the radial part is a Toeplitz Nystrom matrix of
    the difference kernel; the antidiagonal two-block structure makes the
    count the number of singular values above 1, weighted by 2l+1.
    """
    if r <= 0:
        raise DomainError("r must be positive")
    if grid_1d_n < 64:
        raise DomainError("grid_1d_n must be >= 64")
    from scipy.linalg import toeplitz

    h = r / grid_1d_n
    x, w = np.polynomial.legendre.leggauss(quad_n)
    P = _legendre_table(x, l_max)
    # difference kernel at all midpoint separations, in both signs
    d = h * np.arange(grid_1d_n)
    total = 0
    for l in range(l_max + 1):
        def kvals(diffs):
            # (2 pi)^-1 u12 int P_l(t) / (cosh(diff + r12) + s12 t) dt
            denom = np.cosh(diffs[:, None] + params.r12) + params.s12 * x[None, :]
            return params.u12 / (2.0 * np.pi) * ((P[l] * w) @ (1.0 / denom).T)

        col = h * kvals(d)          # rows: x - x' = +d
        row = h * kvals(-d)         # cols: x - x' = -d
        K = toeplitz(col, row)
        try:
            s = np.linalg.svd(K, compute_uv=False)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"singular-value decomposition failed: {exc}")
        total += (2 * l + 1) * int(np.sum(s > 1.0))
    return total


@dataclass(frozen=True)
class EfimovEstimate:
    u0: float
    lower_bound: float
    per_degree_counts: np.ndarray  # (len(y_grid), l_max+1) weighted counts
    y_grid: np.ndarray
    sr_sequence: tuple  # ((r, n(1, S_r)), ...)
    nz_slope: float
    nz_residual: float
    range_too_shallow: bool


def fit_nz_slope(count_results, params: SobolevParams,
                 r_schedule=(25.0, 50.0, 100.0, 200.0),
                 y_grid=None, l_max: int = DEFAULT_L_MAX) -> EfimovEstimate:
    """Least-squares slope of N(z) against |log|z|| from unflagged count
    results, assembled with U0, the S_r sequence and the closed-form
    comparison value.

    The range_too_shallow flag marks schedules whose |log|z|| span is too
    small for the U0 growth law to produce even one extra state."""
    usable = [c for c in count_results if not getattr(c, "resolution_flag", False)]
    if len(usable) < 3:
        raise DomainError(
            f"need at least 3 unflagged count results, got {len(usable)}"
        )
    L = np.array([abs(np.log(abs(c.z))) for c in usable])
    N = np.array([c.count for c in usable], dtype=float)
    design = np.stack([L, np.ones_like(L)], axis=-1)
    (slope, _), *_ = np.linalg.lstsq(design, N, rcond=None)
    resid = float(np.sqrt(np.mean((design @ np.linalg.lstsq(design, N, rcond=None)[0] - N) ** 2)))

    auto = y_grid is None
    if auto:
        y_grid = np.arange(-DEFAULT_Y_HALF_WIDTH,
                           DEFAULT_Y_HALF_WIDTH + 0.5 * DEFAULT_Y_STEP,
                           DEFAULT_Y_STEP)
    u0 = u_of_lambda(params, 1.0, None if auto else y_grid, l_max)
    _, table = _counts_above(params, 1.0, y_grid, l_max)

    sr = tuple((float(r), s_r_count(params, r,
                                    grid_1d_n=max(256, int(4 * r)),
                                    l_max=l_max)) for r in r_schedule)

    shallow = u0 * (np.max(L) - np.min(L)) < 1.0
    return EfimovEstimate(
        u0=float(u0),
        lower_bound=lower_bound_constant(params),
        per_degree_counts=table,
        y_grid=np.asarray(y_grid, dtype=float),
        sr_sequence=sr,
        nz_slope=float(slope),
        nz_residual=resid,
        range_too_shallow=bool(shallow),
    )
