"""Model definitions: dispersion relations, form factors and the two
built-in trigonometric reference families, plus numerical verification of
the standing assumptions (evenness, non-degenerate minimum, parity, and the
maximum property of the two-particle threshold integral).

All evaluators are numpy-vectorized pure functions: a dispersion maps two
(..., 3) angle arrays to a (...) array, a form factor maps one (..., 3)
array to (...).  They are safe for unrestricted concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NumericalError
from .torus import UniformGrid, grid_points, normalize_angles

_PARITY_SAMPLES = 64


@dataclass(frozen=True)
class FormFactor:
    """A real form factor on the torus with a declared parity."""

    evaluator: Callable
    parity: str  # "even" or "odd"
    value_at_zero: float

    def __call__(self, p):
        return np.asarray(self.evaluator(np.asarray(p, dtype=float)), dtype=float)


def make_form_factor(evaluator, parity: str, check: bool = True) -> FormFactor:
    if parity not in ("even", "odd"):
        raise DomainError(f"parity must be 'even' or 'odd', got {parity!r}")
    zero = float(np.asarray(evaluator(np.zeros((1, 3)))).ravel()[0])
    ff = FormFactor(evaluator, parity, zero)
    if check:
        rng = np.random.default_rng(1729)
        pts = rng.uniform(-np.pi, np.pi, size=(_PARITY_SAMPLES, 3))
        vp = ff(pts)
        vm = ff(normalize_angles(-pts))
        sign = 1.0 if parity == "even" else -1.0
        scale = 1.0 + np.max(np.abs(vp))
        if np.max(np.abs(vm - sign * vp)) > 1e-9 * scale:
            raise DomainError(f"form factor is not {parity} on sampled points")
        if parity == "odd" and abs(zero) > 1e-12:
            raise DomainError("odd form factor must vanish at 0")
    return ff


@dataclass(frozen=True)
class ModelSpec:
    """Full problem definition: dispersion u(p, q), two form factors and
    two positive couplings."""

    dispersion: Callable
    phi1: FormFactor
    phi2: FormFactor
    mu1: float
    mu2: float
    name: str = "model"

    def __post_init__(self):
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise DomainError("couplings must be positive")

    def phi(self, alpha: int) -> FormFactor:
        return self.phi1 if alpha == 1 else self.phi2

    def mu(self, alpha: int) -> float:
        return self.mu1 if alpha == 1 else self.mu2

    def with_couplings(self, mu1: float, mu2: float) -> "ModelSpec":
        return ModelSpec(self.dispersion, self.phi1, self.phi2, mu1, mu2, self.name)

    def slice(self, alpha: int, p):
        """The one-argument slice q -> u_p^(alpha)(q); alpha=1 fixes the
        second dispersion argument to p, alpha=2 the first."""
        p = np.asarray(p, dtype=float)
        if alpha == 1:
            return lambda q: self.dispersion(np.asarray(q, dtype=float), p)
        if alpha == 2:
            return lambda q: self.dispersion(p, np.asarray(q, dtype=float))
        raise DomainError(f"alpha must be 1 or 2, got {alpha}")

    def slice_matrix(self, alpha: int, P, T):
        """Matrix of u_{P_i}^(alpha)(T_j), shape (len(P), len(T))."""
        P = np.asarray(P, dtype=float)
        T = np.asarray(T, dtype=float)
        if self.dispersion is reference_dispersion:
            # the trigonometric dispersion is symmetric and separates into
            # a rank-6 bilinear form: one matmul instead of a broadcast
            cp, ct = np.cos(P), np.cos(T)
            X = np.concatenate([cp, np.sin(P)], axis=-1)
            Y = np.concatenate([ct, np.sin(T)], axis=-1)
            return (9.0 - cp.sum(-1))[:, None] - ct.sum(-1)[None, :] - X @ Y.T
        if alpha == 1:
            return self.dispersion(T[None, :, :], P[:, None, :])
        return self.dispersion(P[:, None, :], T[None, :, :])


def eval_dispersion(model: ModelSpec, p, q) -> float:
    """Evaluate u(p, q) (total function)."""
    return float(np.asarray(model.dispersion(np.asarray(p, float), np.asarray(q, float))))


# ---------------------------------------------------------------------------
# Built-in trigonometric reference family.
# ---------------------------------------------------------------------------


def reference_dispersion(p, q):
    """sum_i (3 - cos p_i - cos q_i - cos(p_i - q_i)); zero non-degenerate
    minimum at (0, 0), even, maximum 13.5."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.sum(3.0 - np.cos(p) - np.cos(q) - np.cos(p - q), axis=-1)


def cos_form_factor(a0: float, a1: float, a2: float, a3: float) -> FormFactor:
    coeffs = np.array([a1, a2, a3], dtype=float)
    if abs(a0) < 1e-14 and np.all(np.abs(coeffs) < 1e-14):
        raise DomainError("cosine form factor is identically zero (degenerate perturbation)")

    def ev(p):
        return a0 + np.sum(coeffs * np.cos(np.asarray(p, dtype=float)), axis=-1)

    return make_form_factor(ev, "even")


def sin_form_factor(a: float) -> FormFactor:
    if a == 0:
        raise DomainError("sine form factor needs a nonzero amplitude")

    def ev(p):
        return a * np.sum(np.sin(np.asarray(p, dtype=float)), axis=-1)

    return make_form_factor(ev, "odd")


def _as_form_factor(spec) -> FormFactor:
    if isinstance(spec, FormFactor):
        return spec
    kind, args = spec
    if kind == "cos":
        return cos_form_factor(*args)
    if kind == "sin":
        return sin_form_factor(args if np.isscalar(args) else args[0])
    raise DomainError(f"unknown form-factor family {kind!r}")


def make_reference_model(phi1, phi2, mu1: float, mu2: float,
                          name: str = "reference") -> ModelSpec:
    """Reference model with the trigonometric dispersion and form factors
    given either as FormFactor objects or as ("cos", (a0, a1, a2, a3)) /
    ("sin", a) tuples."""
    return ModelSpec(reference_dispersion, _as_form_factor(phi1),
                     _as_form_factor(phi2), mu1, mu2, name)


def reference_cos_model(mu1: float, mu2: float,
                        coeffs1=(1.0, 0.0, 0.0, 0.0),
                        coeffs2=(1.0, 0.0, 0.0, 0.0)) -> ModelSpec:
    return make_reference_model(("cos", coeffs1), ("cos", coeffs2), mu1, mu2,
                                 name="reference-cos")


def reference_sin_model(mu1: float, mu2: float, a1: float = 1.0,
                        a2: float = 1.0) -> ModelSpec:
    return make_reference_model(("sin", a1), ("sin", a2), mu1, mu2,
                                 name="reference-sin")


def reference_mixed_model(mu1: float, mu2: float) -> ModelSpec:
    """One even form factor with phi(0) != 0, one odd."""
    return make_reference_model(("cos", (1.0, 0.0, 0.0, 0.0)), ("sin", 1.0),
                                 mu1, mu2, name="reference-mixed")


# ---------------------------------------------------------------------------
# Hessian structure of the dispersion at its minimum.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HessianBlocks:
    """Factorization of the 6x6 Hessian of u at (0,0) into
    (pp, pq, qq) = (l1*U, l*U, l2*U) with U normalized so its largest
    diagonal entry is 1."""

    l1: float
    l2: float
    l: float
    U: np.ndarray
    residual: float

    def __post_init__(self):
        if self.l1 <= 0 or self.l2 <= 0:
            raise DomainError("l1 and l2 must be positive")
        if self.l1 * self.l2 - self.l**2 <= 0:
            raise DomainError("l1*l2 - l^2 must be positive (block Hessian not PD)")


def _second_derivative_matrix(f, x0, step):
    """Central-difference Hessian of scalar f at x0 (dimension d)."""
    d = len(x0)
    H = np.zeros((d, d))
    f0 = f(x0)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = step
        H[i, i] = (f(x0 + ei) - 2.0 * f0 + f(x0 - ei)) / step**2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = step
            H[i, j] = H[j, i] = (
                f(x0 + ei + ej) - f(x0 + ei - ej) - f(x0 - ei + ej) + f(x0 - ei - ej)
            ) / (4.0 * step**2)
    return H


def full_hessian(f, x0, step):
    """Richardson-extrapolated central-difference Hessian."""
    h1 = _second_derivative_matrix(f, x0, step)
    h2 = _second_derivative_matrix(f, x0, step / 2.0)
    return (4.0 * h2 - h1) / 3.0


def estimate_hessian_blocks(model: ModelSpec, step: float = 1e-3) -> HessianBlocks:
    """Recover (l1, l, l2, U) from finite-difference second derivatives of
    the dispersion at (0, 0)."""
    if not (1e-6 <= step <= 1e-2):
        raise DomainError("step must lie in [1e-6, 1e-2]")

    def f(x):
        return float(model.dispersion(x[:3], x[3:]))

    H = full_hessian(f, np.zeros(6), step)
    A = 0.5 * (H[:3, :3] + H[:3, :3].T)
    C = 0.5 * (H[3:, 3:] + H[3:, 3:].T)
    B = 0.5 * (H[:3, 3:] + H[3:, :3].T)

    for name, blk in (("pp", A), ("qq", C)):
        if np.min(np.linalg.eigvalsh(blk)) <= 0:
            raise NumericalError(f"{name}-block of the Hessian is not positive definite")

    l1 = float(np.max(np.diag(A)))
    U = A / l1
    denom = float(np.sum(U * U))
    l = float(np.sum(B * U) / denom)
    l2 = float(np.sum(C * U) / denom)
    residual = max(
        float(np.max(np.abs(B - l * U))),
        float(np.max(np.abs(C - l2 * U))),
        float(np.max(np.abs(B - B.T))),
    )
    scale = max(l1, abs(l), l2)
    if residual > 1e-4 * scale:
        raise NumericalError(
            f"no common U factors the three Hessian blocks (residual {residual:.3e})"
        )
    return HessianBlocks(l1=l1, l2=l2, l=l, U=U, residual=residual)


# ---------------------------------------------------------------------------
# Hypothesis verification report.
# ---------------------------------------------------------------------------


def verify_hypotheses(model: ModelSpec, grid_n: int = 16, quad_n: int = 32) -> dict:
    """Sampled checks of the standing assumptions.  Failures are report
    entries, not faults."""
    if grid_n < 8:
        raise DomainError("grid_n must be >= 8")
    from . import friedrichs  # local import to avoid a cycle

    report: dict = {"grid_n": grid_n, "quad_n": quad_n, "checks": {}}
    checks = report["checks"]

    rng = np.random.default_rng(271828)
    pts = grid_points(UniformGrid(grid_n))
    idx_p = rng.integers(0, len(pts), size=400)
    idx_q = rng.integers(0, len(pts), size=400)
    P, Q = pts[idx_p], pts[idx_q]

    up = model.dispersion(P, Q)
    um = model.dispersion(normalize_angles(-P), normalize_angles(-Q))
    checks["dispersion_even"] = bool(np.max(np.abs(up - um)) <= 1e-9 * (1 + np.max(np.abs(up))))

    origin = (np.sum(P * P, axis=-1) + np.sum(Q * Q, axis=-1)) < 1e-20
    checks["dispersion_positive"] = bool(np.all(up[~origin] > 0) and
                                         np.all(np.abs(up[origin]) < 1e-12))

    for alpha in (1, 2):
        phi = model.phi(alpha)
        sign = 1.0 if phi.parity == "even" else -1.0
        vals = phi(pts)
        neg = phi(normalize_angles(-pts))
        ok = np.max(np.abs(neg - sign * vals)) <= 1e-9 * (1 + np.max(np.abs(vals)))
        checks[f"phi{alpha}_parity"] = bool(ok)

    quad = UniformGrid(quad_n)
    pgrid = grid_points(UniformGrid(grid_n))
    nonzero = np.sum(pgrid * pgrid, axis=-1) > 1e-20
    for alpha in (1, 2):
        lam0 = friedrichs.lambda_of(model, alpha, np.zeros(3), 0.0, quad)
        lam_p = friedrichs.lambda_on_pgrid(model, alpha, pgrid[nonzero], 0.0, quad)
        checks[f"lambda{alpha}_max_at_zero"] = bool(np.all(lam_p < lam0))

        if abs(model.phi(alpha).value_at_zero) <= 1e-12:
            hess = friedrichs.lambda_hessian_at_zero(model, alpha, quad)
            checks[f"lambda{alpha}_nondegenerate_max"] = bool(
                np.max(np.linalg.eigvalsh(hess)) < 0
            )

        devs = []
        for p in ([0.7, 0.0, 0.0], [0.4, -1.1, 0.3], [1.9, 2.2, -0.5]):
            devs.append(friedrichs.lambda_difference_identity_gap(
                model, alpha, np.array(p), quad))
        checks[f"lambda{alpha}_difference_identity"] = bool(max(devs) <= 1e-8)

    report["passed"] = all(checks.values())
    return report
