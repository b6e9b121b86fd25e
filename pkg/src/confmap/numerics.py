"""Quadrature, numerical differentiation and a damped least-squares solver.

Everything here is deliberately boring: the interesting mathematics lives in
the map engines and the boundary diagnostics, which call into this module for
integration and root finding.  All integrands are expected to be vectorized
(accept an ndarray of abscissae, return an ndarray of values).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import InvalidInputError, SolverDivergedError

__all__ = [
    "QuadratureSpec",
    "QuadratureResult",
    "SolverSpec",
    "SolverResult",
    "integrate",
    "complex_derivative",
    "solve_least_squares",
    "aitken_limit",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Method selector plus tolerances for :func:`integrate`.

    ``jacobi_alpha``/``jacobi_beta`` are the endpoint exponents of the
    integrand at the left and right end of the interval: the gauss-jacobi
    rule integrates densities behaving like (t-a)^alpha (b-t)^beta exactly
    when the remaining factor is polynomial.  Exponents must be > -1.
    """

    method: str = "adaptive-simpson"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 30
    order: int = 24
    jacobi_alpha: float = 0.0
    jacobi_beta: float = 0.0

    def __post_init__(self):
        if self.method not in ("adaptive-simpson", "gauss-legendre", "gauss-jacobi"):
            raise InvalidInputError(f"unknown quadrature method {self.method!r}")
        if self.method == "gauss-jacobi" and (
            self.jacobi_alpha <= -1 or self.jacobi_beta <= -1
        ):
            raise InvalidInputError("jacobi exponents must be > -1")


@dataclass(frozen=True)
class QuadratureResult:
    value: complex | float
    error_estimate: float
    converged: bool
    evaluations: int

    def __float__(self) -> float:
        return float(np.real(self.value))

    def __complex__(self) -> complex:
        return complex(self.value)


@lru_cache(maxsize=128)
def _legendre_rule(n: int):
    x, w = roots_legendre(n)
    return x, w


@lru_cache(maxsize=128)
def _jacobi_rule(n: int, alpha: float, beta: float):
    # scipy weight is (1-x)^alpha (1+x)^beta on [-1, 1]; our convention puts
    # ``alpha`` at the left endpoint, hence the swap.
    x, w = roots_jacobi(n, beta, alpha)
    return x, w


def integrate(f, a: float, b: float, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Integrate ``f`` over [a, b] according to ``spec``.

    ``f`` must accept an ndarray.  With gauss-jacobi the integrand may carry
    integrable endpoint singularities matching the spec's exponents; the
    singular weight is divided out before applying the rule, so ``f`` is the
    full integrand.
    """
    if spec is None:
        spec = QuadratureSpec()
    if not np.isfinite(a) or not np.isfinite(b) or b <= a:
        raise InvalidInputError(f"bad interval [{a}, {b}]")
    if spec.method == "adaptive-simpson":
        return _adaptive_simpson(f, a, b, spec)
    if spec.method == "gauss-legendre":
        return _composite_gauss_legendre(f, a, b, spec)
    return _gauss_jacobi(f, a, b, spec)


def _adaptive_simpson(f, a, b, spec: QuadratureSpec) -> QuadratureResult:
    # Breadth-first adaptive Simpson: all active intervals are refined in one
    # vectorized call per round, which keeps engine evaluations batched.
    n0 = 8
    edges = np.linspace(a, b, n0 + 1)
    left, right = edges[:-1], edges[1:]
    fl = np.asarray(f(left))
    fr = np.asarray(f(right))
    fm = np.asarray(f(0.5 * (left + right)))
    evals = 3 * n0
    total = 0.0
    err_total = 0.0
    converged = True
    depth = 0
    while left.size:
        h = right - left
        m = 0.5 * (left + right)
        lm = 0.5 * (left + m)
        mr = 0.5 * (m + right)
        flm = np.asarray(f(lm))
        fmr = np.asarray(f(mr))
        evals += 2 * left.size
        s1 = h / 6.0 * (fl + 4.0 * fm + fr)
        s2 = h / 12.0 * (fl + 4.0 * flm + 2.0 * fm + 4.0 * fmr + fr)
        err = np.abs(s2 - s1) / 15.0
        budget = spec.abs_tol * h / (b - a) + spec.rel_tol * np.abs(s2)
        done = err <= budget
        if depth >= spec.max_subdivisions:
            converged = converged and bool(np.all(done))
            done = np.ones_like(done, dtype=bool)
        total = total + np.sum(s2[done] + (s2[done] - s1[done]) / 15.0)
        err_total += float(np.sum(err[done]))
        keep = ~done
        # split the survivors in two
        left = np.concatenate([left[keep], m[keep]])
        right = np.concatenate([m[keep], right[keep]])
        fl = np.concatenate([fl[keep], fm[keep]])
        fr = np.concatenate([fm[keep], fr[keep]])
        fm = np.concatenate([flm[keep], fmr[keep]])
        depth += 1
    if isinstance(total, np.generic):
        total = total.item()
    return QuadratureResult(total, err_total, converged, evals)


def _composite_gauss_legendre(f, a, b, spec: QuadratureSpec) -> QuadratureResult:
    x, w = _legendre_rule(spec.order)
    evals = 0
    prev = None
    err = np.inf
    panels = 1
    for _ in range(min(spec.max_subdivisions, 14) + 1):
        edges = np.linspace(a, b, panels + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        vals = np.asarray(f(nodes)).reshape(panels, -1)
        evals += nodes.size
        cur = np.sum(vals @ w * half).item()
        if prev is not None:
            err = abs(cur - prev)
            if err <= spec.abs_tol + spec.rel_tol * abs(cur):
                return QuadratureResult(cur, err, True, evals)
        prev = cur
        panels *= 2
    return QuadratureResult(prev, err, False, evals)


def _gauss_jacobi(f, a, b, spec: QuadratureSpec) -> QuadratureResult:
    al, be = spec.jacobi_alpha, spec.jacobi_beta
    scale = 0.5 * (b - a)
    evals = 0
    prev = None
    err = np.inf
    n = max(spec.order, 4)
    for _ in range(min(spec.max_subdivisions, 7) + 1):
        x, w = _jacobi_rule(n, al, be)
        t = a + scale * (x + 1.0)
        # divide the singular weight out of the full integrand
        weight = (t - a) ** al * (b - t) ** be
        vals = np.asarray(f(t)) / weight
        evals += t.size
        # jacobian of the affine map contributes scale^(1+al+be) in total:
        # scale for dt and scale^al, scale^be from the weight rescaling
        cur = (np.dot(w, vals) * scale ** (1.0 + al + be)).item()
        if prev is not None:
            err = abs(cur - prev)
            if err <= spec.abs_tol + spec.rel_tol * abs(cur):
                return QuadratureResult(cur, err, True, evals)
        prev = cur
        n *= 2
    return QuadratureResult(prev, err, False, evals)


def complex_derivative(f, z, n_samples: int = 64, radius: float | None = None):
    """Derivative of an analytic ``f`` on the unit disk via the Cauchy integral.

    Samples f on a circle of the given radius around each point (default
    half the distance to the unit circle) and evaluates
    f'(z) = 1/(2 pi i) * closed-integral f(w)/(w-z)^2 dw by the trapezoid
    rule, which is spectrally accurate for periodic analytic integrands.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    zf = np.atleast_1d(z)
    if np.any(np.abs(zf) >= 1.0):
        raise InvalidInputError("complex_derivative expects points inside the unit disk")
    if radius is None:
        rho = 0.5 * (1.0 - np.abs(zf))
    else:
        rho = np.full(zf.shape, float(radius))
        if np.any(np.abs(zf) + rho >= 1.0):
            raise InvalidInputError("sampling circle leaves the unit disk")
    theta = 2.0 * np.pi * np.arange(n_samples) / n_samples
    ring = np.exp(1j * theta)
    pts = zf[None, :] + rho[None, :] * ring[:, None]
    vals = np.asarray(f(pts.ravel()), dtype=complex).reshape(n_samples, -1)
    deriv = (vals * np.conj(ring)[:, None]).mean(axis=0) / rho
    return complex(deriv[0]) if scalar else deriv


@dataclass(frozen=True)
class SolverSpec:
    max_iterations: int = 60
    residual_tol: float = 1e-12
    step_tol: float = 1e-14
    fd_step: float = 1e-7
    max_backtracks: int = 30


@dataclass
class SolverResult:
    x: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def _numeric_jacobian(fn, x, r0, step):
    n = x.size
    jac = np.empty((r0.size, n))
    for i in range(n):
        h = step * (1.0 + abs(x[i]))
        xp = x.copy()
        xp[i] += h
        jac[:, i] = (fn(xp) - r0) / h
    return jac


def solve_least_squares(residual_fn, x0, spec: SolverSpec | None = None) -> SolverResult:
    """Damped Gauss-Newton minimization of ``0.5 * ||residual_fn(x)||^2``.

    The Jacobian is formed by forward differences and the step comes from a
    least-squares solve, so rank-deficient parametrizations (for example a
    softmax gauge freedom) are handled without special casing.  The residual
    norm is non-increasing across accepted steps; a step that cannot be made
    to descend raises :class:`SolverDivergedError`.
    """
    if spec is None:
        spec = SolverSpec()
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(residual_fn(x), dtype=float)
    if not np.all(np.isfinite(r)):
        raise InvalidInputError("residual is not finite at the initial point")
    norm = float(np.linalg.norm(r))
    history = [norm]
    for it in range(1, spec.max_iterations + 1):
        if norm <= spec.residual_tol:
            return SolverResult(x, norm, it - 1, True, history)
        jac = _numeric_jacobian(residual_fn, x, r, spec.fd_step)
        if not np.all(np.isfinite(jac)):
            raise SolverDivergedError("jacobian is not finite")
        step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        if not np.all(np.isfinite(step)):
            raise SolverDivergedError("least-squares step is not finite")
        lam = 1.0
        for _ in range(spec.max_backtracks):
            x_new = x + lam * step
            r_new = np.asarray(residual_fn(x_new), dtype=float)
            if np.all(np.isfinite(r_new)):
                norm_new = float(np.linalg.norm(r_new))
                if norm_new <= norm:
                    break
            lam *= 0.5
        else:
            raise SolverDivergedError(f"line search failed at iteration {it}")
        step_size = float(np.linalg.norm(lam * step))
        x, r, norm = x_new, r_new, norm_new
        history.append(norm)
        if step_size <= spec.step_tol * (1.0 + float(np.linalg.norm(x))):
            return SolverResult(x, norm, it, norm <= spec.residual_tol * 1e3, history)
    return SolverResult(x, norm, spec.max_iterations, norm <= spec.residual_tol, history)


def aitken_limit(values) -> tuple[complex | float, float]:
    """Aitken delta-squared extrapolation of the last three sequence values.

    Returns ``(limit, residual)`` where the residual is the magnitude of the
    applied correction; exact for sequences with a single geometric error
    term, which covers radial boundary limits of the engines here.
    """
    v = np.asarray(values)
    if v.size < 3:
        raise InvalidInputError("need at least three values to extrapolate")
    v0, v1, v2 = v[-3], v[-2], v[-1]
    denom = (v2 - v1) - (v1 - v0)
    if np.abs(denom) < 1e-300:
        return v2, float(np.abs(v2 - v1))
    limit = v2 - (v2 - v1) ** 2 / denom
    return limit, float(np.abs(limit - v2))
