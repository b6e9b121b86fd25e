"""Riemann map engines: closed-form, Schwarz-Christoffel, geodesic zipper.

Every engine realizes the same contract: an immutable evaluator for a
conformal bijection Phi of the open unit disk onto the interior of a target
Jordan curve, normalized by Phi(0) = w0 and Phi'(0) > 0, together with its
derivative and a boundary correspondence.  The normalization pins the map
uniquely, so every number downstream is reproducible.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import (
    BuildDegenerateError,
    InvalidInputError,
    SolverDivergedError,
)
from .geometry import (
    JordanCurve,
    curve_from_json,
    curve_to_json,
    is_simple,
    point_in_jordan,
)
from .numerics import (
    QuadratureSpec,
    SolverSpec,
    _legendre_rule,
    complex_derivative,
    integrate,
    solve_least_squares,
)

__all__ = [
    "RiemannMapEngine",
    "BoundaryTable",
    "ClosedFormEngine",
    "SchwarzChristoffelEngine",
    "ZipperEngine",
    "build_closed_form",
    "build_schwarz_christoffel",
    "build_zipper",
    "evaluate",
    "derivative",
    "boundary_correspondence",
    "invert_boundary",
    "save_engine",
    "load_engine",
    "engine_from_json",
]

# radii for the radial boundary limit; geometric in (1-r) so one Aitken
# step removes the leading error mode whatever its (unknown) exponent
_BOUNDARY_RADII = (1.0 - 4e-8, 1.0 - 2e-8, 1.0 - 1e-8)


def _c2pair(z: complex) -> list:
    return [float(np.real(z)), float(np.imag(z))]


def _pair2c(p) -> complex:
    return complex(p[0], p[1])


@dataclass
class BoundaryTable:
    """Monotone table of circle parameters t_k and boundary points Phi(e^{it_k})."""

    angles: np.ndarray
    points: np.ndarray
    residual: float | None = None

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float)
        self.points = np.asarray(self.points, dtype=complex)
        if self.angles.size != self.points.size or self.angles.size < 2:
            raise InvalidInputError("table needs matching angle/point arrays")
        if np.any(np.diff(self.angles) <= 0):
            raise InvalidInputError("table angles must be strictly increasing")

    def interpolate(self, t):
        """Chord interpolation between the bracketing table entries."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        tw = np.mod(t - self.angles[0], 2.0 * np.pi) + self.angles[0]
        # append the wrapped-around first entry to close the cycle
        ang = np.append(self.angles, self.angles[0] + 2.0 * np.pi)
        pts = np.append(self.points, self.points[0])
        idx = np.clip(np.searchsorted(ang, tw, side="right") - 1, 0, ang.size - 2)
        frac = (tw - ang[idx]) / (ang[idx + 1] - ang[idx])
        return pts[idx] * (1.0 - frac) + pts[idx + 1] * frac


class RiemannMapEngine:
    """Common evaluation contract shared by all engine variants."""

    variant = "abstract"

    def __init__(self, target: JordanCurve, center: complex):
        self.target = target
        self.center = complex(center)
        self._table_cache = None

    # -- abstract surface ------------------------------------------------------

    def evaluate(self, z):
        raise NotImplementedError

    def derivative(self, z):
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    # -- helpers ---------------------------------------------------------------

    def _check_disk(self, z):
        arr = np.asarray(z, dtype=complex)
        scalar = arr.ndim == 0
        flat = np.atleast_1d(arr)
        if np.any(np.abs(flat) >= 1.0):
            raise InvalidInputError("engine evaluation requires |z| < 1")
        return flat, scalar

    @property
    def boundary_residual(self) -> float:
        return getattr(self, "_boundary_residual", 1e-6)

    def boundary_correspondence(self, t):
        """Radial limit of Phi along e^{it}, Aitken-extrapolated in (1-r).

        The map extends continuously to the closed disk, so the radial
        values converge; extrapolation removes the leading error mode.
        """
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        tf = np.atleast_1d(t)
        v0, v1, v2 = (self.ring_points(r, tf) for r in _BOUNDARY_RADII)
        d1, d2 = v1 - v0, v2 - v1
        denom = d2 - d1
        # regularized correction: where the radial differences contract
        # geometrically this is plain Aitken; where the denominator collapses
        # (corner blow-up, quadrature noise) it fades out smoothly instead of
        # switching, because any hard cutoff would zigzag between neighbouring
        # angles and fabricate arc length
        mu = 0.05 * (np.abs(d1) + np.abs(d2)) + 1e-300
        corr = d2 * d2 * np.conj(denom) / (np.abs(denom) ** 2 + mu * mu)
        out = v2 - corr
        return complex(out[0]) if scalar else out

    def ring_points(self, r: float, t) -> np.ndarray:
        """Phi(r e^{it}) on an angle grid.

        Defers to evaluate; engines whose evaluate integrates a path per
        point override this with one anchored sweep along the ring.
        """
        return self.evaluate(r * np.exp(1j * np.asarray(t, dtype=float)))

    def boundary_table(self, n: int = 512) -> BoundaryTable:
        t = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return BoundaryTable(t, self.boundary_correspondence(t))

    def _cached_table(self) -> BoundaryTable:
        if self._table_cache is None:
            self._table_cache = self.boundary_table(1024)
        return self._table_cache

    def invert_boundary(self, p) -> float:
        """Angle t with Phi(e^{it}) closest to p; p must lie near the target curve.

        Coarse search over the cached boundary table, then golden-section
        refinement of |Phi(e^{it}) - p| over the bracketing interval.
        """
        p = complex(p)
        verts = self.target.as_polyline_vertices(4096)
        seg_a, seg_b = verts[:-1], verts[1:]
        seg = seg_b - seg_a
        w = p - seg_a
        s = np.clip((w.real * seg.real + w.imag * seg.imag)
                    / (seg.real**2 + seg.imag**2), 0.0, 1.0)
        dist = float(np.min(np.abs(w - s * seg)))
        tol = 10.0 * self.boundary_residual + 1e-9 * (1.0 + self.target.diameter())
        if dist > max(tol, 1e-6 * self.target.diameter()):
            raise InvalidInputError("point does not lie on the target curve")
        table = self._cached_table()
        k = int(np.argmin(np.abs(table.points - p)))
        n = table.angles.size
        lo = table.angles[(k - 1) % n] + (-2.0 * np.pi if k == 0 else 0.0)
        hi = table.angles[(k + 1) % n] + (2.0 * np.pi if k == n - 1 else 0.0)

        phi = (math.sqrt(5.0) - 1.0) / 2.0
        a_, b_ = lo, hi
        c_ = b_ - phi * (b_ - a_)
        d_ = a_ + phi * (b_ - a_)
        fc = abs(self.boundary_correspondence(c_) - p)
        fd = abs(self.boundary_correspondence(d_) - p)
        for _ in range(60):
            if fc < fd:
                b_, d_, fd = d_, c_, fc
                c_ = b_ - phi * (b_ - a_)
                fc = abs(self.boundary_correspondence(c_) - p)
            else:
                a_, c_, fc = c_, d_, fd
                d_ = a_ + phi * (b_ - a_)
                fd = abs(self.boundary_correspondence(d_) - p)
            if b_ - a_ < 1e-12:
                break
        t = 0.5 * (a_ + b_)
        return float(np.mod(t, 2.0 * np.pi))

    def univalence_constant(self, n_pairs: int = 1000, seed: int = 7, radius: float = 0.95) -> float:
        """Smallest observed |Phi(z1)-Phi(z2)| / |z1-z2| over random pairs."""
        rng = np.random.default_rng(seed)
        r = radius * np.sqrt(rng.random(2 * n_pairs))
        ang = 2.0 * np.pi * rng.random(2 * n_pairs)
        z = r * np.exp(1j * ang)
        z1, z2 = z[:n_pairs], z[n_pairs:]
        keep = np.abs(z1 - z2) > 1e-9
        w1, w2 = self.evaluate(z1[keep]), self.evaluate(z2[keep])
        return float(np.min(np.abs(w1 - w2) / np.abs(z1[keep] - z2[keep])))

    def normalization_report(self) -> dict:
        w0 = self.evaluate(np.array([0.0 + 0.0j]))[0]
        d0 = self.derivative(np.array([0.0 + 0.0j]))[0]
        return {
            "center_value": w0,
            "center_error": abs(w0 - self.center),
            "derivative_at_zero": d0,
            "derivative_argument": float(np.angle(d0)),
        }

    def save(self, path) -> None:
        save_engine(self, path)


# -- closed-form engines ------------------------------------------------------


class ClosedFormEngine(RiemannMapEngine):
    """Exact maps used as oracles: identity, affine c*z + d, and z + a*z^2."""

    variant = "closed-form"

    def __init__(self, name: str, params: dict):
        self.name = name
        self.params = dict(params)
        if name == "identity":
            target = JordanCurve.analytic(
                lambda t: np.exp(1j * np.asarray(t, dtype=float)),
                (0.0, 2.0 * np.pi), name="unit-circle")
            center = 0.0
        elif name == "affine":
            c = complex(params["c"])
            d = complex(params.get("d", 0.0))
            if c == 0:
                raise InvalidInputError("affine engine needs c != 0")
            target = JordanCurve.analytic(
                lambda t, c=c, d=d: c * np.exp(1j * np.asarray(t, dtype=float)) + d,
                (0.0, 2.0 * np.pi), name="circle",
                params={"c": _c2pair(c), "d": _c2pair(d)})
            center = d
        elif name == "univalent-poly":
            a = complex(params["a"])
            if abs(a) > 0.5 + 1e-15:
                raise InvalidInputError("z + a z^2 is univalent only for |a| <= 1/2")
            target = JordanCurve.analytic(
                lambda t, a=a: np.exp(1j * np.asarray(t, dtype=float))
                + a * np.exp(2j * np.asarray(t, dtype=float)),
                (0.0, 2.0 * np.pi), name="poly-image", params={"a": _c2pair(a)})
            center = 0.0
        else:
            raise InvalidInputError(f"unknown closed-form engine {name!r}")
        super().__init__(target, center)

    def evaluate(self, z):
        flat, scalar = self._check_disk(z)
        if self.name == "identity":
            out = flat
        elif self.name == "affine":
            out = complex(self.params["c"]) * flat + complex(self.params.get("d", 0.0))
        else:
            out = flat + complex(self.params["a"]) * flat * flat
        return complex(out[0]) if scalar else out

    def derivative(self, z):
        flat, scalar = self._check_disk(z)
        if self.name == "identity":
            out = np.ones_like(flat)
        elif self.name == "affine":
            out = np.full_like(flat, complex(self.params["c"]))
        else:
            out = 1.0 + 2.0 * complex(self.params["a"]) * flat
        return complex(out[0]) if scalar else out

    @property
    def boundary_residual(self) -> float:
        return 1e-10

    def to_json(self) -> dict:
        params = {k: _c2pair(complex(v)) for k, v in self.params.items()}
        return {"variant": self.variant, "name": self.name, "params": params}

    @classmethod
    def from_json(cls, obj: dict) -> "ClosedFormEngine":
        params = {k: _pair2c(v) for k, v in obj.get("params", {}).items()}
        return cls(obj["name"], params)


def build_closed_form(name: str, **params) -> ClosedFormEngine:
    """Engine factory for {identity | affine(c,d) | univalent-poly(a)}."""
    return ClosedFormEngine(name, params)


# -- Schwarz-Christoffel ------------------------------------------------------


def _turning_exponents(vertices: np.ndarray) -> np.ndarray:
    """Exterior turning angles / pi at each vertex of a closed polygon."""
    prev = np.roll(vertices, 1)
    nxt = np.roll(vertices, -1)
    d_in = vertices - prev
    d_out = nxt - vertices
    beta = np.angle(d_out / d_in) / np.pi
    if abs(beta.sum() - 2.0) > 1e-9:
        raise InvalidInputError(
            "turning angles do not sum to 2: polygon is not simple/positively oriented")
    if np.any(np.abs(beta) >= 1.0 - 1e-12):
        raise InvalidInputError("cusp or slit vertex: |turning| must be < pi")
    return beta


class SchwarzChristoffelEngine(RiemannMapEngine):
    """Polygon map Phi(z) = w0 + C * integral of prod (1 - zeta/z_k)^{-beta_k}.

    ``prevertices`` are the unit-circle preimages of the polygon vertices in
    traversal order; ``scale`` is the (real, positive) constant C, so the
    normalization Phi(0) = w0, Phi'(0) = C > 0 is built into the formula.
    """

    variant = "schwarz-christoffel"

    def __init__(self, target, center, prevertex_angles, turning, scale, diag=None):
        super().__init__(target, center)
        self.prevertex_angles = np.asarray(prevertex_angles, dtype=float)
        self.turning = np.asarray(turning, dtype=float)
        self.scale = float(scale)
        self.prevertices = np.exp(1j * self.prevertex_angles)
        self.diagnostics = dict(diag or {})
        self._vertex_images = None
        order = np.argsort(np.mod(self.prevertex_angles, 2.0 * np.pi))
        gaps = np.diff(np.sort(np.mod(self.prevertex_angles, 2.0 * np.pi)))
        if np.any(gaps <= 0):
            raise InvalidInputError("prevertex angles must be distinct")
        self._angle_order = order
        self._boundary_residual = self.diagnostics.get("vertex_image_error", 1e-8)
        self._ring_cache: dict = {}

    # core product, broadcast over any shape
    def _deriv_raw(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        flat = zeta.reshape(-1)
        out = np.empty(flat.shape, dtype=complex)
        chunk = max(1, 2_000_000 // max(self.prevertices.size, 1))
        for s in range(0, flat.size, chunk):
            blk = flat[s:s + chunk, None]
            logs = np.log(1.0 - blk / self.prevertices[None, :])
            out[s:s + chunk] = np.exp(-(logs @ self.turning))
        return self.scale * out.reshape(zeta.shape)

    def derivative(self, z):
        flat, scalar = self._check_disk(z)
        out = self._deriv_raw(flat)
        return complex(out[0]) if scalar else out

    def _path_integral(self, z, n_geo):
        # geometric refinement of [0,1] toward the endpoint resolves the
        # growth of the integrand as |z| -> 1
        breaks = np.concatenate([[0.0], 1.0 - 2.0 ** (-np.arange(1.0, n_geo)), [1.0]])
        x, w = _legendre_rule(24)
        mid = 0.5 * (breaks[1:] + breaks[:-1])
        half = 0.5 * (breaks[1:] - breaks[:-1])
        s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        ws = (half[:, None] * w[None, :]).ravel()
        vals = self._deriv_raw(z[:, None] * s[None, :])
        return (vals @ ws) * z

    def evaluate(self, z):
        flat, scalar = self._check_disk(z)
        out = np.empty_like(flat)
        depth = np.maximum(
            3, np.ceil(np.log2(1.0 / np.maximum(1.0 - np.abs(flat), 1e-12))).astype(int) + 1
        )
        for d in np.unique(depth):
            idx = depth == d
            out[idx] = self.center + self._path_integral(flat[idx], d)
        return complex(out[0]) if scalar else out

    def _prevertex_copies(self) -> np.ndarray:
        pre = np.mod(self.prevertex_angles, 2.0 * np.pi)
        return np.concatenate([pre - 2.0 * np.pi, pre, pre + 2.0 * np.pi, pre + 4.0 * np.pi])

    def _sweep_segments(self, r, edges):
        """integrals of d/dt Phi(re^{it}) over consecutive edge intervals.

        The integrand varies on the scale of the angular distance to the
        nearest prevertex, smoothed below by 1 - r; each interval is split
        until panels stay a fraction of that scale, which keeps the rule
        accurate right up against the corners.
        """
        pre = self._prevertex_copies()
        dist = np.min(np.abs(edges[:, None] - pre[None, :]), axis=1)
        dist = np.minimum(dist[:-1], dist[1:])
        widths = np.diff(edges)
        h = 0.25 * np.hypot(dist, 1.0 - r)
        m = np.clip(np.ceil(widths / h).astype(int), 1, 64)
        total = int(m.sum())
        sub_w = np.repeat(widths / m, m)
        intra = np.arange(total) - np.repeat(np.cumsum(m) - m, m)
        sub_a = np.repeat(edges[:-1], m) + intra * sub_w
        x, w = _legendre_rule(12)
        nodes = (sub_a + 0.5 * sub_w)[:, None] + (0.5 * sub_w)[:, None] * x[None, :]
        ring = r * np.exp(1j * nodes)
        integ = ((1j * ring * self._deriv_raw(ring)) @ w) * (0.5 * sub_w)
        cum = np.cumsum(integ)[np.cumsum(m) - 1]
        return np.diff(np.concatenate([[0.0 + 0.0j], cum]))

    def _graded_edges(self, lo, hi, r):
        """Edges over [lo, hi]: cuts at prevertices, geometric grading between."""
        cuts = np.unique(np.concatenate(
            [[lo, hi], [p for p in self._prevertex_copies() if lo + 1e-12 < p < hi - 1e-12]]))
        legs = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            span = b - a
            if span <= 4.0 * (1.0 - r):
                legs.append(np.array([a]))
                continue
            k = int(math.ceil(math.log2(span / (1.0 - r)))) + 1
            f = 2.0 ** -np.arange(1, k, dtype=float)
            fr = np.unique(np.concatenate([[0.0, 0.5], f, 1.0 - f]))
            legs.append(a + span * fr)
        return np.append(np.concatenate(legs), hi)

    def _ring_base(self, r, t0):
        """Phi(r e^{it0}) anchored at angle 0, cached per (r, t0).

        All sweeps at one radius share the angle-0 anchor, so whatever error
        the anchor carries becomes a common translation instead of a
        point-to-point inconsistency between refinement levels.
        """
        key = (float(r), float(t0))
        if key in self._ring_cache:
            return self._ring_cache[key]
        anchor_key = (float(r),)
        if anchor_key not in self._ring_cache:
            self._ring_cache[anchor_key] = self.evaluate(np.array([r + 0.0j]))[0]
        val = self._ring_cache[anchor_key]
        if t0 != 0.0:
            lo, hi = (0.0, t0) if t0 > 0 else (t0, 0.0)
            leg = np.sum(self._sweep_segments(r, self._graded_edges(lo, hi, r)))
            val = val + leg if t0 > 0 else val - leg
        self._ring_cache[key] = val
        return val

    def ring_points(self, r, t):
        """One anchored sweep along the ring instead of a path integral per point.

        The requested angles are merged with the graded corner cuts before
        integrating; otherwise a coarse grid crossing a prevertex would carry
        an under-resolved corner panel into every point downstream of it, and
        the error would differ between refinement levels.
        """
        t = np.asarray(t, dtype=float)
        if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
            return self.evaluate(r * np.exp(1j * t))
        base = self._ring_base(r, t[0])
        grid = np.union1d(t, self._graded_edges(t[0], t[-1], r))
        cum = np.concatenate([[0.0 + 0.0j], np.cumsum(self._sweep_segments(r, grid))])
        return base + cum[np.searchsorted(grid, t)]

    def vertex_images(self) -> np.ndarray:
        """Phi at the prevertices, via a Gauss-Jacobi panel at the singular end."""
        if self._vertex_images is not None:
            return self._vertex_images
        s0 = 1.0 - 2.0 ** -10
        x, w = _legendre_rule(24)
        breaks = np.concatenate([[0.0], 1.0 - 2.0 ** (-np.arange(1.0, 10.0)), [s0]])
        mid = 0.5 * (breaks[1:] + breaks[:-1])
        half = 0.5 * (breaks[1:] - breaks[:-1])
        s = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        ws = (half[:, None] * w[None, :]).ravel()
        images = np.empty(self.prevertices.size, dtype=complex)
        for k, (pk, bk) in enumerate(zip(self.prevertices, self.turning)):
            smooth = self._deriv_raw(s * pk) @ ws

            def tail(u, pk=pk):
                return self._deriv_raw(u * pk)

            spec = QuadratureSpec(method="gauss-jacobi", jacobi_beta=-bk,
                                  order=48, max_subdivisions=2)
            res = integrate(tail, s0, 1.0, spec)
            images[k] = self.center + pk * (smooth + complex(res.value))
        self._vertex_images = images
        return images

    def corner_params(self) -> list:
        """(prevertex angle, target vertex, turning/pi) in traversal order."""
        verts = self.target.vertices[:-1]
        return [
            (float(np.mod(self.prevertex_angles[k], 2.0 * np.pi)), complex(verts[k]),
             float(self.turning[k]))
            for k in range(verts.size)
        ]

    def residual_report(self) -> dict:
        verts = self.target.vertices[:-1]
        images = self.vertex_images()
        vertex_err = float(np.max(np.abs(images - verts)))
        side_target = np.abs(np.diff(np.append(verts, verts[0])))
        side_image = np.abs(np.diff(np.append(images, images[0])))
        rep = {
            "vertex_image_error": vertex_err,
            "side_length_rel_error": float(
                np.max(np.abs(side_image - side_target) / side_target)),
            "turning_sum_defect": float(abs(self.turning.sum() - 2.0)),
            "solver_residual": self.diagnostics.get("solver_residual"),
        }
        return rep

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "prevertices": [float(a) for a in self.prevertex_angles],
            "turning": [float(b) for b in self.turning],
            "scale": self.scale,
            "translation": _c2pair(self.center),
            "target": curve_to_json(self.target),
            "diagnostics": {k: v for k, v in self.diagnostics.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SchwarzChristoffelEngine":
        return cls(
            curve_from_json(obj["target"]),
            _pair2c(obj["translation"]),
            obj["prevertices"],
            obj["turning"],
            obj["scale"],
            diag=obj.get("diagnostics"),
        )


def _sc_side_speed(t, angles, turning):
    """|Phi'(e^{it})| with C = 1: product of (2 sin|t - theta_k|/2)^(-beta_k)."""
    t = np.asarray(t, dtype=float)
    d = 2.0 * np.abs(np.sin(0.5 * (t[:, None] - angles[None, :])))
    with np.errstate(divide="ignore"):
        logs = np.log(d)
    return np.exp(-(logs @ turning))


def _sc_side_integrals(angles, turning, order=48, want_vectors=False):
    """Side lengths (and optionally complex side vectors) for C = 1."""
    n = angles.size
    ext = np.append(angles, angles[0] + 2.0 * np.pi)
    lengths = np.empty(n)
    vectors = np.empty(n, dtype=complex)
    for k in range(n):
        a, b = ext[k], ext[k + 1]
        bl, br = turning[k], turning[(k + 1) % n]
        spec = QuadratureSpec(method="gauss-jacobi", jacobi_alpha=-bl,
                              jacobi_beta=-br, order=order, max_subdivisions=0)
        res = integrate(lambda t: _sc_side_speed(t, angles, turning), a, b, spec)
        lengths[k] = float(res.value)
        if want_vectors:
            resv = integrate(
                lambda t: _sc_side_speed(t, angles, turning)
                * np.exp(1j * _sc_arg_sum(t, angles, turning)),
                a, b, spec)
            vectors[k] = complex(resv.value)
    if want_vectors:
        return lengths, vectors
    return lengths


def _sc_arg_sum(t, angles, turning):
    """arg of Phi'(e^{it}) i e^{it} up to the constant arg C, continuous per side."""
    t = np.asarray(t, dtype=float)
    # log of (1 - e^{it}/z_k) = log(2 sin(d/2)) + i*(d - pi)/2 with d = t - theta_k
    d = t[:, None] - angles[None, :]
    phase = 0.5 * (np.mod(d, 2.0 * np.pi) - np.pi)
    return -(phase @ turning) + t + 0.5 * np.pi


def build_schwarz_christoffel(polygon: JordanCurve, w0,
                              solver: SolverSpec = None,
                              quad: QuadratureSpec = None) -> SchwarzChristoffelEngine:
    """Solve the side-length parameter problem, then recenter to w0.

    Three prevertices are pinned at pi/2, pi, 3pi/2 to remove the Mobius
    freedom; the remaining angles are softmax-gap parametrized so ordering
    is automatic.  The solved map is recentered by conjugating with a disk
    automorphism, which keeps the derivative in product form exactly, and
    the rotation is chosen to make Phi'(0) real positive.
    """
    if polygon.kind != "polyline":
        raise InvalidInputError("schwarz-christoffel needs a polygonal target")
    if not is_simple(polygon):
        raise InvalidInputError("polygon is not simple")
    if polygon.signed_area() <= 0:
        raise InvalidInputError("polygon must be positively oriented")
    w0 = complex(w0)
    if point_in_jordan(polygon, w0) != "inside":
        raise InvalidInputError("w0 must be strictly interior to the polygon")
    solver = solver or SolverSpec(max_iterations=120, residual_tol=1e-12)
    order = quad.order if quad is not None else 48
    verts = polygon.vertices[:-1]
    n = verts.size
    if n < 3:
        raise InvalidInputError("polygon needs at least 3 vertices")
    if n > 24:
        raise InvalidInputError("side-length parameter problem limited to 24 vertices")
    beta = _turning_exponents(verts)
    side_target = np.abs(np.diff(np.append(verts, verts[0])))
    target_ratio = side_target / side_target.sum()

    pinned = np.array([0.5 * np.pi, np.pi, 1.5 * np.pi])

    def angles_from(x):
        # free arc (-pi/2, pi/2) carries vertices 0..n-4; the n-2 gaps in it
        # (side n-1 wraps in, then sides 0..n-4) come from a pinned softmax
        logits = np.append(x, 0.0)
        g = np.exp(logits - logits.max())
        g = g / g.sum() * np.pi
        inner = -0.5 * np.pi + np.cumsum(g)[:-1]
        return np.concatenate([inner, pinned])

    def residual(x):
        ang = angles_from(x)
        lengths = _sc_side_integrals(ang, beta, order=order)
        return lengths / lengths.sum() - target_ratio

    if n == 3:
        angles = pinned.copy()
        solver_residual = 0.0
    else:
        # initial gaps proportional to the adjacent target side lengths
        init = np.array([side_target[-1]] + [side_target[k] for k in range(n - 3)])
        x0 = np.log(init[:-1] / init[-1])
        result = solve_least_squares(residual, x0, solver)
        if result.residual_norm > 1e-6:
            result = solve_least_squares(residual, np.zeros(n - 3), solver)
        if result.residual_norm > 1e-6:
            raise SolverDivergedError(
                f"parameter problem stalled at residual {result.residual_norm:.3g}")
        angles = angles_from(result.x)
        solver_residual = result.residual_norm

    _, vectors = _sc_side_integrals(angles, beta, order=2 * order, want_vectors=True)
    deltas = np.diff(np.append(verts, verts[0]))
    scale_c = np.sum(np.conj(vectors) * deltas) / np.sum(np.abs(vectors) ** 2)

    # provisional engine around the un-recentered map
    provisional = SchwarzChristoffelEngine(
        polygon, 0.0, angles, beta, 1.0, diag={"solver_residual": solver_residual})

    def phi_tilde(z):
        return scale_c * provisional._path_integral(np.atleast_1d(z), 20)

    # anchor: make the image of prevertex 0 coincide with vertex 0
    v0_img = scale_c * (provisional.vertex_images()[0])
    offset = verts[0] - v0_img

    def full_map(z):
        return offset + phi_tilde(z)

    def full_deriv(z):
        return scale_c * provisional._deriv_raw(np.atleast_1d(z))

    # Newton for the conformal preimage of w0
    z = np.array([0.0 + 0.0j])
    for _ in range(80):
        fz = full_map(z)[0]
        dz = full_deriv(z)[0]
        step = (fz - w0) / dz
        while abs(z[0] - step) > 0.999:
            step *= 0.5
        z[0] = z[0] - step
        if abs(step) < 1e-14:
            break
    alpha = z[0]
    if abs(full_map(np.array([alpha]))[0] - w0) > 1e-8 * (1 + abs(w0)):
        raise SolverDivergedError("failed to locate the conformal center")

    # conjugate by sigma(u) = (u + alpha)/(1 + conj(alpha) u) and a rotation;
    # since the turning angles sum to 2 the derivative keeps its product form
    d_alpha = full_deriv(np.array([alpha]))[0] * (1.0 - abs(alpha) ** 2)
    rot = -np.angle(d_alpha)
    new_prev = np.exp(-1j * rot) * (provisional.prevertices - alpha) / (
        1.0 - np.conj(alpha) * provisional.prevertices)
    new_prev = new_prev / np.abs(new_prev)
    new_angles = np.mod(np.angle(new_prev), 2.0 * np.pi)
    scale = abs(d_alpha)

    engine = SchwarzChristoffelEngine(
        polygon, w0, new_angles, beta, scale,
        diag={"solver_residual": solver_residual})
    rep = engine.residual_report()
    engine.diagnostics.update(rep)
    engine._boundary_residual = max(rep["vertex_image_error"], 1e-10)
    return engine


# -- geodesic zipper ----------------------------------------------------------


def _csqrt(z):
    return np.lib.scimath.sqrt(z)


def _fix_upper(z):
    z = np.asarray(z, dtype=complex)
    return np.where(z.imag < 0, -z, z)


def _pin_upper(z):
    # divisions by negative reals leave a -0.0 imaginary part, which would put
    # real-axis values on the wrong side of the sqrt branch cut; the unzip
    # chain lives in the closed upper half plane, so pin them above
    return np.where(z.imag == 0.0, z.real + 0.0j, z)


def _f0_complex(z, b):
    if not np.isfinite(b):
        return z
    return z / (1.0 - z / b)


def _f0_real(x, b):
    if not np.isfinite(b):
        return x
    out = np.empty_like(x)
    inf_mask = ~np.isfinite(x)
    out[inf_mask] = -b
    with np.errstate(divide="ignore", invalid="ignore"):
        val = x / (1.0 - x / b)
    pole = np.isclose(x, b, rtol=1e-15, atol=0.0) & ~inf_mask
    out[~inf_mask] = val[~inf_mask]
    out[pole] = np.inf
    return out


@dataclass
class _ZipStage:
    b: float
    c: float


class ZipperEngine(RiemannMapEngine):
    """Geodesic zipper map: composition of elementary slit maps.

    Built from ordered boundary samples; Phi is evaluated through the exact
    inverse chain (disk -> half-plane -> unzip each slit -> plane), and Phi'
    by the chain rule through the same stages.
    """

    variant = "zipper"

    def __init__(self, samples, center, stages, xi, disc_center, rotation,
                 sample_angles, low_resolution=False, residuals=None, target=None,
                 anchors=None):
        samples = np.asarray(samples, dtype=complex)
        if target is None:
            target = JordanCurve.polyline(samples)
        super().__init__(target, center)
        self.samples = samples
        # the first two zipped samples parametrize the initial map; they are
        # stored apart from the table entries so welding cannot disturb them
        if anchors is None:
            anchors = (samples[0], samples[1])
        self.anchors = (complex(anchors[0]), complex(anchors[1]))
        self.stages = list(stages)
        self.xi = float(xi)
        self.disc_center = complex(disc_center)
        self.rotation = float(rotation)
        self.sample_angles = np.asarray(sample_angles, dtype=float)
        self.low_resolution = bool(low_resolution)
        self.residuals = dict(residuals or {})
        order = np.argsort(self.sample_angles, kind="stable")
        ang = self.sample_angles[order]
        # rounding in the rotation shift can fuse neighbouring angles; keep
        # the first entry of any fused run so the table stays strictly ordered
        keep = np.ones(ang.size, dtype=bool)
        keep[1:] = np.diff(ang) > 0
        self._table = BoundaryTable(
            ang[keep], self.samples[order][keep],
            residual=self.residuals.get("table_residual"))
        self._boundary_residual = self.residuals.get("midpoint_residual", 1e-6)

    # -- inverse chain ---------------------------------------------------------

    def _chain_from_half_plane(self, zeta, with_derivative=False):
        """Unzip: point(s) in the closed upper half plane back to the domain.

        Each forward slit stage is normalized, v = sqrt(f0(u,b)^2 + c^2)/c,
        so the tip fork sits at -1/+1 and the state stays within double range
        on crowded boundaries; the inverses below undo that normalization.
        """
        u = _pin_upper(np.asarray(zeta, dtype=complex))
        dacc = np.ones_like(u)
        # closing map inverse: v = -(f0(z, xi))^2
        s = 1j * _csqrt(u)
        if with_derivative:
            small = np.abs(s) < 1e-300
            dacc = dacc * np.where(small, np.inf, -1.0 / (2.0 * np.where(small, 1.0, s)))
        u = _pin_upper(s / (1.0 + s / self.xi))
        if with_derivative:
            dacc = dacc * 1.0 / (1.0 + s / self.xi) ** 2
        # slit stages in reverse
        for st in reversed(self.stages):
            u1 = st.c * (_csqrt(u - 1.0) * _csqrt(u + 1.0))
            if with_derivative:
                safe = np.abs(u1) > 1e-300
                dacc = dacc * np.where(safe, st.c ** 2 * u / np.where(safe, u1, 1.0), np.inf)
            if np.isfinite(st.b):
                if with_derivative:
                    dacc = dacc * 1.0 / (1.0 + u1 / st.b) ** 2
                u = _pin_upper(u1 / (1.0 + u1 / st.b))
            else:
                u = _pin_upper(u1)
        # initial map inverse: w = i sqrt((z - p1)/(z - p0))
        p0, p1 = self.anchors
        z = (p1 + p0 * u * u) / (1.0 + u * u)
        if with_derivative:
            dacc = dacc * 2.0 * u * (p0 - p1) / (1.0 + u * u) ** 2
        return (z, dacc) if with_derivative else z

    def _disc_inverse(self, w, with_derivative=False):
        a = self.disc_center
        zeta = (a - np.conj(a) * w) / (1.0 - w)
        if with_derivative:
            return zeta, (a - np.conj(a)) / (1.0 - w) ** 2
        return zeta

    def evaluate(self, z):
        flat, scalar = self._check_disk(z)
        w = np.exp(1j * self.rotation) * flat
        zeta = self._disc_inverse(w)
        out = self._chain_from_half_plane(zeta)
        return complex(out[0]) if scalar else out

    def derivative(self, z):
        flat, scalar = self._check_disk(z)
        w = np.exp(1j * self.rotation) * flat
        zeta, d1 = self._disc_inverse(w, with_derivative=True)
        _, d2 = self._chain_from_half_plane(zeta, with_derivative=True)
        out = np.exp(1j * self.rotation) * d1 * d2
        return complex(out[0]) if scalar else out

    def _boundary_eval(self, angles):
        """Inverse chain evaluated exactly on |w| = 1 (angles before rotation)."""
        w = np.exp(1j * np.asarray(angles, dtype=float))
        at_one = np.abs(w - 1.0) < 1e-14
        w_safe = np.where(at_one, 0.0, w)
        zeta = self._disc_inverse(w_safe)
        # boundary points land on the real axis; drop the rounding imag part
        zeta = zeta.real.astype(complex)
        out = self._chain_from_half_plane(zeta)
        out[at_one] = self.samples[0]
        return out

    # -- contract surface ------------------------------------------------------

    def boundary_correspondence(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        out = self._table.interpolate(np.atleast_1d(t))
        return complex(out[0]) if scalar else out

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "samples": [_c2pair(s) for s in self.samples],
            "stages": [[None if not np.isfinite(st.b) else st.b, st.c] for st in self.stages],
            "xi": self.xi,
            "disc_center": _c2pair(self.disc_center),
            "rotation": self.rotation,
            "sample_angles": [float(a) for a in self.sample_angles],
            "center": _c2pair(self.center),
            "anchors": [_c2pair(self.anchors[0]), _c2pair(self.anchors[1])],
            "low_resolution": self.low_resolution,
            "residuals": self.residuals,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ZipperEngine":
        stages = [_ZipStage(np.inf if b is None else float(b), float(c))
                  for b, c in obj["stages"]]
        anchors = obj.get("anchors")
        return cls(
            [_pair2c(s) for s in obj["samples"]],
            _pair2c(obj["center"]),
            stages,
            obj["xi"],
            _pair2c(obj["disc_center"]),
            obj["rotation"],
            obj["sample_angles"],
            low_resolution=obj.get("low_resolution", False),
            residuals=obj.get("residuals"),
            anchors=None if anchors is None else [_pair2c(a) for a in anchors],
        )


def build_zipper(samples, w0, drop_indistinguishable: bool = False) -> ZipperEngine:
    """Build the geodesic zipper map through ordered boundary samples.

    Tracks both prime-end copies of every zipped sample (the slit base forks
    into two real positions), selects the domain-side copy at the end, and
    validates that the resulting boundary parameters are cyclically ordered.
    Numerically indistinguishable samples (images collapsing onto the real
    axis) raise build-degenerate with the sample index, or are dropped when
    ``drop_indistinguishable`` is set -- crowded boundaries like the
    oscillating candidate domain need the drop to proceed.
    """
    samples = np.asarray(samples, dtype=complex).ravel()
    if samples.size >= 2 and abs(samples[0] - samples[-1]) < 1e-15:
        samples = samples[:-1]
    n = samples.size
    if n < 3:
        raise InvalidInputError("need at least 3 boundary samples")
    target = JordanCurve.polyline(samples)
    if not is_simple(target):
        raise InvalidInputError("samples do not trace a simple closed curve")
    if target.signed_area() <= 0:
        raise InvalidInputError("samples must be positively oriented")
    w0 = complex(w0)
    if point_in_jordan(target, w0) != "inside":
        raise InvalidInputError("w0 must be strictly interior")

    dropped: list = []
    scale = float(np.max(np.abs(samples - samples.mean())))

    # forward pass: complex values for pending samples, two real copies for
    # zipped ones; the most recent tip sits at 0 and forks at the next stage.
    # dropping a sample mid-pass is safe because the stages built so far do
    # not depend on it.
    z0, z1 = samples[0], samples[1]
    rest = _fix_upper(1j * _csqrt((samples[2:] - z1) / (samples[2:] - z0)))
    w0_img = complex(_fix_upper(1j * _csqrt(np.array([(w0 - z1) / (w0 - z0)])))[0])
    rest_idx = list(range(2, n))

    kept = [0, 1]
    copies = np.full((n, 2), np.nan)
    copies[0] = np.inf
    copies[1] = 0.0
    last_tip = 1
    stages: list = []
    pos = 2  # next row of ``copies`` to fill

    while rest_idx:
        a = rest[0]
        cur = rest_idx[0]
        r = abs(a)
        # the relative-height cutoff must sit well above the fp noise floor
        # (~1e-14 after thousands of stages): a noise value sneaking past it
        # would seed a stage from garbage and poison every later sample.
        # features thinner than 1e-8 of local scale are conformally invisible
        # at double precision anyway.
        degenerate = (not np.isfinite(a)) or r < 1e-280 or a.imag <= 1e-8 * r
        reason = ("is numerically indistinguishable from the "
                  "already-zipped boundary")
        new_rest = None
        if not degenerate:
            # b, c in the units of this stage's input; the output is divided
            # by c so the fork lands at -1/+1 and magnitudes stay bounded
            b = r * (r / a.real) if abs(a.real) > 1e-300 else np.inf
            c = r * (r / a.imag)
            degenerate = not (np.isfinite(c) and c > 0.0)
        if not degenerate:
            # complex entries still pending
            q = _f0_complex(rest[1:], b) / c
            new_rest = _fix_upper(_csqrt(q * q + 1.0))
            if new_rest.size:
                # zipping into a deep protrusion looks fine sample by sample
                # but pinches the rest of the boundary below fp resolution.
                # the far end of the pending curve acts as a sentinel: refuse
                # any stage that crushes it onto the slit, since the curve
                # could then never close
                tail = new_rest[-1]
                if not (np.isfinite(tail) and tail.imag > 1e-10 * abs(tail)):
                    degenerate = True
                    reason = "would pinch the remaining boundary onto the slit"
        if degenerate:
            if drop_indistinguishable:
                dropped.append(cur)
                rest = rest[1:]
                rest_idx = rest_idx[1:]
                continue
            raise BuildDegenerateError(f"sample {cur} {reason}", index=cur)
        stages.append(_ZipStage(float(b), float(c)))
        rest = new_rest
        rest_idx = rest_idx[1:]
        q0 = _f0_complex(np.array([w0_img]), b) / c
        w0_img = complex(_fix_upper(_csqrt(q0 * q0 + 1.0))[0])
        # real copies of already-zipped samples, sign preserved
        done = copies[:pos]
        with np.errstate(over="ignore", invalid="ignore"):
            u_r = _f0_real(done, b) / c
            mapped = np.sign(u_r) * np.hypot(u_r, 1.0)
        mapped[~np.isfinite(u_r)] = np.sign(u_r[~np.isfinite(u_r)]) * np.inf
        copies[:pos] = mapped
        copies[last_tip] = (-1.0, 1.0)
        copies[pos] = 0.0
        last_tip = pos
        kept.append(cur)
        pos += 1

    if len(kept) < 3:
        raise BuildDegenerateError("too few distinguishable samples", index=0)
    m = len(kept)
    copies = copies[:m]
    pend = samples[kept]
    if dropped and not is_simple(JordanCurve.polyline(pend)):
        raise BuildDegenerateError(
            "dropping indistinguishable samples left a self-intersecting curve",
            index=dropped[0])

    # closing map: v = -(f0(u, xi))^2 with xi the tracked position of sample 0
    xi = float(copies[0, 0]) if np.isfinite(copies[0, 0]) else float(copies[0, 1])
    if not np.isfinite(xi) or xi <= 1e-14 * scale:
        raise BuildDegenerateError("closing parameter collapsed", index=0)
    u_r = _f0_real(copies, xi)
    closed = np.where(np.isfinite(u_r), -u_r * u_r, -np.inf)
    w0_close = -(_f0_complex(np.array([complex(w0_img)]), xi)[0]) ** 2
    if w0_close.imag <= 0:
        raise BuildDegenerateError("interior point left the half plane", index=0)

    # the domain boundary covers R minus the open interval (0, xi); copies
    # landing inside it sit on the exterior side of the closing arc
    gap_tol = 1e-13 * (1.0 + xi)
    in_gap = (copies > gap_tol) & (copies < xi - gap_tol)

    def disc_map(v):
        v = np.asarray(v, dtype=complex)
        finite = np.isfinite(v)
        vs = np.where(finite, v, 0.0)
        w = np.where(finite, (vs - w0_close) / (vs - np.conj(w0_close)), 1.0)
        mod = np.abs(w)
        return np.where(mod > 0, w / mod, w)

    angles_raw = np.mod(np.angle(disc_map(closed)), 2.0 * np.pi)
    angles_raw[0, :] = 0.0  # sample 0 closes at w = 1 exactly

    chosen = np.where(in_gap[:, 0], 1, 0)
    ambiguous = np.nonzero(in_gap[:, 0] == in_gap[:, 1])[0]

    placeholder = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
    engine = ZipperEngine(pend, w0, stages, xi, w0_close, 0.0,
                          placeholder, target=JordanCurve.polyline(pend))
    if ambiguous.size:
        # fall back to evaluating the inverse chain at both candidate angles
        for j in ambiguous:
            if j == 0:
                chosen[j] = 0
                continue
            cand = engine._boundary_eval(angles_raw[j])
            errs = np.abs(cand - pend[j])
            if min(errs) > 1e-3 * scale and not drop_indistinguishable:
                raise BuildDegenerateError(
                    f"could not identify the boundary image of sample {kept[j]}",
                    index=kept[j])
            chosen[j] = int(np.argmin(errs))
    theta = angles_raw[np.arange(m), chosen]

    # cyclic order check: positive orientation must survive the chain.  later
    # stages can fuse the copies of crowded samples in angle space; with
    # dropping enabled those prime ends are welded into one table entry, while
    # a genuine inversion still raises.
    rel = np.mod(theta - theta[0], 2.0 * np.pi)
    welded: list = []
    if np.any(np.diff(rel) <= 0):
        if not drop_indistinguishable:
            bad = int(np.argmin(np.diff(rel))) + 1
            raise BuildDegenerateError(
                f"boundary parameters are not cyclically ordered near sample {kept[bad]}",
                index=kept[bad])
        keep_rows = [0]
        backslide = 0.0
        for i in range(1, m):
            if rel[i] > rel[keep_rows[-1]]:
                keep_rows.append(i)
            else:
                backslide = max(backslide, rel[keep_rows[-1]] - rel[i])
                welded.append(kept[i])
        if backslide > 1e-6:
            raise BuildDegenerateError(
                "boundary parameters are not cyclically ordered "
                f"(inversion of {backslide:.2e} rad)", index=welded[0])
        if len(keep_rows) < 3:
            raise BuildDegenerateError("too few distinguishable samples", index=0)
        rows = np.asarray(keep_rows)
        theta = theta[rows]
        rel = rel[rows]
        pend = pend[rows]

    # rotation making Phi'(0) real positive
    d0 = engine.derivative(np.array([0.0 + 0.0j]))[0]
    rotation = -float(np.angle(d0))
    sample_angles = np.mod(theta - rotation, 2.0 * np.pi)

    # residuals: table consistency at the sample angles, geodesic deviation
    # from the polyline at the midpoints
    bnd = engine._boundary_eval(theta)
    table_residual = float(np.max(np.abs(bnd - pend)))
    gaps = np.diff(np.append(rel, 2.0 * np.pi))
    mid_theta = theta[0] + rel + 0.5 * gaps
    mid_pts = engine._boundary_eval(mid_theta)
    seg_a = pend
    seg_b = np.roll(pend, -1)
    seg = seg_b - seg_a
    sproj = np.clip(
        ((mid_pts - seg_a).real * seg.real + (mid_pts - seg_a).imag * seg.imag)
        / (seg.real**2 + seg.imag**2), 0.0, 1.0)
    midpoint_residual = float(np.max(np.abs(mid_pts - (seg_a + sproj * seg))))

    residuals = {
        "table_residual": table_residual,
        "midpoint_residual": midpoint_residual,
        "dropped_samples": [int(d) for d in dropped],
        "welded_samples": [int(d) for d in welded],
    }
    return ZipperEngine(
        pend, w0, stages, xi, w0_close, rotation, sample_angles,
        low_resolution=pend.size < 64, residuals=residuals,
        target=JordanCurve.polyline(pend), anchors=(z0, z1))


# -- module-level delegators and persistence ------------------------------------


def evaluate(engine: RiemannMapEngine, z):
    return engine.evaluate(z)


def derivative(engine: RiemannMapEngine, z):
    return engine.derivative(z)


def boundary_correspondence(engine: RiemannMapEngine, t):
    return engine.boundary_correspondence(t)


def invert_boundary(engine: RiemannMapEngine, p) -> float:
    return engine.invert_boundary(p)


_DECODERS = {
    "closed-form": ClosedFormEngine.from_json,
    "schwarz-christoffel": SchwarzChristoffelEngine.from_json,
    "zipper": ZipperEngine.from_json,
}


def engine_from_json(obj: dict) -> RiemannMapEngine:
    variant = obj.get("variant")
    if variant not in _DECODERS:
        raise InvalidInputError(f"unknown engine variant {variant!r}")
    return _DECODERS[variant](obj)


def save_engine(engine: RiemannMapEngine, path) -> None:
    payload = json.dumps(engine.to_json(), indent=2)
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(payload + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_engine(path) -> RiemannMapEngine:
    with open(path) as fh:
        return engine_from_json(json.load(fh))
