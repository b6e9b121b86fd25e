"""Boundary-limit diagnostics for Riemann map engines.

Everything here treats an engine as a black box exposing ``evaluate``,
``derivative`` and ``boundary_correspondence``.  The measurements are the
radial means of |Phi'|, the L1 Cauchy defects between radii, lengths of the
image circles Phi(re^{it}), and partition ladders of boundary arcs; together
they decide, window by window, whether a boundary arc behaves like a
rectifiable curve.  All verdicts carry their thresholds with them: nothing
here compares against a bare constant without reporting it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .geometry import PartitionLadder, arc_length_estimate

TWO_PI = 2.0 * math.pi

# engines are only trusted strictly inside the disk; grids stop short of 1
R_CAP = 1.0 - 1e-6


@dataclass(frozen=True)
class ArcWindow:
    """Angular window [a, b] on the unit circle, at most one full turn."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise InvalidInputError("window endpoints must be finite")
        if not self.b > self.a:
            raise InvalidInputError("window needs a < b")
        if self.b - self.a > TWO_PI + 1e-12:
            raise InvalidInputError("window exceeds a full turn")

    @classmethod
    def full(cls) -> "ArcWindow":
        return cls(0.0, TWO_PI)

    @classmethod
    def coerce(cls, window) -> "ArcWindow":
        if window is None:
            return cls.full()
        if isinstance(window, ArcWindow):
            return window
        a, b = window
        return cls(float(a), float(b))

    @property
    def span(self) -> float:
        return self.b - self.a

    def as_tuple(self) -> tuple:
        return (self.a, self.b)


@dataclass(frozen=True)
class QuadSpec:
    """Composite Gauss-Legendre rule for integrals over an angle window.

    Panels are cut at any engine-declared singular angles (polygon
    prevertices) and then refined until each spans at most
    ``points_per_scale`` times the boundary distance 1-r, so the rule
    tracks features that sharpen as r approaches 1.  ``slack`` is the
    relative error the rule is trusted to; monotonicity verdicts use it.
    """

    order: int = 12
    base_panels: int = 8
    points_per_scale: float = 8.0
    max_panels: int = 8192
    slack: float = 3e-4

    def __post_init__(self):
        if self.order < 2 or self.base_panels < 1 or self.max_panels < self.base_panels:
            raise InvalidInputError("bad quadrature spec")


@dataclass(frozen=True)
class StolzSpec:
    """Cone geometry for non-tangential sampling at a boundary angle."""

    opening: float = math.pi / 2.0
    depths: tuple = tuple(2.0 ** -k for k in range(3, 15))

    def __post_init__(self):
        if not 0.0 < self.opening < math.pi:
            raise InvalidInputError("cone opening must be in (0, pi)")
        d = np.asarray(self.depths, dtype=float)
        if d.size < 3 or np.any(d <= 0) or np.any(np.diff(d) >= 0) or d[0] >= 1.0:
            raise InvalidInputError("depths must decrease in (0, 1), at least 3 of them")


def default_r_grid(levels: int = 14) -> np.ndarray:
    """Radii 1 - 2^-k, k = 1..levels, clipped inside the trusted disk."""
    if levels < 1:
        raise InvalidInputError("need at least one grid level")
    r = 1.0 - 2.0 ** -np.arange(1, levels + 1, dtype=float)
    return np.unique(np.minimum(r, R_CAP))


def _coerce_grid(r_grid) -> np.ndarray:
    if r_grid is None:
        return default_r_grid()
    r = np.asarray(r_grid, dtype=float).ravel()
    if r.size < 1 or np.any(r <= 0) or np.any(r >= 1) or np.any(np.diff(r) <= 0):
        raise InvalidInputError("r-grid must increase strictly inside (0, 1)")
    return r


def _singular_angles(engine) -> np.ndarray:
    ang = getattr(engine, "prevertex_angles", None)
    if ang is None:
        return np.empty(0)
    return np.mod(np.asarray(ang, dtype=float), TWO_PI)


def _panel_edges(window: ArcWindow, scale: float, quad: QuadSpec, align) -> np.ndarray:
    """Panel edges over the window: forced cuts at aligned angles, then
    uniform refinement down to the requested resolution scale."""
    cuts = [window.a, window.b]
    for raw in np.asarray(align, dtype=float):
        for shift in (-TWO_PI, 0.0, TWO_PI):
            t = raw + shift
            if window.a + 1e-12 < t < window.b - 1e-12:
                cuts.append(t)
    cuts = np.unique(cuts)
    width = max(scale * quad.points_per_scale,
                window.span / quad.max_panels,
                1e-12)
    edges = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(int(math.ceil((b - a) / width)), max(1, quad.base_panels // len(cuts)))
        edges.append(np.linspace(a, b, n + 1)[:-1])
    return np.append(np.concatenate(edges), window.b)


def _window_integral(fn, window: ArcWindow, r: float, quad: QuadSpec, align) -> float:
    """integral of fn(t) dt over the window, fn vectorized and nonnegative."""
    nodes, weights = np.polynomial.legendre.leggauss(quad.order)
    edges = _panel_edges(window, 1.0 - r, quad, align)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    t = (half[:, None] * nodes[None, :] + (0.5 * (a + b))[:, None]).ravel()
    f = np.asarray(fn(t), dtype=float).reshape(half.size, quad.order)
    return float(np.sum(half * (f @ weights)))


# -- radial means and defects ---------------------------------------------------


def radial_mean(engine, window, r: float, quad: QuadSpec = None) -> float:
    """integral over the window of |Phi'(re^{it})| dt (not normalized)."""
    w = ArcWindow.coerce(window)
    if not 0.0 < r < 1.0:
        raise InvalidInputError("radius must lie in (0, 1)")
    quad = quad or QuadSpec()
    ring = lambda t: np.abs(engine.derivative(r * np.exp(1j * t)))
    return _window_integral(ring, w, r, quad, _singular_angles(engine))


def hp_mean(engine, p: float, r: float, window=None, quad: QuadSpec = None) -> float:
    """Circle mean (1/2pi) integral of |Phi'(re^{it})|^p over the window."""
    w = ArcWindow.coerce(window)
    if not 0.0 < r < 1.0:
        raise InvalidInputError("radius must lie in (0, 1)")
    if p <= 0:
        raise InvalidInputError("exponent must be positive")
    quad = quad or QuadSpec()
    ring = lambda t: np.abs(engine.derivative(r * np.exp(1j * t))) ** p
    return _window_integral(ring, w, r, quad, _singular_angles(engine)) / TWO_PI


def cauchy_defect(engine, window, r1: float, r2: float, quad: QuadSpec = None) -> float:
    """integral over the window of |Phi'(r1 e^{it}) - Phi'(r2 e^{it})| dt.

    Small defects between all deep radius pairs are the operative Cauchy
    criterion for L1 convergence of the derivative toward the boundary.
    """
    w = ArcWindow.coerce(window)
    for r in (r1, r2):
        if not 0.0 < r < 1.0:
            raise InvalidInputError("radii must lie in (0, 1)")
    if r1 == r2:
        return 0.0
    quad = quad or QuadSpec()

    def diff(t):
        ring = np.exp(1j * t)
        return np.abs(engine.derivative(r1 * ring) - engine.derivative(r2 * ring))

    # resolve at the finer of the two radii
    return _window_integral(diff, w, max(r1, r2), quad, _singular_angles(engine))


@dataclass
class RadialProfile:
    """radial_mean sampled over an increasing r-grid."""

    window: ArcWindow
    r_values: np.ndarray
    values: np.ndarray
    quantity: str = "radial_mean"
    tolerance: float = 3e-4

    def tail(self, fraction: float = 0.33):
        k = max(3, int(round(self.r_values.size * fraction)))
        k = min(k, self.r_values.size)
        return self.values[-k:]


def radial_profile(engine, window, r_grid=None, quad: QuadSpec = None) -> RadialProfile:
    w = ArcWindow.coerce(window)
    grid = _coerce_grid(r_grid)
    quad = quad or QuadSpec()
    vals = np.array([radial_mean(engine, w, r, quad) for r in grid])
    return RadialProfile(w, grid, vals, tolerance=quad.slack)


@dataclass
class DefectGrid:
    """Cauchy defects for consecutive radius pairs, with a tail verdict.

    ``cauchy`` is true when the defect tail is monotonically decreasing and
    ends below ``threshold`` (a fixed fraction of the deepest radial mean):
    the grid then behaves like a Cauchy sequence in L1 over the window.
    """

    window: ArcWindow
    r_pairs: list
    defects: np.ndarray
    threshold: float
    cauchy: bool
    tolerance: float = 3e-4

    @property
    def final_defect(self) -> float:
        return float(self.defects[-1])


def l1_limit_profile(engine, window, r_grid=None, quad: QuadSpec = None,
                     threshold_fraction: float = 1e-3) -> DefectGrid:
    w = ArcWindow.coerce(window)
    grid = _coerce_grid(r_grid)
    if grid.size < 3:
        raise InvalidInputError("defect profile needs at least 3 radii")
    quad = quad or QuadSpec()
    pairs = list(zip(grid[:-1], grid[1:]))
    defs = np.array([cauchy_defect(engine, w, r1, r2, quad) for r1, r2 in pairs])
    threshold = threshold_fraction * radial_mean(engine, w, grid[-1], quad)
    k = max(3, defs.size // 2)
    tail = defs[-k:]
    cauchy = bool(np.all(np.diff(tail) <= quad.slack * (1.0 + tail[:-1]))
                  and tail[-1] < threshold)
    return DefectGrid(w, pairs, defs, threshold, cauchy, tolerance=quad.slack)


# -- image curve lengths ----------------------------------------------------------


@dataclass
class ImageLength:
    """Length of the circle image Phi(re^{it}) over a window.

    Chord sums under nested dyadic refinement until the relative change
    drops below ``rel_tol`` twice in a row; ``converged`` is false when the
    refinement cap was reached first.  ``cross_gap`` is the discrepancy
    against the independent quadrature r * integral |Phi'| dt, a structural
    identity both computations must satisfy.
    """

    value: float
    r: float
    window: ArcWindow
    converged: bool
    levels: int
    rel_tol: float
    cross_gap: float = float("nan")

    def __float__(self):
        return self.value


def image_curve_length(engine, window, r: float, samples: int = None,
                       rel_tol: float = 1e-6, max_level: int = 20,
                       quad: QuadSpec = None, cross_check: bool = True) -> ImageLength:
    w = ArcWindow.coerce(window)
    if not 0.0 < r < 1.0:
        raise InvalidInputError("radius must lie in (0, 1)")
    if samples is not None and samples < 2:
        raise InvalidInputError("need at least 2 samples")

    # start near the resolution the ring actually has at this depth
    if samples is None:
        guess = int(math.ceil(math.log2(max(w.span / (1.0 - r), 8.0)))) - 2
        level = min(max(6, guess), max_level)
    else:
        level = min(max(2, int(math.ceil(math.log2(samples)))), max_level)

    t = np.linspace(w.a, w.b, 2 ** level + 1)
    pts = engine.ring_points(r, t)
    s = float(np.sum(np.abs(np.diff(pts))))
    prev = None
    small = 0
    converged = False
    while level < max_level:
        level += 1
        t = np.linspace(w.a, w.b, 2 ** level + 1)
        pts = engine.ring_points(r, t)
        s_new = float(np.sum(np.abs(np.diff(pts))))
        small = small + 1 if abs(s_new - s) <= rel_tol * max(s_new, 1e-300) else 0
        prev, s = s, s_new
        if small >= 2:
            converged = True
            break

    # the ring is smooth at any interior radius, so chord sums short-fall
    # like h^2; one Richardson step removes that term
    value = s if prev is None else s + (s - prev) / 3.0
    gap = float("nan")
    if cross_check:
        gap = abs(value - r * radial_mean(engine, w, r, quad or QuadSpec()))
    return ImageLength(value, r, w, converged, level, rel_tol, cross_gap=gap)


# -- boundary ladders -------------------------------------------------------------


def boundary_arc_length(engine, window, schedule=None, divergence_budget=None,
                        rel_tol: float = 1e-6) -> PartitionLadder:
    """Partition ladder of the boundary trace over an angle window.

    Chord sums of boundary_correspondence under nested dyadic refinement;
    verdict semantics are shared with the geometry ladder: "rectifiable"
    with a length once refinements stall relative to ``rel_tol``,
    "divergent-at-budget" when the sums cross the budget or are still
    climbing when the schedule runs out.
    """
    w = ArcWindow.coerce(window)
    return arc_length_estimate(engine.boundary_correspondence, w.as_tuple(),
                               schedule=schedule,
                               divergence_budget=divergence_budget,
                               rel_tol=rel_tol)


@dataclass
class LiminfReport:
    """Boundary ladder compared against the floor of deep image lengths.

    The boundary trace cannot be longer than the image lengths settle to as
    r -> 1; since every finite radius undershoots the limit, the floor is the
    tail extrapolated once (Aitken), which is exact for geometric approach.
    ``holds`` records ladder <= floor up to an explicit tolerance, ``margin``
    the signed slack (positive = strict)."""

    window: ArcWindow
    ladder: PartitionLadder
    r_values: np.ndarray
    image_values: np.ndarray
    min_tail: float
    limit_estimate: float
    tolerance: float
    holds: bool
    margin: float


def liminf_check(engine, window, r_grid=None, schedule=None,
                 quad: QuadSpec = None, image_rel_tol: float = 1e-5) -> LiminfReport:
    w = ArcWindow.coerce(window)
    grid = _coerce_grid(r_grid)
    ladder = boundary_arc_length(engine, w, schedule=schedule)
    lengths = np.array([
        float(image_curve_length(engine, w, r, rel_tol=image_rel_tol,
                                 quad=quad, cross_check=False))
        for r in grid
    ])
    k = min(max(3, grid.size // 3), grid.size)
    min_tail = float(np.min(lengths[-k:]))
    limit = float(lengths[-1])
    if lengths.size >= 3:
        d1 = lengths[-1] - lengths[-2]
        d2 = d1 - (lengths[-2] - lengths[-3])
        # Aitken only when the second difference stands above the chord noise
        if abs(d2) > 5.0 * image_rel_tol * max(1.0, abs(lengths[-1])):
            limit = float(lengths[-1] - d1 * d1 / d2)
    ladder_top = ladder.final_sum if ladder.length is None else ladder.length
    tol = 1e-4 * (1.0 + limit)
    margin = limit + tol - ladder_top
    return LiminfReport(w, ladder, grid, lengths, min_tail, limit, tol,
                        holds=bool(margin >= 0.0), margin=float(margin))


# -- non-tangential limits ---------------------------------------------------------


@dataclass
class NTLimitReport:
    angle: float
    estimate: complex
    converged: bool
    rays: dict


def estimate_nontangential_limit(engine, t: float, stolz: StolzSpec = None) -> NTLimitReport:
    """Phi' along three rays of a Stolz cone at e^{it}.

    The estimate is the deepest central-ray value; the flag demands that all
    three rays settled and agree to 1e-3 relative, which fails honestly at
    derivative blow-up points (polygon corners) where the rays separate.
    """
    stolz = stolz or StolzSpec()
    offsets = {"central": 0.0,
               "edge_minus": -0.5 * stolz.opening,
               "edge_plus": 0.5 * stolz.opening}
    d = np.asarray(stolz.depths, dtype=float)
    rays = {}
    for name, phi in offsets.items():
        z = np.exp(1j * t) * (1.0 - d * np.exp(1j * phi))
        z = np.where(np.abs(z) >= 1.0, z / (np.abs(z) + 1e-12) * (1 - 1e-12), z)
        rays[name] = engine.derivative(z)

    def tail(vals):
        d1, d2 = vals[-2] - vals[-3], vals[-1] - vals[-2]
        denom = d2 - d1
        if abs(denom) > 0.25 * (abs(d1) + abs(d2)):
            return vals[-1] - d2 * d2 / denom
        return vals[-1]

    last = {name: tail(vals) for name, vals in rays.items()}
    scale = max(abs(v) for v in last.values()) + 1e-300
    settled = all(
        abs(vals[-1] - vals[-2]) <= 1e-3 * (abs(vals[-1]) + 1e-300)
        for vals in rays.values()
    )
    agree = max(abs(last[a] - last[b])
                for a in last for b in last) <= 1e-3 * scale
    return NTLimitReport(float(t), complex(last["central"]),
                         bool(settled and agree), rays)


# -- monotonicity -------------------------------------------------------------------


@dataclass
class MonotonicityReport:
    window: ArcWindow
    r_values: np.ndarray
    values: np.ndarray
    verdict: str
    violations: list
    slack: float


def monotonicity_scan(engine, window, r_grid=None, quad: QuadSpec = None) -> MonotonicityReport:
    """Scan radial_mean over the grid and record every certified decrease.

    Decreases within quadrature slack are not violations; the verdict
    string is "monotone-nondecreasing" exactly when the list is empty.
    """
    w = ArcWindow.coerce(window)
    grid = _coerce_grid(r_grid)
    if grid.size < 3:
        raise InvalidInputError("monotonicity scan needs at least 3 radii")
    quad = quad or QuadSpec()
    vals = np.array([radial_mean(engine, w, r, quad) for r in grid])
    violations = []
    for i in range(vals.size - 1):
        drop = vals[i] - vals[i + 1]
        if drop > quad.slack * (1.0 + abs(vals[i])):
            violations.append((float(grid[i]), float(grid[i + 1]),
                               float(vals[i]), float(vals[i + 1])))
    verdict = "monotone-nondecreasing" if not violations else "violations"
    return MonotonicityReport(w, grid, vals, verdict, violations, quad.slack)


# -- the equivalence suite -----------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceBudgets:
    """Divergence thresholds for the three-way rectifiability test.

    ``ladder`` caps the boundary partition sums (None = ten curve diameters,
    the geometry default); ``growth`` is the ratio last/first of means over
    the r-grid beyond which the window counts as unbounded; ``tail_range``
    is the relative spread under which the grid tail counts as settled.
    """

    ladder: float = None
    growth: float = 10.0
    tail_range: float = 1e-2


@dataclass
class EquivalenceReport:
    window: ArcWindow
    verdicts: dict
    consistent: bool
    budgets: EquivalenceBudgets
    ladder: PartitionLadder
    r_values: np.ndarray
    radial_values: np.ndarray
    image_values: np.ndarray
    flags: dict

    @property
    def all_finite(self) -> bool:
        return all(v == "finite" for v in self.verdicts.values())

    @property
    def all_divergent(self) -> bool:
        return all(v == "divergent" for v in self.verdicts.values())


def _grid_verdict(values: np.ndarray, budgets: EquivalenceBudgets) -> str:
    tail = values[-max(3, values.size // 3):]
    spread = (np.max(tail) - np.min(tail)) / max(np.max(np.abs(tail)), 1e-300)
    if spread < budgets.tail_range:
        return "finite"
    if values[-1] / max(values[0], 1e-300) > budgets.growth:
        return "divergent"
    return "inconclusive"


def _ladder_verdict(ladder: PartitionLadder, budgets: EquivalenceBudgets) -> str:
    if ladder.converged:
        return "finite"
    if ladder.budget_exceeded:
        return "divergent"
    # schedule ran out while the sums were still climbing; decisive only if
    # the climb itself cleared the growth budget, otherwise the probe was
    # simply too shallow and saying so is the honest answer
    sums = ladder.sums
    if sums[-1] > sums[-2] and sums[-1] / max(sums[0], 1e-300) > budgets.growth:
        return "divergent"
    return "inconclusive"


def equivalence_suite(engine, window, budgets: EquivalenceBudgets = None,
                      r_grid=None, schedule=None, quad: QuadSpec = None,
                      image_rel_tol: float = 1e-3) -> EquivalenceReport:
    """Three independent boundedness verdicts for one boundary window.

    (1) partition ladder of the boundary trace, (2) radial means of |Phi'|
    over an r-grid approaching 1, (3) lengths of the image circles over the
    same grid.  For an exact map all three are finite or all three are
    infinite together; the report records each verdict separately plus a
    consistency flag, and an honest "inconclusive" when a quantity neither
    settles nor crosses its budget.
    """
    w = ArcWindow.coerce(window)
    budgets = budgets or EquivalenceBudgets()
    grid = _coerce_grid(r_grid)
    quad = quad or QuadSpec()

    ladder = boundary_arc_length(engine, w, schedule=schedule,
                                 divergence_budget=budgets.ladder)
    rad = np.array([radial_mean(engine, w, r, quad) for r in grid])
    img_results = [image_curve_length(engine, w, r, rel_tol=image_rel_tol,
                                      quad=quad, cross_check=False)
                   for r in grid]
    img = np.array([res.value for res in img_results])

    verdicts = {
        "boundary_arc_length": _ladder_verdict(ladder, budgets),
        "radial_mean": _grid_verdict(rad, budgets),
        "image_curve_length": _grid_verdict(img, budgets),
    }
    distinct = set(verdicts.values())
    consistent = len(distinct) == 1 and "inconclusive" not in distinct
    flags = {
        "image_lengths_converged": all(res.converged for res in img_results),
        "ladder_budget_exceeded": ladder.budget_exceeded,
    }
    return EquivalenceReport(w, verdicts, bool(consistent), budgets, ladder,
                             grid, rad, img, flags)
