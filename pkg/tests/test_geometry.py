import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from confmap import InvalidInputError
from confmap.geometry import (
    JordanCurve,
    SubArc,
    arc_length_estimate,
    builtin_curve,
    candidate_domain_boundary,
    candidate_top_edge,
    collar_extend,
    curve_from_json,
    curve_to_json,
    is_simple,
    load_curve_file,
    load_curve_text,
    partition_sum,
    point_in_jordan,
    polyline_length,
    random_simple_polygon,
    save_curve_text,
)


def test_square_basics(square_curve):
    assert square_curve.kind == "polyline"
    assert square_curve.period == pytest.approx(4.0)
    assert square_curve.signed_area() == pytest.approx(1.0)
    assert square_curve.orientation == "positive"
    assert square_curve.diameter() == pytest.approx(math.sqrt(2.0))


def test_polyline_parameter_interpolates_edges(square_curve):
    # parameter value = vertex index plus fraction along the edge
    assert square_curve.point(0.5) == pytest.approx(0.5 + 0.0j)
    assert square_curve.point(1.25) == pytest.approx(1.0 + 0.25j)
    # wraps periodically
    assert square_curve.point(4.5) == pytest.approx(square_curve.point(0.5))


def test_analytic_ellipse_samples():
    ell = builtin_curve("ellipse", a=2.0, b=1.0)
    assert ell.kind == "analytic"
    pts = ell.sample(8)
    assert pts.shape == (8,)
    assert pts[0] == pytest.approx(2.0 + 0.0j)
    assert ell.point(math.pi / 2) == pytest.approx(1j)


def test_unit_circle_partition_sums_match_inscribed_polygon():
    circ = builtin_curve("ellipse", a=1.0, b=1.0)
    for n in (8, 64, 256):
        t = np.linspace(0.0, 2.0 * math.pi, n + 1)
        got = partition_sum(circ.point, t)
        assert got == pytest.approx(2 * n * math.sin(math.pi / n), rel=1e-12)


def test_partition_sum_rejects_unordered():
    circ = builtin_curve("ellipse", a=1.0, b=1.0)
    with pytest.raises(InvalidInputError):
        partition_sum(circ.point, [0.0, 0.5, 0.5])


def test_polyline_length_simple():
    assert polyline_length([0j, 3.0 + 0j, 3.0 + 4.0j]) == pytest.approx(7.0)
    with pytest.raises(InvalidInputError):
        polyline_length([1.0 + 1.0j])


def test_arc_length_estimate_converges_on_circle():
    circ = builtin_curve("ellipse", a=1.0, b=1.0)
    ladder = arc_length_estimate(circ.point, (0.0, 2.0 * math.pi))
    assert ladder.converged
    assert ladder.verdict == "rectifiable"
    assert ladder.length == pytest.approx(2.0 * math.pi, rel=1e-6)
    # dyadic refinement: counts double, sums increase
    counts = ladder.segment_counts
    assert all(b == 2 * a for a, b in zip(counts, counts[1:]))
    sums = ladder.sums
    assert all(b >= a - 1e-12 for a, b in zip(sums, sums[1:]))


def test_arc_length_estimate_budget_triggers():
    # a spiral-ish curve whose inscribed sums blow past a tiny budget
    fn = candidate_top_edge()
    ladder = arc_length_estimate(fn, (1e-8, 1.0), divergence_budget=2.0)
    assert ladder.budget_exceeded
    assert ladder.verdict == "divergent-at-budget"
    assert ladder.length is None


def test_candidate_edge_sums_grow_logarithmically():
    fn = candidate_top_edge()
    ladder = arc_length_estimate(fn, (1e-8, 1.0), schedule=list(range(2, 18)))
    sums = np.asarray(ladder.sums)
    assert not ladder.converged
    lnN = np.log(ladder.segment_counts)
    slope, _ = np.polyfit(lnN, sums, 1)
    assert 0.2 < slope < 0.45


def test_candidate_domain_boundary_shape(candidate_curve):
    verts = candidate_curve.as_polyline_vertices()
    assert verts.size == 5110
    assert candidate_curve.orientation == "positive"
    # truncation foot closes the graph at y = 0 exactly
    foot = int(np.argmax(verts.imag == 0.0))
    assert verts[foot] == pytest.approx(1e-3 + 0j)
    assert point_in_jordan(candidate_curve, -2.0j) == "inside"


def test_candidate_domain_rejects_bad_eps():
    with pytest.raises(InvalidInputError):
        candidate_domain_boundary(eps=0.5)


def test_coarse_candidate_domain_is_simple():
    coarse = candidate_domain_boundary(eps=0.05)
    assert is_simple(coarse)


def test_is_simple_detects_crossing():
    bowtie = [0j, 1.0 + 1.0j, 1.0 + 0j, 0.0 + 1.0j]
    assert not is_simple(np.asarray(bowtie, dtype=complex))
    assert is_simple(builtin_curve("square"))


def test_point_in_jordan_classifies(square_curve):
    assert point_in_jordan(square_curve, 0.5 + 0.5j) == "inside"
    assert point_in_jordan(square_curve, 2.0 + 0.5j) == "outside"
    assert point_in_jordan(square_curve, 0.5 + 0.0j) == "boundary"


def test_interior_point_prefers_centroid():
    assert builtin_curve("ellipse", a=1.0, b=0.6).interior_point() == pytest.approx(0j)
    assert builtin_curve("square").interior_point() == pytest.approx(0.5 + 0.5j)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=30, deadline=None)
def test_random_polygons_are_simple_with_interior(seed):
    poly = random_simple_polygon(np.random.default_rng(seed))
    assert is_simple(poly)
    assert point_in_jordan(poly, poly.interior_point()) == "inside"


def test_collar_extension_sweep(rng):
    # the workhorse guarantee: for seeded polygons the widened sub-arc closes
    # into a simple curve that stays inside the original domain
    failures = []
    for k in range(100):
        poly = random_simple_polygon(rng)
        period = poly.period
        sub = SubArc(0.1 * period, 0.4 * period)
        ext = collar_extend(poly, sub, margin=0.05 * period)
        verts = ext.curve.as_polyline_vertices()
        ok = is_simple(ext.curve)
        ok = ok and all(point_in_jordan(poly, z) != "outside" for z in verts)
        probes = poly.point(np.linspace(sub.t_start, sub.t_end, 17))
        ok = ok and all(point_in_jordan(ext.curve, z) == "boundary" for z in probes)
        if not ok:
            failures.append(k)
    assert failures == []


def test_collar_extension_fields(square_curve):
    sub = SubArc(0.25, 1.75)
    ext = collar_extend(square_curve, sub, margin=0.2)
    # the junction points sit strictly inside, a clearance-scaled step off
    # the widened anchors
    for z, anchor in ((ext.z0, 0.25 - 0.1), (ext.z1, 1.75 + 0.1)):
        assert point_in_jordan(square_curve, z) == "inside"
        assert abs(z - square_curve.point(anchor)) < 0.1
    assert min(ext.eta) > 0
    assert is_simple(ext.curve)


def test_curve_json_round_trip(square_curve):
    obj = curve_to_json(square_curve)
    back = curve_from_json(obj)
    assert np.allclose(back.as_polyline_vertices(),
                       square_curve.as_polyline_vertices())
    ell = builtin_curve("ellipse", a=2.0, b=1.0)
    back = curve_from_json(curve_to_json(ell))
    assert back.point(1.3) == pytest.approx(ell.point(1.3))


def test_curve_text_round_trip(tmp_path, square_curve):
    path = tmp_path / "square.txt"
    save_curve_text(square_curve, path)
    back = load_curve_text(path)
    assert np.allclose(back.as_polyline_vertices(),
                       square_curve.as_polyline_vertices())
    # the generic loader sniffs both formats
    again = load_curve_file(path)
    assert again.period == pytest.approx(square_curve.period)


def test_jordan_curve_rejects_degenerate():
    with pytest.raises(InvalidInputError):
        JordanCurve("polyline", vertices=np.asarray([0j, 1.0 + 0j], dtype=complex))
