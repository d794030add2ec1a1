import json
import math
from fractions import Fraction

import pytest

from kleinsail.errors import ParallelEdges
from kleinsail.klein2d import (
    CCW,
    CONES,
    build_polygon,
    duality_all,
    duality_check,
    integer_angle,
    integer_length,
    is_reduced,
    mu_via_vertices,
    polygons_json,
    polygons_svg,
    thetas,
)
from kleinsail.lattice import FormMatrix
from kleinsail.numeric import compare

from oracles import brute_polygon_vertices

SQ5 = math.sqrt(5)


def slopes_forms(t1, t2):
    return FormMatrix([[t1, "-1"], [t2, "-1"]])


def test_integer_length_and_angle():
    assert integer_length((0, 0), (6, -9)) == 3
    assert integer_length((1, 1), (2, 3)) == 1
    assert integer_angle((1, 0), (1, 3)) == 3
    assert integer_angle((-1, 2), (2, -1)) == 3
    with pytest.raises(ParallelEdges):
        integer_angle((1, 2), (-2, -4))
    with pytest.raises(ValueError):
        integer_length((1, 1), (1, 1))


def test_thetas_and_reduction():
    F = slopes_forms("11/8", "-3/8")
    t1, t2 = thetas(F)
    assert compare(t1, Fraction(11, 8)) == 0 and compare(t2, Fraction(-3, 8)) == 0
    assert is_reduced(F)
    assert not is_reduced(slopes_forms("3/4", "-1/2"))


def test_first_figure_chains():
    P = build_polygon(slopes_forms("11/8", "-3/8"), 11)
    assert P["K1"].vertices == [(8, -3), (3, -1), (1, 0), (1, 1), (3, 4), (8, 11)]
    assert P["K2"].vertices == [(8, 11), (2, 3), (0, 1), (-2, 1), (-8, 3)]
    assert P["-K1"].vertices == [(-x, -y) for x, y in P["K1"].vertices]
    assert all(P["K1"].certified)


def test_second_figure_duality():
    P = build_polygon(slopes_forms("8/11", "-3/7"), 12)
    K1, K2 = P["K1"], P["K2"]
    i = K1.vertices.index((1, 0))
    assert K1.angles[i] == 3
    e = K2.edge_between((1, 1), (-2, 1))
    assert e is not None and e.length == 3
    m = duality_check(K1, K2)
    rec = next(r for r in m.pairs if r["vertex"] == [1, 0])
    assert rec["length"] == 3 and sorted(map(tuple, rec["edge"])) == [(-2, 1), (1, 1)]
    assert m.ok


@pytest.mark.parametrize(
    "t1, t2, f1, f2, complete",
    [
        ("1/2+1/2*sqrt(5)", "1/2-1/2*sqrt(5)", (1 + SQ5) / 2, (1 - SQ5) / 2, True),
        ("11/8", "-3/8", Fraction(11, 8), Fraction(-3, 8), True),
        ("13/5", "-2/7", Fraction(13, 5), Fraction(-2, 7), True),
        # edges nearly parallel to a wall need a larger window to certify
        ("sqrt(2)", "-1/3*sqrt(2)", math.sqrt(2), -math.sqrt(2) / 3, False),
        ("2+sqrt(7)", "-1/2+1/5*sqrt(2)", 2 + math.sqrt(7), -0.5 + math.sqrt(2) / 5, False),
    ],
)
def test_certified_vertices_match_brute_force(t1, t2, f1, f2, complete):
    W = 12
    P = build_polygon(slopes_forms(t1, t2), W)
    for name in CCW:
        truth = brute_polygon_vertices(f1, f2, CONES[name], W)
        cert = set(P[name].certified_vertices())
        assert cert and cert <= truth
        if complete:
            assert {v for v in truth if max(map(abs, v)) <= W // 2} <= cert


def test_chain_is_convex_and_ordered():
    P = build_polygon(slopes_forms("sqrt(3)", "-1/4*sqrt(3)"), 50)
    for name in CCW:
        vs = P[name].vertices
        for a, b, c in zip(vs, vs[1:], vs[2:]):
            # the sail turns away from the origin: consecutive edges turn clockwise
            cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
            assert cross != 0
        assert all(e.length == integer_length(vs[e.start], vs[e.end]) for e in P[name].edges)


def test_golden_all_unit():
    P = build_polygon(slopes_forms("1/2+1/2*sqrt(5)", "1/2-1/2*sqrt(5)"), 1000)
    for name in CCW:
        K = P[name]
        assert all(e.length == 1 for e in K.edges)
        assert all(a == 1 for a, c in zip(K.angles, K.certified) if c)
    m = duality_all(P)
    assert m.ok and len(m.pairs) > 20


@pytest.mark.parametrize("t1, t2", [("sqrt(2)", "-1/3*sqrt(2)"), ("3+sqrt(10)", "-1/7-1/9*sqrt(2)"), ("29/9", "-5/12")])
def test_duality_holds(t1, t2):
    F = slopes_forms(t1, t2)
    m = duality_all(build_polygon(F, 200), reduced=is_reduced(F))
    assert m.ok, m.failures[:3]
    assert m.pairs


def test_mu_report_golden():
    F = slopes_forms("1/2+1/2*sqrt(5)", "1/2-1/2*sqrt(5)")
    rep = mu_via_vertices(F, 2000)
    assert rep.e1.value == 2.0
    assert rep.e2.value == 2.0
    assert rep.e3.value >= 2.0
    data = rep.to_json()
    assert set(data) == {"E1", "E2", "E3", "gaps", "flags"}


def test_exports_are_deterministic():
    F = slopes_forms("11/8", "-3/8")
    a = polygons_json(build_polygon(F, 11))
    b = polygons_json(build_polygon(F, 11))
    assert a == b
    data = json.loads(a)
    assert list(data) == sorted(CCW)
    svg = polygons_svg(F, build_polygon(F, 11))
    assert svg.startswith("<svg") and svg.count("<polyline") + svg.count("<path") >= 4


def test_window_validation():
    with pytest.raises(ValueError):
        build_polygon(slopes_forms("11/8", "-3/8"), 1)
