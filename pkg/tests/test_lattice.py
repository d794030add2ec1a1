import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kleinsail.errors import DegenerateForm
from kleinsail.lattice import (
    FormMatrix,
    LatticeSpec,
    box_points,
    enumerate_points,
    hyperbolic_points,
    omega_estimate,
    pi_value,
    points_csv,
)
from kleinsail.numeric import compare, parse_real

from oracles import brute_omega_shell, brute_points, brute_points_exact

GOLDEN = [["1", "1/2+1/2*sqrt(5)"], ["1", "1/2-1/2*sqrt(5)"]]


def zs(points):
    return [p.z for p in points]


def test_identity_counts():
    lat = LatticeSpec([[1, 0], [0, 1]])
    assert len(list(enumerate_points(lat, 1))) == 8
    assert len(list(enumerate_points(lat, 2))) == 24
    assert len(list(enumerate_points(LatticeSpec([[1, 0, 0], [0, 1, 0], [0, 0, 1]]), 1))) == 26


def test_normalization_is_scale_free():
    a = zs(enumerate_points(LatticeSpec([[2, 1], [1, 3]]), 3))
    b = zs(enumerate_points(LatticeSpec([[6, 3], [3, 9]]), 3))
    assert a == b


def test_golden_matches_brute_force():
    lat = LatticeSpec(GOLDEN)
    for R in (1, 2, 5, 9):
        assert zs(enumerate_points(lat, R)) == brute_points(GOLDEN, R)


def test_output_is_lexicographic():
    pts = zs(enumerate_points(LatticeSpec([[3, 1, 0], [1, -2, 1], [0, 1, 4]]), 3))
    assert pts == sorted(pts)


def test_strict_detects_vanishing_form():
    with pytest.raises(DegenerateForm):
        list(enumerate_points(LatticeSpec([[1, 1], [1, -1]]), 2, strict=True))
    assert len(list(enumerate_points(LatticeSpec([[1, 1], [1, -1]]), 2))) > 0


def test_pi_value_exact():
    pv = pi_value(["1/2", "3", "-4"])
    assert compare(pv.power, 6) == 0
    assert pv.value == pytest.approx(6 ** (1 / 3), rel=1e-15)
    assert pv.enclosure[0] <= 6 ** (1 / 3) <= pv.enclosure[1]


def test_point_fields():
    lat = LatticeSpec(GOLDEN)
    p = lat.point((1, 1))
    phi, psi = (1 + math.sqrt(5)) / 2, (1 - math.sqrt(5)) / 2
    sigma = 5 ** -0.25
    assert p.norm == pytest.approx(sigma * (1 + phi), rel=1e-14)
    # (1 + phi)(1 + psi) = 1
    assert p.pi == pytest.approx(sigma * math.sqrt((1 + phi) * (1 + psi)), rel=1e-14)
    assert compare(p.pi_power * p.pi_power, parse_real("1/5")) == 0


def test_points_csv_columns():
    text = points_csv(enumerate_points(LatticeSpec(GOLDEN), 2))
    lines = text.strip().splitlines()
    assert len(lines[1].split(",")) == 2 + 2 + 2


def test_box_points_cover_the_box():
    forms = FormMatrix([[2, 1], [-1, 3]])
    Z = box_points(forms, np.array([7.0, 5.0]))
    want = sorted((x, y) for x in range(-10, 11) for y in range(-10, 11)
                  if abs(2 * x + y) <= 7 and abs(-x + 3 * y) <= 5)
    assert sorted(map(tuple, Z.tolist())) == want


def test_hyperbolic_points_cover_region():
    forms = FormMatrix(GOLDEN)
    M = np.array([30.0, 30.0])
    Z = hyperbolic_points(forms, M, 2.0)
    got = set(map(tuple, Z.tolist()))
    phi, psi = (1 + math.sqrt(5)) / 2, (1 - math.sqrt(5)) / 2
    for x in range(-40, 41):
        for y in range(-40, 41):
            a, b = x + phi * y, x + psi * y
            if (x, y) != (0, 0) and abs(a) <= 29.9 and abs(b) <= 29.9 and abs(a * b) <= 1.99:
                assert (x, y) in got


def test_omega_matches_brute_force_shell():
    lat = LatticeSpec(GOLDEN)
    for R in (8, 20, 40):
        est = omega_estimate(lat, R)
        assert est.value == pytest.approx(brute_omega_shell(GOLDEN, R), abs=1e-12)
        assert est.enclosure[0] <= est.value <= est.enclosure[1]


def test_omega_running_max_is_monotone():
    lat = LatticeSpec([["1", "sqrt(2)"], ["1", "-sqrt(2)"]])
    prev = 0.0
    for R in (4, 8, 16, 32, 64, 128):
        est = omega_estimate(lat, R)
        assert est.running_max >= prev
        prev = est.running_max


def test_omega_golden_decays():
    lat = LatticeSpec(GOLDEN)
    vals = [omega_estimate(lat, R).value for R in (100, 1000, 10000)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] <= 0.05


def test_omega_restrict_to_subset():
    lat = LatticeSpec(GOLDEN)
    full = omega_estimate(lat, 50)
    sub = omega_estimate(lat, 50, restrict_to=[(1, 1), (2, -1), (3, -2), (8, -5), (21, -13)])
    assert sub.value <= full.value + 1e-15


def _random_int_matrix(rng, n):
    while True:
        A = [[rng.randint(-4, 4) for _ in range(n)] for _ in range(n)]
        if round(np.linalg.det(np.array(A, dtype=float))) != 0:
            return A


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 3]), st.integers(1, 3))
def test_enumeration_matches_exact_brute_force(seed, n, R):
    A = _random_int_matrix(random.Random(seed), n)
    assert zs(enumerate_points(LatticeSpec(A), R)) == brute_points_exact(A, R)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([2, 3, 5, 7, 11]), st.integers(-3, 3), st.integers(1, 3), st.integers(1, 6))
def test_enumeration_irrational_matches_brute_force(d, a, b, R):
    rows = [["1", f"{a}+{b}*sqrt({d})"], ["1", f"{a}-{b}*sqrt({d})"]]
    assert zs(enumerate_points(LatticeSpec(rows), R)) == brute_points(rows, R)
