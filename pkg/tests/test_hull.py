import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import ConvexHull

from kleinsail.errors import HullDegeneracy
from kleinsail.hull import convex_hull_2d, convex_hull_3d, primitive

from oracles import zonotope_volume_formula


def test_square_with_interior_and_edge_points():
    pts = [(0, 0), (2, 0), (2, 2), (0, 2), (1, 1), (1, 0), (2, 1)]
    hull = convex_hull_2d(pts)
    assert [pts[i] for i in hull] == [(0, 0), (2, 0), (2, 2), (0, 2)]


def test_collinear_points_raise():
    with pytest.raises(HullDegeneracy):
        convex_hull_2d([(0, 0), (1, 1), (3, 3), (2, 2)])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=3, max_size=60, unique=True))
def test_2d_matches_scipy(pts):
    arr = np.array(pts, dtype=float)
    if np.linalg.matrix_rank(arr - arr[0]) < 2:
        return
    ours = {pts[i] for i in convex_hull_2d(pts)}
    ref = {pts[i] for i in ConvexHull(arr).vertices}
    assert ours == ref


def test_cube_faces_are_merged():
    pts = list(itertools.product((-1, 1), repeat=3)) + [(0, 0, 0), (1, 0, 0), (0, 1, 1)]
    h = convex_hull_3d(pts)
    assert len(h.faces) == 6
    assert all(len(f) == 4 for f in h.faces)
    assert h.volume == 8
    assert len(h.edges) == 12
    assert set(h.vertices) == set(range(8))


def test_face_orientation_outward():
    pts = [(0, 0, 0), (3, 0, 0), (0, 3, 0), (0, 0, 3), (1, 1, 1)]
    h = convex_hull_3d(pts)
    centroid = np.mean([pts[i] for i in h.vertices], axis=0)
    for f, n, off in zip(h.faces, h.normals, h.offsets):
        assert np.dot(n, centroid) < off
        a, b, c = (np.array(pts[i]) for i in f[:3])
        assert np.dot(np.cross(b - a, c - a), n) > 0


def test_primitive():
    assert primitive((4, -6, 10)) == (2, -3, 5)
    with pytest.raises(ValueError):
        primitive((0, 0, 0))


@pytest.mark.parametrize("seed", range(5))
def test_random_volume_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    pts = [tuple(int(c) for c in p) for p in rng.integers(-50, 51, size=(400, 3))]
    h = convex_hull_3d(pts, seed=seed)
    assert float(h.volume) == pytest.approx(ConvexHull(np.array(pts, float)).volume, rel=1e-12)
    V, E, F = len(h.vertices), len(h.edges), len(h.faces)
    assert V - E + F == 2


@pytest.mark.parametrize("seed", range(10))
def test_zonotope_volume_formula(seed):
    rng = np.random.default_rng(100 + seed)
    gens = [tuple(int(c) for c in g) for g in rng.integers(-4, 5, size=(5, 3))]
    verts = {tuple(int(c) for c in np.sum([g for g, b in zip(gens, bits) if b], axis=0))
             if any(bits) else (0, 0, 0) for bits in itertools.product((0, 1), repeat=5)}
    h = convex_hull_3d(sorted(verts))
    assert h.volume == Fraction(zonotope_volume_formula(gens))


def test_large_coordinates_use_exact_integers():
    big = 2**40
    pts = [(0, 0, 0), (big, 0, 0), (0, big, 0), (0, 0, big), (big // 3, big // 3, big // 3 - 1)]
    h = convex_hull_3d(pts)
    assert h.volume == Fraction(big**3, 6)
    assert len(h.faces) == 4


def test_coplanar_input_raises():
    with pytest.raises(HullDegeneracy):
        convex_hull_3d([(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)])
