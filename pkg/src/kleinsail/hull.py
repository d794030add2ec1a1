"""Exact convex hulls of integer point sets in the plane and in space.

Everything is integer arithmetic: orientation tests never round, coplanar
triangles are merged into polygonal faces, and collinear points are
dropped from face boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import HullDegeneracy

Point = Tuple[int, ...]


def _cross2(o: Sequence[int], a: Sequence[int], b: Sequence[int]) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points: Sequence[Sequence[int]]) -> List[int]:
    """Indices of the strict hull vertices, counterclockwise, starting at the lowest-leftmost."""
    pts = [tuple(int(c) for c in p) for p in points]
    order = sorted(set(range(len(pts))), key=lambda i: (pts[i][0], pts[i][1], i))
    # drop duplicates, keep the first index of each coordinate
    seen = {}
    uniq = []
    for i in order:
        if pts[i] not in seen:
            seen[pts[i]] = i
            uniq.append(i)
    if len(uniq) < 3:
        return uniq

    def chain(idx: List[int]) -> List[int]:
        out: List[int] = []
        for i in idx:
            while len(out) >= 2 and _cross2(pts[out[-2]], pts[out[-1]], pts[i]) <= 0:
                out.pop()
            out.append(i)
        return out

    lower = chain(uniq)
    upper = chain(uniq[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise HullDegeneracy("all points are collinear")
    start = min(range(len(hull)), key=lambda k: (pts[hull[k]][1], pts[hull[k]][0]))
    return hull[start:] + hull[:start]


def _sub(a: Sequence[int], b: Sequence[int]) -> Tuple[int, int, int]:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _cross(u: Sequence[int], v: Sequence[int]) -> Tuple[int, int, int]:
    return (u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0])


def _dot(u: Sequence[int], v: Sequence[int]) -> int:
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def primitive(v: Sequence[int]) -> Tuple[int, ...]:
    g = math.gcd(*(int(c) for c in v))
    if g == 0:
        raise ValueError("zero vector has no primitive direction")
    return tuple(int(c) // g for c in v)


@dataclass
class Hull3:
    """Convex polytope with merged polygonal faces.

    ``faces[k]`` lists point indices counterclockwise seen from outside;
    ``normals[k]`` is the primitive outward normal and ``offsets[k]`` the
    value of ``normal . x`` on that face.
    """

    points: List[Point]
    faces: List[Tuple[int, ...]]
    normals: List[Tuple[int, int, int]]
    offsets: List[int]
    triangles: List[Tuple[int, int, int]] = field(repr=False)

    @property
    def vertices(self) -> List[int]:
        return sorted({i for f in self.faces for i in f})

    @property
    def edges(self) -> List[Tuple[int, int]]:
        out = set()
        for f in self.faces:
            for k in range(len(f)):
                a, b = f[k], f[(k + 1) % len(f)]
                out.add((min(a, b), max(a, b)))
        return sorted(out)

    def neighbors(self, v: int) -> List[int]:
        return sorted({b if a == v else a for a, b in self.edges if v in (a, b)})

    def faces_of(self, v: int) -> List[int]:
        return [k for k, f in enumerate(self.faces) if v in f]

    @property
    def volume(self) -> Fraction:
        total = 0
        for a, b, c in self.triangles:
            total += _dot(self.points[a], _cross(self.points[b], self.points[c]))
        return Fraction(total, 6)


def convex_hull_3d(points: Sequence[Sequence[int]], seed: int = 0) -> Hull3:
    """Incremental beneath-beyond hull with exact integer orientation tests."""
    pts: List[Point] = [tuple(int(c) for c in p) for p in points]
    if not pts:
        raise HullDegeneracy("no points")
    big = max(abs(c) for p in pts for c in p)
    dtype = np.int64 if big < 2**19 else object
    P = np.array(pts, dtype=dtype).reshape(-1, 3)

    first = _initial_simplex(pts)
    a, b, c, d = first
    if _dot(_cross(_sub(pts[b], pts[a]), _sub(pts[c], pts[a])), _sub(pts[d], pts[a])) > 0:
        b, c = c, b
    tris: Dict[int, Tuple[int, int, int]] = {}
    normals: List[Tuple[int, int, int]] = []
    offsets: List[int] = []
    edge_face: Dict[Tuple[int, int], int] = {}

    def add(u: int, v: int, w: int) -> None:
        n = _cross(_sub(pts[v], pts[u]), _sub(pts[w], pts[u]))
        k = len(normals)
        normals.append(n)
        offsets.append(_dot(n, pts[u]))
        tris[k] = (u, v, w)
        for e in ((u, v), (v, w), (w, u)):
            edge_face[e] = k

    for u, v, w in ((a, b, c), (a, d, b), (b, d, c), (c, d, a)):
        add(u, v, w)

    rest = [i for i in range(len(pts)) if i not in first]
    rng = np.random.default_rng(seed)
    rest = [rest[k] for k in rng.permutation(len(rest))]
    for p in rest:
        ids = np.fromiter(tris.keys(), dtype=np.int64, count=len(tris))
        N = np.array([normals[k] for k in ids], dtype=dtype)
        off = np.array([offsets[k] for k in ids], dtype=dtype)
        side = N @ P[p] - off
        visible = {int(k) for k in ids[side > 0]}
        if not visible:
            continue
        horizon = []
        for k in visible:
            u, v, w = tris[k]
            for e in ((u, v), (v, w), (w, u)):
                if edge_face.get((e[1], e[0])) not in visible:
                    horizon.append(e)
        for k in visible:
            u, v, w = tris.pop(k)
            for e in ((u, v), (v, w), (w, u)):
                if edge_face.get(e) == k:
                    del edge_face[e]
        for u, v in horizon:
            add(u, v, p)

    return _merge(pts, [tris[k] for k in sorted(tris)])


def _initial_simplex(pts: List[Point]) -> Tuple[int, int, int, int]:
    a = 0
    b = next((i for i in range(len(pts)) if pts[i] != pts[a]), None)
    if b is None:
        raise HullDegeneracy("all points coincide")
    ab = _sub(pts[b], pts[a])
    c = next((i for i in range(len(pts)) if any(_cross(ab, _sub(pts[i], pts[a])))), None)
    if c is None:
        raise HullDegeneracy("all points are collinear")
    n = _cross(ab, _sub(pts[c], pts[a]))
    d = next((i for i in range(len(pts)) if _dot(n, _sub(pts[i], pts[a])) != 0), None)
    if d is None:
        raise HullDegeneracy("all points are coplanar")
    return a, b, c, d


def _merge(pts: List[Point], tris: List[Tuple[int, int, int]]) -> Hull3:
    groups: Dict[Tuple[int, int, int, int], List[int]] = {}
    for t, (u, v, w) in enumerate(tris):
        n = primitive(_cross(_sub(pts[v], pts[u]), _sub(pts[w], pts[u])))
        groups.setdefault((*n, _dot(n, pts[u])), []).append(t)
    faces, normals, offsets = [], [], []
    for key in sorted(groups):
        n = key[:3]
        members = sorted({i for t in groups[key] for i in tris[t]})
        # project along the dominant normal axis; orientation is fixed afterwards
        ax = max(range(3), key=lambda k: abs(n[k]))
        keep = [k for k in range(3) if k != ax]
        proj = [(pts[i][keep[0]], pts[i][keep[1]]) for i in members]
        ring = [members[k] for k in convex_hull_2d(proj)]
        faces.append(tuple(ring))
        normals.append(n)
        offsets.append(key[3])
    hull = Hull3(pts, faces, normals, offsets, tris)
    _orient_faces(hull)
    return hull


def _orient_faces(hull: Hull3) -> None:
    """Make every face ring counterclockwise around its outward normal."""
    pts = hull.points
    for k, f in enumerate(hull.faces):
        a, b, c = pts[f[0]], pts[f[1]], pts[f[2]]
        if _dot(_cross(_sub(b, a), _sub(c, a)), hull.normals[k]) < 0:
            hull.faces[k] = (f[0],) + tuple(reversed(f[1:]))


def supports_sail(normal: Sequence[int], level: int, rays, R: int) -> bool:
    """Whether ``normal . x >= level`` holds on the whole Klein polyhedron of a cone.

    The caller guarantees that every vertex with sup-norm at most R already
    satisfies the inequality.  ``rays`` are exact integer generators (rational
    cone) or a float array of sup-normalized directions (irrational cone).
    The polyhedron is the hull of its vertices plus the cone, so it is
    enough that ``normal . r >= 0`` on every ray and that vertices beyond R
    cannot go below ``level``.
    """
    n = [int(c) for c in normal]
    if isinstance(rays, np.ndarray):
        d = rays @ np.array(n, dtype=float)
        # float rays carry ~1e-15 relative error; the slack keeps the test one-sided
        return bool(np.all(d > 1e-9 * max(abs(c) for c in n)) and level <= R * d.min() * (1 - 1e-6))
    dots = [sum(a * b for a, b in zip(n, r)) for r in rays]
    if any(d < 0 for d in dots):
        return False
    # rational cone: every vertex is a ray or sum lambda_i r_i with 0 <= lambda_i < 1
    sizes = [max(abs(c) for c in r) for r in rays]
    if any(s > R and d < level for s, d in zip(sizes, dots)):
        return False
    slack = R - sum(s for s, d in zip(sizes, dots) if d == 0)
    m = min(Fraction(d, s) for s, d in zip(sizes, dots) if d > 0)
    return level <= 0 or (slack > 0 and level <= m * slack)
