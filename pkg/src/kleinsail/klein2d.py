"""Klein polygons of a pair of linear forms, integer lengths and angles.

The four polygons are the convex hulls of the nonzero lattice points in
the four sign quadrants of ``(L_1, L_2)``.  For ``L_i = theta_i x - y`` the
quadrant ``(+, -)`` is K1, ``(-, -)`` is K2 and the other two are their
negatives.  All coordinates below are integer preimages z.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .contfrac import TRUNCATED, ContinuedFraction, ExponentEstimate, cf_expand, convergents, mu_estimate
from .errors import DegenerateForm, InsufficientDepth, ParallelEdges
from .hull import convex_hull_2d, primitive, supports_sail
from .lattice import FormMatrix, LatticeSpec, hyperbolic_points, omega_estimate, pareto_filter
from .numeric import ExactReal, compare

_iv = mpmath.iv

Pair = Tuple[int, int]

CONES: Dict[str, Pair] = {"K1": (1, -1), "K2": (-1, -1), "-K1": (-1, 1), "-K2": (1, 1)}
# counterclockwise order of the quadrants when theta_1 > theta_2
CCW = ("K1", "K2", "-K1", "-K2")

GUARD = 4
AUG_FACTOR = 16


def integer_length(u: Sequence[int], v: Sequence[int]) -> int:
    if tuple(u) == tuple(v):
        raise ValueError("integer length needs two distinct points")
    return math.gcd(int(u[0]) - int(v[0]), int(u[1]) - int(v[1]))


def integer_angle(r1: Sequence[int], r2: Sequence[int]) -> int:
    """``|det(r1, r2)|`` for primitive edge directions at a vertex."""
    d = abs(int(r1[0]) * int(r2[1]) - int(r1[1]) * int(r2[0]))
    if d == 0:
        raise ParallelEdges(f"directions {tuple(r1)} and {tuple(r2)} are parallel")
    return d


def _cross(a: Sequence[int], b: Sequence[int]) -> int:
    return int(a[0]) * int(b[1]) - int(a[1]) * int(b[0])


@dataclass
class PolygonEdge:
    start: int
    end: int
    direction: Pair
    length: int


@dataclass
class KleinPolygon:
    cone: str
    signs: Pair
    window: int
    vertices: List[Pair]
    certified: List[bool]
    angles: List[Optional[int]]
    edges: List[PolygonEdge]
    # primitive directions toward the clockwise and counterclockwise neighbours
    directions: List[Tuple[Pair, Pair]] = field(repr=False)
    rays: Optional[Tuple[Pair, Pair]] = None

    def certified_vertices(self) -> List[Pair]:
        return [v for v, c in zip(self.vertices, self.certified) if c]

    def edge_between(self, a: Sequence[int], b: Sequence[int]) -> Optional[PolygonEdge]:
        a, b = tuple(a), tuple(b)
        for e in self.edges:
            if {self.vertices[e.start], self.vertices[e.end]} == {a, b}:
                return e
        return None

    def to_json(self) -> dict:
        return {
            "cone": self.cone,
            "signs": list(self.signs),
            "window": self.window,
            "vertices": [
                {"z": list(v), "certified": c, "angle": a}
                for v, c, a in zip(self.vertices, self.certified, self.angles)
            ],
            "edges": [
                {"ends": [list(self.vertices[e.start]), list(self.vertices[e.end])], "direction": list(e.direction), "length": e.length}
                for e in self.edges
            ],
        }


def _cone_rays(forms: FormMatrix, signs: Pair) -> np.ndarray:
    """Float directions of the two walls, clockwise wall first."""
    inv = forms.inv_mid
    rays = [inv[:, j] * signs[j] for j in range(2)]
    if _fcross(rays[0], rays[1]) < 0:
        rays = rays[::-1]
    return np.array([r / np.abs(r).max() for r in rays])


def _fcross(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _integer_rays(forms: FormMatrix, signs: Pair) -> Optional[Tuple[Pair, Pair]]:
    M = forms.integer_rows
    if M is None:
        return None
    # the wall L_k = 0 is spanned by (-b, a) for the row (a, b)
    out = []
    for j, k in ((0, 1), (1, 0)):
        a, b = M[k]
        r = primitive((-b, a))
        val = M[j][0] * r[0] + M[j][1] * r[1]
        if val * signs[j] < 0:
            r = (-r[0], -r[1])
        out.append(r)
    if _cross(out[0], out[1]) < 0:
        out.reverse()
    return out[0], out[1]


def _on_ray(z: Sequence[int], r: Sequence[int]) -> bool:
    return _cross(z, r) == 0 and z[0] * r[0] + z[1] * r[1] > 0


def _polygon(forms: FormMatrix, name: str, W: int, strict: bool) -> KleinPolygon:
    signs = CONES[name]
    G = GUARD * W
    M = (np.abs(forms.mid).sum(axis=1) + forms.err.sum(axis=1)) * G * (1 + 1e-9) + 1e-9
    D = float(forms.abs_det) * (1 + 1e-9)
    Z = hyperbolic_points(forms, M, D, zmax=G)
    if len(Z):
        Z = Z[np.abs(Z).max(axis=1) <= G]
        S = forms.signs(Z) if len(Z) else np.zeros((0, 2), dtype=np.int64)
        inside = np.all(S * np.array(signs) >= 0, axis=1)
        Z, S = Z[inside], S[inside]
        if strict and np.any(S == 0):
            bad = tuple(int(c) for c in Z[np.any(S == 0, axis=1)][0])
            raise DegenerateForm(f"a form vanishes at {bad}")
    Z = pareto_filter(forms, signs, Z)
    cand = [(int(a), int(b)) for a, b in Z]

    rays = _integer_rays(forms, signs)
    T = AUG_FACTOR * G
    if rays is not None:
        aug = [tuple(T // max(abs(c) for c in r) * c for c in r) for r in rays]
    else:
        fr = _cone_rays(forms, signs)
        aug = []
        for j in range(2):
            t = fr[j] + 0.05 * fr[1 - j]
            aug.append(tuple(int(c) for c in np.rint(T * t / np.abs(t).max())))
    aug = [tuple(int(c) for c in a) for a in aug]
    aug_set = set(aug)
    pts = cand + [a for a in aug if a not in set(cand)]
    ring = [pts[i] for i in convex_hull_2d(pts)]

    # the chain is the run of non-augmentation hull vertices
    k0 = next(k for k, p in enumerate(ring) if p in aug_set and ring[(k + 1) % len(ring)] not in aug_set)
    chain = []
    k = (k0 + 1) % len(ring)
    while ring[k] not in aug_set:
        chain.append(ring[k])
        k = (k + 1) % len(ring)
    before, after = ring[k0], ring[k]
    if len(chain) >= 2 and _cross(chain[0], chain[-1]) < 0 or (len(chain) == 1 and _cross(before, after) < 0):
        chain.reverse()
        before, after = after, before

    ray_data = rays if rays is not None else _cone_rays(forms, signs)
    # the vertex sum of the ring, scaled by its length, is an interior point
    sx, sy = sum(p[0] for p in ring), sum(p[1] for p in ring)

    def supported(a: Pair, b: Pair) -> bool:
        n = (a[1] - b[1], b[0] - a[0])
        level = n[0] * a[0] + n[1] * a[1]
        if n[0] * sx + n[1] * sy < len(ring) * level:
            n, level = (-n[0], -n[1]), -level
        return supports_sail(n, level, ray_data, G)

    certified, angles, directions = [], [], []
    for i, v in enumerate(chain):
        prev = chain[i - 1] if i > 0 else before
        nxt = chain[i + 1] if i + 1 < len(chain) else after
        r_cw = primitive((prev[0] - v[0], prev[1] - v[1]))
        r_ccw = primitive((nxt[0] - v[0], nxt[1] - v[1]))
        directions.append((r_cw, r_ccw))
        ok = supported(prev, v) and supported(v, nxt) and max(abs(c) for c in v) <= W
        certified.append(ok)
        angles.append(integer_angle(r_cw, r_ccw) if ok else None)
    edges = []
    for i in range(len(chain) - 1):
        a, b = chain[i], chain[i + 1]
        edges.append(PolygonEdge(i, i + 1, primitive((b[0] - a[0], b[1] - a[1])), integer_length(a, b)))
    return KleinPolygon(name, signs, W, chain, certified, angles, edges, directions, rays)


def build_polygon(forms: FormMatrix, W: int, strict: bool = False) -> Dict[str, KleinPolygon]:
    """The four Klein polygons, hull computed to 4W and certified within W."""
    if forms.n != 2:
        raise ValueError("Klein polygons need a 2x2 form matrix")
    if W < 2:
        raise ValueError("window must be at least 2")
    return {name: _polygon(forms, name, int(W), strict) for name in CCW}


def thetas(forms: FormMatrix) -> Tuple[ExactReal, ExactReal]:
    """Slopes ``theta_i`` with ``L_i`` proportional to ``theta_i x - y``."""
    out = []
    for a, b in forms.rows:
        if b.sign() == 0:
            raise ValueError("form does not depend on y, no slope")
        out.append(-(a / b))
    return out[0], out[1]


def is_reduced(forms: FormMatrix) -> bool:
    t1, t2 = thetas(forms)
    return compare(t1, 1) > 0 and compare(t2, -1) > 0 and t2.sign() < 0


# -- duality -------------------------------------------------------------

@dataclass
class DualityMatch:
    pairs: List[dict]
    failures: List[dict]
    skipped: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"pairs": self.pairs, "failures": self.failures, "skipped": self.skipped, "ok": self.ok}


def duality_check(K: KleinPolygon, K_adjacent: KleinPolygon, exclude_near_origin: Optional[int] = None, reduced: bool = True) -> DualityMatch:
    """Pair each in-range vertex v of K with the adjacent edge ``[r_ccw, -r_cw]``.

    A vertex is in range when it is certified, is not among the
    ``exclude_near_origin`` vertices closest to the origin (default 0 for
    reduced slopes, 2 otherwise) and both ends of its dual edge lie in the
    certified window of the adjacent polygon.  With rational slopes the
    two closed cones share their wall points, so a dual edge that only sits
    inside a longer adjacent edge ending on a wall is counted as skipped.
    """
    if exclude_near_origin is None:
        exclude_near_origin = 0 if reduced else 2
    by_size = sorted(range(len(K.vertices)), key=lambda i: (max(abs(c) for c in K.vertices[i]), i))
    dropped = set(by_size[:exclude_near_origin])
    adj_cert = set(K_adjacent.certified_vertices())
    pairs, failures, skipped = [], [], 0
    for i, v in enumerate(K.vertices):
        if not K.certified[i] or i in dropped:
            continue
        r_cw, r_ccw = K.directions[i]
        a, b = r_ccw, (-r_cw[0], -r_cw[1])
        if max(abs(c) for c in a + b) > K_adjacent.window:
            skipped += 1
            continue
        ang = K.angles[i]
        found = None
        for sa, sb in ((a, b), ((-a[0], -a[1]), (-b[0], -b[1]))):
            if sa in adj_cert or sb in adj_cert:
                e = K_adjacent.edge_between(sa, sb)
                if e is not None:
                    found = (sa, sb, e)
                    break
        record = {"vertex": list(v), "angle": ang, "edge": [list(a), list(b)]}
        if found is None and _inside_wall_edge(K_adjacent, a, b):
            skipped += 1
            continue
        if found is None:
            record["reason"] = "no matching edge"
            failures.append(record)
            continue
        sa, sb, e = found
        record["edge"] = [list(sa), list(sb)]
        record["length"] = e.length
        if e.length != ang:
            record["reason"] = "length differs from angle"
            failures.append(record)
        else:
            pairs.append(record)
    return DualityMatch(pairs, failures, skipped)


def _on_segment(p: Pair, a: Pair, b: Pair) -> bool:
    d = (b[0] - a[0], b[1] - a[1])
    w = (p[0] - a[0], p[1] - a[1])
    return _cross(d, w) == 0 and 0 <= w[0] * d[0] + w[1] * d[1] <= d[0] * d[0] + d[1] * d[1]


def _inside_wall_edge(P: KleinPolygon, a: Pair, b: Pair) -> bool:
    if P.rays is None or not P.edges:
        return False
    walls = [e for e in P.edges if any(_on_ray(P.vertices[i], r) for i in (e.start, e.end) for r in P.rays)]
    for sa, sb in ((a, b), ((-a[0], -a[1]), (-b[0], -b[1]))):
        for e in walls:
            u, w = P.vertices[e.start], P.vertices[e.end]
            if _on_segment(sa, u, w) and _on_segment(sb, u, w):
                return True
    return False


def duality_all(polygons: Dict[str, KleinPolygon], exclude_near_origin: Optional[int] = None, reduced: bool = True) -> DualityMatch:
    """Each polygon against its counterclockwise neighbour."""
    total = DualityMatch([], [], 0)
    for k, name in enumerate(CCW):
        m = duality_check(polygons[name], polygons[CCW[(k + 1) % 4]], exclude_near_origin, reduced)
        for rec in m.pairs + m.failures:
            rec["cone"] = name
        total.pairs += m.pairs
        total.failures += m.failures
        total.skipped += m.skipped
    return total


# -- exponents -------------------------------------------------------------

@dataclass
class MuReport:
    e1: ExponentEstimate
    e2: Optional[ExponentEstimate]
    e3: Optional[ExponentEstimate]
    flags: List[str]

    @property
    def gaps(self) -> Dict[str, Optional[float]]:
        e2 = self.e2.value if self.e2 is not None else None
        e3 = self.e3.value if self.e3 is not None else None

        def gap(a, b):
            return None if a is None or b is None else abs(a - b)

        return {"e1_e2": gap(self.e1.value, e2), "e1_e3": gap(self.e1.value, e3), "e2_e3": gap(e2, e3)}

    def to_json(self) -> dict:
        return {
            "E1": self.e1.to_json(),
            "E2": None if self.e2 is None else self.e2.to_json(),
            "E3": None if self.e3 is None else self.e3.to_json(),
            "gaps": self.gaps,
            "flags": self.flags,
        }


def angle_exponent(polygons: Dict[str, KleinPolygon]) -> ExponentEstimate:
    """``2 + max log ang(v) / log|v|`` over certified vertices with ``|v| > 1``."""
    best, enc, witness = 0.0, (0.0, 0.0), None
    for name in CCW:
        P = polygons[name]
        for v, ok, ang in zip(P.vertices, P.certified, P.angles):
            size = max(abs(c) for c in v)
            if not ok or size <= 1:
                continue
            r = _iv.log(ang) / _iv.log(size)
            if witness is None or float(r.mid) > best:
                best, enc, witness = float(r.mid), (float(r.a), float(r.b)), (name, v)
    return ExponentEstimate(2.0 + best, (2.0 + enc[0], 2.0 + enc[1]), witness, [], max(p.window for p in polygons.values()), 2.0 + best)


def _mu_of(theta: ExactReal, W: int, flags: List[str], label: str) -> Optional[ExponentEstimate]:
    cf = cf_expand(theta, 400)
    q = convergents(cf).q
    # keep a_{n+1} only while q_n stays inside the window
    depth = 1
    while depth < len(cf) and q[depth - 1] <= W:
        depth += 1
    quotients = cf.quotients[:depth]
    if cf.termination != TRUNCATED and depth == len(cf):
        flags.append(f"{label}: expansion {cf.termination}")
    try:
        return mu_estimate(ContinuedFraction(quotients))
    except InsufficientDepth:
        flags.append(f"{label}: fewer than 3 partial quotients in range")
        return None


def mu_via_vertices(forms: FormMatrix, W: int, polygons: Optional[Dict[str, KleinPolygon]] = None) -> MuReport:
    """Three finite-window readings of ``max(mu(theta_1), mu(theta_2))``.

    E1 comes from integer angles of certified vertices, E2 from the
    continued fractions of the slopes, E3 = 2 + 2 * omega of the lattice
    restricted to certified vertices.  E3 is None when a form vanishes at a
    nonzero lattice point (rational slopes), since omega is then undefined.
    """
    polygons = polygons or build_polygon(forms, W)
    flags: List[str] = []
    if not is_reduced(forms):
        flags.append("slopes not reduced")
    e1 = angle_exponent(polygons)
    t1, t2 = thetas(forms)
    mus = [m for m in (_mu_of(t1, W, flags, "theta1"), _mu_of(t2, W, flags, "theta2")) if m is not None]
    e2 = max(mus, key=lambda m: m.value) if mus else None
    verts = [v for P in polygons.values() for v in P.certified_vertices()]
    try:
        om = omega_estimate(LatticeSpec(forms), W, restrict_to=verts)
    except DegenerateForm:
        flags.append("omega undefined: a form vanishes on the lattice")
        return MuReport(e1, e2, None, flags)
    e3 = ExponentEstimate(
        2 + 2 * om.value,
        (2 + 2 * om.enclosure[0], 2 + 2 * om.enclosure[1]),
        om.witness,
        [(r, 2 + 2 * v) for r, v in om.history],
        om.depth,
        2 + 2 * om.running_max,
    )
    return MuReport(e1, e2, e3, flags)


# -- export ------------------------------------------------------------------

def polygons_json(polygons: Dict[str, KleinPolygon]) -> str:
    return json.dumps({name: polygons[name].to_json() for name in CCW}, indent=2, sort_keys=True)


def polygons_svg(forms: FormMatrix, polygons: Dict[str, KleinPolygon], view: Optional[int] = None) -> str:
    """Picture with the lines ``L_i = 0``, the four chains and their vertices."""
    s = view or max(p.window for p in polygons.values())
    scale = 400.0 / (2 * s)

    def xy(p) -> str:
        return f"{(p[0] + s) * scale:.3f},{(s - p[1]) * scale:.3f}"

    out = ['<svg xmlns="http://www.w3.org/2000/svg" width="400" height="400" viewBox="0 0 400 400">']
    for a, b in forms.mid:
        # points on a*x + b*y = 0 at the edge of the view
        d = np.array([-b, a]) / max(abs(a), abs(b))
        x1, y1 = xy(-s * d).split(",")
        x2, y2 = xy(s * d).split(",")
        out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="black" stroke-width="0.5"/>')
    for name in CCW:
        P = polygons[name]
        pts = [v for v in P.vertices if max(abs(c) for c in v) <= s]
        if len(pts) > 1:
            out.append('<polyline fill="none" stroke="blue" points="%s"/>' % " ".join(xy(v) for v in pts))
        for v, ok in zip(P.vertices, P.certified):
            if max(abs(c) for c in v) <= s:
                x, y = xy(v).split(",")
                out.append(f'<circle cx="{x}" cy="{y}" r="2" fill="{"blue" if ok else "gray"}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
