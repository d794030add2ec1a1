"""Truncated Klein polyhedra in simplicial cones, edge stars and their determinants.

A patch is the exact hull of the cone's lattice points that can possibly
be vertices, closed off by far points along the cone edges.  A vertex
deep inside the truncation radius is flagged certified when every patch
face around it provably supports the full polyhedron (``supports_sail``);
then the patch and the polyhedron have the same tangent cone there, so the
star is exact.

Candidate vertices come from the hyperbolic region ``|L_1 L_2 L_3| <= |det|``:
after the diagonal change of variables that makes all coordinates of a
vertex equal, the vertex is a shortest vector in the sup-norm, so the open
cube it spans holds no nonzero lattice point and Minkowski's theorem bounds
its volume.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import HullDegeneracy, UncertifiedVertex
from .hull import Hull3, convex_hull_3d, primitive, supports_sail
from .lattice import FormMatrix, adjugate, hyperbolic_points, pareto_filter
from .numeric import Rational

Vec = Tuple[int, int, int]

# augmentation points sit this many truncation radii out along each cone edge
AUG_FACTOR = 16
MARGIN = 4


def _det3(a: Sequence[int], b: Sequence[int], c: Sequence[int]) -> int:
    return (
        a[0] * (b[1] * c[2] - b[2] * c[1])
        - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
    )


class SimplicialCone:
    """Closed cone ``{z : s_i L_i(z) >= 0}``; built from rays or from forms and signs."""

    def __init__(self, forms: FormMatrix, signs: Sequence[int], rays: Optional[Sequence[Vec]] = None) -> None:
        if forms.n != 3:
            raise ValueError("simplicial cones live in dimension 3")
        if len(signs) != 3 or any(s not in (1, -1) for s in signs):
            raise ValueError("sign pattern must have three entries in {+1, -1}")
        self.forms = forms
        self.signs = tuple(int(s) for s in signs)
        self._rays = tuple(tuple(int(c) for c in r) for r in rays) if rays is not None else None

    @classmethod
    def from_rays(cls, rays: Sequence[Sequence[int]]) -> "SimplicialCone":
        E = [tuple(int(c) for c in r) for r in rays]
        if len(E) != 3 or any(len(r) != 3 for r in E):
            raise ValueError("need three integer rays in Z^3")
        d = _det3(*E)
        if d == 0:
            raise ValueError("rays are linearly dependent")
        cols = [[Rational(E[j][i]) for j in range(3)] for i in range(3)]
        adj = adjugate(cols)
        forms = FormMatrix([[int(x.value) for x in row] for row in adj])
        s = 1 if d > 0 else -1
        return cls(forms, (s, s, s), [primitive(r) for r in E])

    @classmethod
    def orthant(cls, forms: FormMatrix, signs: Sequence[int]) -> "SimplicialCone":
        return cls(forms, signs)

    @property
    def is_rational(self) -> bool:
        return self.forms.is_rational

    @property
    def rays(self) -> Optional[Tuple[Vec, ...]]:
        """Primitive integer edge generators when they exist (rational forms)."""
        if self._rays is None and self.is_rational:
            adj = adjugate(self.forms.rows)
            out = []
            dsign = self.forms.det.sign()
            for j in range(3):
                col = [adj[i][j].value * self.signs[j] * dsign for i in range(3)]
                den = math.lcm(*(c.denominator for c in col))
                out.append(primitive([int(c * den) for c in col]))
            self._rays = tuple(out)
        return self._rays

    def ray_directions(self) -> np.ndarray:
        """Float unit (sup-norm) directions of the three edges, one per row."""
        if self.rays is not None:
            R = np.array(self.rays, dtype=float)
        else:
            inv = self.forms.inv_mid
            R = (inv * np.array(self.signs)[None, :]).T
        return R / np.abs(R).max(axis=1, keepdims=True)

    def contains(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z).reshape(-1, 3)
        if len(Z) == 0:
            return np.zeros(0, dtype=bool)
        return np.all(self.forms.signs(Z) * np.array(self.signs) >= 0, axis=1)

    def to_json(self) -> dict:
        out = {"forms": self.forms.to_text(), "signs": list(self.signs)}
        if self.rays is not None:
            out["rays"] = [list(r) for r in self.rays]
        return out


def enumerate_cone_points(cone: SimplicialCone, R: int) -> Iterator[Vec]:
    """Nonzero integer points of the closed cone with ``|z|_inf <= R``, lexicographic."""
    if R < 1:
        raise ValueError("R must be at least 1")
    ax = np.arange(-R, R + 1, dtype=np.int64)
    for a in ax:
        rest = np.stack([g.ravel() for g in np.meshgrid(ax, ax, indexing="ij")], axis=1)
        Z = np.column_stack([np.full(len(rest), a), rest])
        Z = Z[np.any(Z != 0, axis=1)]
        for z in Z[cone.contains(Z)]:
            yield tuple(int(c) for c in z)


# -- patch construction -----------------------------------------------------

def candidate_points(cone: SimplicialCone, R: int) -> np.ndarray:
    """Cone points with ``|z|_inf <= R`` that can be vertices of the Klein polyhedron."""
    forms = cone.forms
    M = (np.abs(forms.mid).sum(axis=1) + forms.err.sum(axis=1)) * R * (1 + 1e-9) + 1e-9
    D = float(forms.abs_det) * (1 + 1e-9)
    Z = hyperbolic_points(forms, M, D, zmax=R)
    if len(Z):
        Z = Z[np.abs(Z).max(axis=1) <= R]
        Z = Z[cone.contains(Z)]
    return pareto_filter(forms, cone.signs, Z)


def augmentation_points(cone: SimplicialCone, R: int) -> List[Vec]:
    """One far lattice point in the cone near each edge, at sup-norm about 16R."""
    T = AUG_FACTOR * R
    out = []
    if cone.rays is not None:
        for r in cone.rays:
            k = T // max(abs(c) for c in r)
            out.append(tuple(k * c for c in r))
        return out
    D = cone.ray_directions()
    for j in range(3):
        t = D[j] + 0.05 * sum(D[k] for k in range(3) if k != j)
        z = np.rint(T * t / np.abs(t).max()).astype(np.int64)
        if not cone.contains(z[None, :])[0]:
            raise HullDegeneracy("could not place an augmentation point inside the cone")
        out.append(tuple(int(c) for c in z))
    return out


@dataclass
class PatchVertex:
    z: Vec
    certified: bool
    augmented: bool
    frontier: bool


@dataclass
class PatchFace:
    normal: Vec
    vertices: Tuple[int, ...]
    bounded: bool


@dataclass
class EdgeStar:
    vertex: Vec
    directions: Tuple[Vec, ...]
    det: int


@dataclass
class SailPatch:
    cone: SimplicialCone
    R: int
    margin: int
    vertices: List[PatchVertex]
    edges: List[Tuple[int, int, Vec]]
    faces: List[PatchFace]
    hull: Hull3 = field(repr=False)
    _index: Dict[Vec, int] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._index = {v.z: k for k, v in enumerate(self.vertices)}

    @property
    def certified(self) -> List[Vec]:
        return [v.z for v in self.vertices if v.certified]

    def index(self, z: Sequence[int]) -> int:
        key = tuple(int(c) for c in z)
        if key not in self._index:
            raise KeyError(f"{key} is not a vertex of the patch")
        return self._index[key]

    def neighbors(self, z: Sequence[int]) -> List[Vec]:
        k = self.index(z)
        return sorted(self.vertices[b if a == k else a].z for a, b, _ in self.edges if k in (a, b))

    def to_json(self) -> dict:
        stars = {}
        for v in self.vertices:
            if v.certified:
                st = edge_star(self, v.z)
                stars[",".join(map(str, v.z))] = {"directions": [list(d) for d in st.directions], "det": st.det}
        return {
            "cone": self.cone.to_json(),
            "R": self.R,
            "margin": self.margin,
            "vertices": [
                {"z": list(v.z), "certified": v.certified, "augmented": v.augmented, "frontier": v.frontier}
                for v in self.vertices
            ],
            "edges": [{"ends": [a, b], "direction": list(d)} for a, b, d in self.edges],
            "faces": [{"normal": list(f.normal), "vertices": list(f.vertices), "bounded": f.bounded} for f in self.faces],
            "stars": stars,
        }

    def to_off(self) -> str:
        lines = ["OFF", f"{len(self.vertices)} {len(self.faces)} {len(self.edges)}"]
        lines += [" ".join(map(str, v.z)) for v in self.vertices]
        lines += [f"{len(f.vertices)} " + " ".join(map(str, f.vertices)) for f in self.faces]
        return "\n".join(lines) + "\n"


def _on_ray(z: Vec, ray: Vec) -> bool:
    return not any(np.cross(z, ray)) and sum(a * b for a, b in zip(z, ray)) > 0


def build_patch(cone: SimplicialCone, R: int, margin: int = MARGIN) -> SailPatch:
    """Exact truncated Klein polyhedron of the cone within sup-norm radius R."""
    if R < 4:
        raise ValueError("R must be at least 4")
    cand = [tuple(int(c) for c in z) for z in candidate_points(cone, R)]
    aug = augmentation_points(cone, R)
    aug_set = set(aug)
    pts = cand + [a for a in aug if a not in set(cand)]
    hull = convex_hull_3d(pts)

    verts = hull.vertices
    remap = {p: k for k, p in enumerate(verts)}
    zs = [hull.points[p] for p in verts]
    edges = []
    for a, b in hull.edges:
        d = primitive(np.subtract(hull.points[b], hull.points[a]))
        edges.append((remap[a], remap[b], d))
    edges.sort(key=lambda e: (zs[e[0]], zs[e[1]]))
    nbrs: Dict[int, List[int]] = {k: [] for k in range(len(zs))}
    for a, b, _ in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)

    rays = cone.rays or ()
    ray_data = cone.rays if cone.rays is not None else cone.ray_directions()
    # hull normals point outward, away from the polyhedron
    global_face = [supports_sail([-c for c in nv], -off, ray_data, R) for nv, off in zip(hull.normals, hull.offsets)]
    vertices = []
    for k, z in enumerate(zs):
        is_aug = z in aug_set
        frontier = False
        for u in nbrs[k]:
            zu = zs[u]
            if zu in aug_set:
                if not any(_on_ray(z, r) and _on_ray(zu, r) for r in rays):
                    frontier = True
            elif max(abs(c) for c in zu) * 2 > R:
                frontier = True
        deep = max(abs(c) for c in z) * margin <= R
        exact = all(global_face[f] for f in hull.faces_of(verts[k]))
        vertices.append(PatchVertex(z, deep and not is_aug and exact, is_aug, frontier))

    faces = []
    for ring, normal in zip(hull.faces, hull.normals):
        idx = tuple(remap[p] for p in ring)
        faces.append(PatchFace(normal, idx, not any(zs[i] in aug_set for i in idx)))
    return SailPatch(cone, R, margin, vertices, edges, faces, hull)


def mirror_patch(patch: SailPatch) -> SailPatch:
    """The patch of the opposite cone, which is the point reflection of this one."""
    neg = lambda v: tuple(-c for c in v)
    cone = SimplicialCone(patch.cone.forms, neg(patch.cone.signs), [neg(r) for r in patch.cone.rays] if patch.cone.rays else None)
    verts = [PatchVertex(neg(v.z), v.certified, v.augmented, v.frontier) for v in patch.vertices]
    edges = [(a, b, neg(d)) for a, b, d in patch.edges]
    # reflection reverses orientation, so rings and triangles are reversed too
    faces = [PatchFace(neg(f.normal), f.vertices[::-1], f.bounded) for f in patch.faces]
    h = patch.hull
    hull = Hull3(
        [neg(p) for p in h.points],
        [f[::-1] for f in h.faces],
        [neg(n) for n in h.normals],
        list(h.offsets),
        [(a, c, b) for a, b, c in h.triangles],
    )
    return SailPatch(cone, patch.R, patch.margin, verts, edges, faces, hull)


def orthant_patches(forms: FormMatrix, R: int, margin: int = MARGIN) -> Dict[Tuple[int, int, int], SailPatch]:
    """Patches for all 8 sign patterns; the four with a negative first sign are mirrored."""
    out = {}
    for s in itertools.product((1, -1), repeat=2):
        sig = (1, *s)
        out[sig] = build_patch(SimplicialCone(forms, sig), R, margin)
        out[tuple(-c for c in sig)] = mirror_patch(out[sig])
    return dict(sorted(out.items(), reverse=True))


# -- stars ----------------------------------------------------------------

def det_star(star) -> int:
    """Sum of ``|det(r_i, r_j, r_k)|`` over all triples of star directions."""
    dirs = star.directions if isinstance(star, EdgeStar) else star
    return sum(abs(_det3(a, b, c)) for a, b, c in itertools.combinations(dirs, 3))


def edge_star(patch: SailPatch, z: Sequence[int]) -> EdgeStar:
    k = patch.index(z)
    v = patch.vertices[k]
    if not v.certified:
        raise UncertifiedVertex(f"{v.z} is not certified at R={patch.R}")
    dirs = []
    for a, b, d in patch.edges:
        if a == k:
            dirs.append(d)
        elif b == k:
            dirs.append(tuple(-c for c in d))
    dirs = tuple(sorted(dirs))
    return EdgeStar(v.z, dirs, det_star(dirs))


def zonotope_volume(directions: Sequence[Sequence[int]]) -> Fraction:
    """Volume of the Minkowski sum of segments ``[0, r_i]``, from an exact hull."""
    dirs = [tuple(int(c) for c in r) for r in directions]
    if len(dirs) > 16:
        raise ValueError("at most 16 directions")
    sums = set()
    for mask in itertools.product((0, 1), repeat=len(dirs)):
        sums.add(tuple(sum(r[i] for r, m in zip(dirs, mask) if m) for i in range(3)))
    try:
        return abs(convex_hull_3d(sorted(sums)).volume)
    except HullDegeneracy:
        return Fraction(0)


def patch_json(patch: SailPatch) -> str:
    return json.dumps(patch.to_json(), indent=2, sort_keys=True)
