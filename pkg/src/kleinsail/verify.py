"""Executable checks around edge-star determinants of 3D Klein polyhedra.

* hyperbolic normalization of a vertex and the sup-norm shortest-vector test,
* scans of ``det St_w * Pi(w)^(3/2)`` over certified vertices,
* finite-radius comparison of the lattice exponent with ``log det St / log|v|``,
* the cone spanned by ``(n,1,0), (0,n,1), (1,0,n)``, whose vertex (1,1,1) has a
  large star determinant while ``Pi`` stays bounded away from zero.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from .errors import (
    DegenerateForm,
    NoCertifiedVertices,
    PerturbationTooLarge,
    UncertifiedVertex,
    ZeroCoordinate,
)
from .klein3d import (
    SailPatch,
    SimplicialCone,
    build_patch,
    edge_star,
    orthant_patches,
)
from .lattice import LatticeSpec, _down, _iv_span, _up, box_points, omega_estimate
from .numeric import ExactReal, Rational, as_real, format_real, parse_real, quadratic

_iv = mpmath.iv
_iv.prec = 128


def _prod(xs):
    return reduce(lambda a, b: a * b, xs)


def _enc(x: ExactReal):
    lo, hi = x.enclosure(120)
    return _iv_span(lo, hi)


def _pair(i) -> Tuple[float, float]:
    return _down(i.a), _up(i.b)


# -- hyperbolic normalization ----------------------------------------------

@dataclass
class NormalizedVertex:
    """Vertex image w, ``D = diag(Pi(w) / w_i)`` and ``u = D w``.

    ``Lambda_w = D Lambda`` is never built: a point ``A z`` of the lattice
    maps to ``D A z`` whose i-th coordinate has absolute value below
    ``|u_i| = Pi(w)`` exactly when ``|L_i(z)| < |L_i(v)|``.
    """

    lattice: Optional[LatticeSpec]
    z: Optional[Tuple[int, ...]]
    w: Tuple[ExactReal, ...]
    pi_power: ExactReal
    pi: Tuple[float, float]
    diag: List[Tuple[float, float]]
    u: List[Tuple[float, float]]
    det_d: ExactReal

    @property
    def det_is_unit(self) -> bool:
        return (abs(self.det_d) - 1).sign() == 0


def hyperbolic_normalize(lattice: Optional[LatticeSpec], w: Sequence) -> NormalizedVertex:
    """Normalize either a preimage ``z`` (ints, with a lattice) or an explicit image ``w``.

    With a lattice the image is the unnormalized ``A z``; the factor
    ``sigma`` cancels in every ratio ``Pi(w) / w_i``.
    """
    if lattice is not None and all(isinstance(c, (int, np.integer)) for c in w):
        z = tuple(int(c) for c in w)
        image = lattice.forms.apply(z)
    else:
        z = None
        image = tuple(parse_real(c) if isinstance(c, str) else as_real(c) for c in w)
    n = len(image)
    if any(c.sign() == 0 for c in image):
        raise ZeroCoordinate(f"vertex image {tuple(format_real(c) for c in image)} has a zero coordinate")
    prod = _prod(image)
    power = abs(prod)
    pi_iv = _iv.exp(_iv.log(_enc(power)) / n)
    diag, u = [], []
    for c in image:
        d = pi_iv / _enc(c)
        diag.append(_pair(d))
        u.append(_pair(d * _enc(c)))
    # det D = Pi^n / prod(w_i) = |prod| / prod
    det_d = Rational(prod.sign())
    nv = NormalizedVertex(lattice, z, image, power, _pair(pi_iv), diag, u, det_d)
    for lo, hi in u:
        if not (lo <= float(pi_iv.b) and hi >= float(pi_iv.a)):
            raise AssertionError("u does not have all coordinates equal to Pi(w)")
    return nv


@dataclass
class ShortestResult:
    ok: bool
    witness: Optional[Tuple[int, ...]]
    ties: List[Tuple[int, ...]]
    searched: int

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "witness": list(self.witness) if self.witness else None,
            "ties": [list(t) for t in self.ties],
            "searched": self.searched,
        }


def shortest_vector_check(nv: NormalizedVertex, search_scale: float = 2.0) -> ShortestResult:
    """Is ``u`` a shortest nonzero vector of ``Lambda_w`` in the sup-norm?

    Every lattice point in the box of ``search_scale`` times ``|u|`` is
    enumerated.  A violation is a point other than ``0, +-u`` with every
    coordinate strictly shorter than ``|u|``; other points on the boundary
    of the ``|u|``-cube are reported as ties.
    """
    if nv.lattice is None or nv.z is None:
        raise ValueError("shortest_vector_check needs a vertex given by its preimage")
    if search_scale < 2:
        raise ValueError("search_scale must be at least 2")
    forms = nv.lattice.forms
    y = [abs(float(c)) for c in nv.w]
    Z = box_points(forms, np.array(y) * search_scale * (1 + 1e-9))
    v = np.array(nv.z)
    Z = Z[np.any(Z != 0, axis=1) & np.any(Z != v, axis=1) & np.any(Z != -v, axis=1)]
    vals, errs = forms.values(Z)
    lim = np.array(y)
    absv = np.abs(vals)
    maybe = np.all(absv - errs <= lim * (1 + 1e-12), axis=1)
    witness, ties = None, []
    for k in np.nonzero(maybe)[0]:
        image = forms.apply(Z[k])
        cmp = [(abs(a) - abs(b)).sign() for a, b in zip(image, nv.w)]
        if all(c < 0 for c in cmp):
            witness = tuple(int(c) for c in Z[k])
            break
        if all(c <= 0 for c in cmp):
            ties.append(tuple(int(c) for c in Z[k]))
    return ShortestResult(witness is None, witness, ties, len(Z))


# -- star determinant scans ----------------------------------------------------

@dataclass
class Prop1Record:
    cone: Tuple[int, int, int]
    v: Tuple[int, int, int]
    w: Tuple[str, ...]
    pi_cubed: ExactReal
    pi: Tuple[float, float]
    det_st: int
    ratio: Tuple[float, float]
    norm: Tuple[float, float]
    in_range: bool

    def csv_row(self) -> List[str]:
        return [
            " ".join(map(str, self.cone)),
            " ".join(map(str, self.v)),
            format_real(self.pi_cubed),
            repr(self.pi[0]),
            repr(self.pi[1]),
            str(self.det_st),
            repr(self.ratio[0]),
            repr(self.ratio[1]),
            repr(self.norm[0]),
            str(self.in_range).lower(),
        ]


CSV_HEADER = ["cone", "v", "pi_cubed", "pi_lo", "pi_hi", "det_st", "ratio_lo", "ratio_hi", "norm_lo", "in_range"]


@dataclass
class Prop1Scan:
    records: List[Prop1Record]
    c_emp: Optional[Tuple[float, float]]
    R: int

    @property
    def positive(self) -> bool:
        return all(r.ratio[0] > 0 for r in self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(CSV_HEADER)
        for r in self.records:
            wr.writerow(r.csv_row())
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "R": self.R,
            "c_emp": list(self.c_emp) if self.c_emp else None,
            "positive": self.positive,
            "records": [
                {
                    "cone": list(r.cone),
                    "v": list(r.v),
                    "w": list(r.w),
                    "pi_cubed": format_real(r.pi_cubed),
                    "pi": list(r.pi),
                    "det_st": r.det_st,
                    "ratio": list(r.ratio),
                    "norm": list(r.norm),
                    "in_range": r.in_range,
                }
                for r in self.records
            ],
        }


def _record(lattice: LatticeSpec, patch: SailPatch, z) -> Prop1Record:
    image = lattice.forms.apply(z)
    if any(c.sign() == 0 for c in image):
        raise DegenerateForm(f"a form vanishes at the vertex {z}")
    n = lattice.n
    pi_cubed = abs(_prod(image)) / lattice.abs_det
    pc = _enc(pi_cubed)
    pi = _iv.exp(_iv.log(pc) / n)
    det = edge_star(patch, z).det
    # ratio = det * Pi^(3/2) = det * sqrt(Pi^3)
    ratio = det * _iv.sqrt(pc)
    logs = [_iv.log(_enc(abs(c))) for c in image]
    log_norm = _iv.mpf([max(l.a for l in logs), max(l.b for l in logs)]) - lattice.log_abs_det / n
    norm = _iv.exp(log_norm)
    in_range = any((abs(c) ** n - lattice.abs_det).sign() > 0 for c in image)
    return Prop1Record(
        patch.cone.signs, tuple(z), tuple(format_real(c) for c in image), pi_cubed,
        _pair(pi), det, _pair(ratio), _pair(norm), in_range,
    )


def scan_patches(lattice: LatticeSpec, R: int) -> Dict[Tuple[int, int, int], SailPatch]:
    if lattice.n != 3:
        raise ValueError("star scans need a 3D lattice")
    return orthant_patches(lattice.forms, R)


def prop1_scan(lattice: LatticeSpec, R: int, patches: Optional[Dict] = None) -> Prop1Scan:
    """One record per certified vertex; ``c_emp`` is the smallest ratio over ``|w| > 1``."""
    patches = patches or scan_patches(lattice, R)
    records = []
    for signs, patch in patches.items():
        for z in patch.certified:
            records.append(_record(lattice, patch, z))
    if not records:
        raise NoCertifiedVertices(f"no certified vertex at R={R}")
    ranged = [r for r in records if r.in_range]
    c_emp = None
    if ranged:
        best = min(ranged, key=lambda r: r.ratio[0])
        c_emp = best.ratio
    return Prop1Scan(records, c_emp, R)


@dataclass
class Theorem1Report:
    R: int
    lhs: float
    lhs_enclosure: Tuple[float, float]
    lhs_running_max: float
    rhs: float
    rhs_enclosure: Tuple[float, float]
    rhs_witness: Optional[Tuple[int, ...]]
    margin: float
    c_emp: Optional[Tuple[float, float]]
    chain: List[dict] = field(default_factory=list)

    @property
    def chain_ok(self) -> bool:
        return all(c["holds"] for c in self.chain)

    def to_json(self) -> dict:
        return {
            "R": self.R,
            "lhs": self.lhs,
            "lhs_enclosure": list(self.lhs_enclosure),
            "lhs_running_max": self.lhs_running_max,
            "rhs": self.rhs,
            "rhs_enclosure": list(self.rhs_enclosure),
            "rhs_witness": list(self.rhs_witness) if self.rhs_witness else None,
            "margin": self.margin,
            "c_emp": list(self.c_emp) if self.c_emp else None,
            "chain_ok": self.chain_ok,
            "chain": self.chain,
        }


def theorem1_report(lattice: LatticeSpec, R: int, scan: Optional[Prop1Scan] = None) -> Theorem1Report:
    """Both sides of the exponent bound at radius R, plus the per-vertex chain.

    LHS is the vertex-restricted exponent scan; RHS is
    ``(2/3) max log det St_v / log|v|`` over certified v with ``|v| > 1``.
    For each record with ``|w| > 1`` the chain checks
    ``log(1/Pi) / log|w| <= (2/3) (log det St + log(1/c_emp)) / log|w|``.
    """
    scan = scan or prop1_scan(lattice, R)
    verts = [r.v for r in scan.records]
    om = omega_estimate(lattice, R, restrict_to=verts)
    best, enc, witness = 0.0, (0.0, 0.0), None
    seen = set()
    for r in scan.records:
        size = max(abs(c) for c in r.v)
        if size <= 1 or r.v in seen:
            continue
        seen.add(r.v)
        q = _iv.mpf(2) / 3 * _iv.log(r.det_st) / _iv.log(size)
        if witness is None or float(q.mid) > best:
            best, enc, witness = float(q.mid), _pair(q), r.v
    chain = []
    if scan.c_emp is not None:
        c_lo = _iv.mpf(scan.c_emp[0])
        for r in scan.records:
            if not r.in_range:
                continue
            log_w = _iv.log(_iv.mpf(list(r.norm)))
            lhs = -_iv.log(_iv.mpf(list(r.pi))) / log_w
            rhs = _iv.mpf(2) / 3 * (_iv.log(r.det_st) - _iv.log(c_lo)) / log_w
            chain.append({"v": list(r.v), "lhs": float(lhs.mid), "rhs": float(rhs.mid), "holds": bool(lhs.a <= rhs.b)})
    return Theorem1Report(R, om.value, om.enclosure, om.running_max, best, enc, witness, best - om.value, scan.c_emp, chain)


# -- the explicit cone -------------------------------------------------------

def counterexample_rays(n: int) -> List[Tuple[int, int, int]]:
    return [(n, 1, 0), (0, n, 1), (1, 0, n)]


def counterexample_matrix(n: int) -> List[List[int]]:
    """Unscaled integer forms vanishing on two of the three rays each; det = (n^3+1)^2."""
    return [[n * n, 1, -n], [-n, n * n, 1], [1, -n, n * n]]


# square roots of distinct primes; any row over them is Q-independent of 1
_PRIMES = ((2, 3, 5), (7, 11, 13), (17, 19, 23))


def perturbed_matrix(n: int, eps: Fraction) -> List[List[ExactReal]]:
    """``M + eps * S`` with ``S_ij = sqrt(p_ij)``: no form vanishes at a nonzero integer point."""
    M = counterexample_matrix(n)
    eps = Fraction(eps)
    return [
        [quadratic(M[i][j], eps, _PRIMES[i][j]) if eps else Rational(M[i][j]) for j in range(3)]
        for i in range(3)
    ]


def perturbed_lattice(n: int, eps: Optional[Fraction] = None) -> LatticeSpec:
    eps = Fraction(1, 100 * n * n) if eps is None else Fraction(eps)
    return LatticeSpec(perturbed_matrix(n, eps))


@dataclass
class CounterexampleReport:
    n: int
    rays: List[Tuple[int, int, int]]
    v: Tuple[int, int, int]
    det_st: int
    star: List[Tuple[int, int, int]]
    bounded_faces: List[List[Tuple[int, int, int]]]
    faces_ok: bool
    product: Fraction
    eps: Fraction
    star_preserved: Optional[bool]
    R: int

    @property
    def ok(self) -> bool:
        n = self.n
        return (
            self.faces_ok
            and self.det_st == (n - 1) ** 3 - 1
            and self.product == Fraction((n * n - n + 1) ** 3, (n**3 + 1) ** 2)
            and self.star_preserved is not False
        )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "rays": [list(r) for r in self.rays],
            "v": list(self.v),
            "det_st": self.det_st,
            "star": [list(d) for d in self.star],
            "bounded_faces": len(self.bounded_faces),
            "bounded_face_vertices": [[list(p) for p in f] for f in self.bounded_faces],
            "faces_ok": self.faces_ok,
            # unreduced closed form (n^2-n+1)^3 / (n^3+1)^2 next to the reduced value
            "pi_cubed": f"{(self.n**2 - self.n + 1) ** 3}/{(self.n**3 + 1) ** 2}",
            "pi_cubed_reduced": f"{self.product.numerator}/{self.product.denominator}",
            "eps": f"{self.eps.numerator}/{self.eps.denominator}" if self.eps else "0",
            "star_preserved": self.star_preserved,
            "R": self.R,
            "ok": self.ok,
        }


def counterexample_build(n: int, eps: Fraction = Fraction(0), R: Optional[int] = None) -> CounterexampleReport:
    """Build the cone and its sail, and verify faces, star determinant and product at (1,1,1)."""
    if n < 3:
        raise ValueError("n must be at least 3")
    eps = Fraction(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    R = R or 20 * n
    rays = counterexample_rays(n)
    v = (1, 1, 1)
    patch = build_patch(SimplicialCone.from_rays(rays), R)
    star = edge_star(patch, v)
    bounded = sorted(
        sorted(patch.vertices[i].z for i in f.vertices) for f in patch.faces if f.bounded
    )
    e1, e2, e3 = rays
    expected = sorted(sorted(t) for t in ((v, e1, e2), (v, e2, e3), (v, e3, e1)))
    M = counterexample_matrix(n)
    images = [sum(a * b for a, b in zip(row, v)) for row in M]
    det_m = (n**3 + 1) ** 2
    product = Fraction(abs(images[0] * images[1] * images[2]), det_m)

    preserved = None
    if eps > 0:
        lat = LatticeSpec(perturbed_matrix(n, eps))
        p2 = build_patch(SimplicialCone(lat.forms, (1, 1, 1)), R)
        try:
            st2 = edge_star(p2, v)
        except (KeyError, UncertifiedVertex) as exc:
            raise PerturbationTooLarge(f"(1,1,1) is no longer a certified vertex at eps={eps}: {exc}") from None
        if st2.directions != star.directions:
            first = next(
                (sorted(p2.vertices[i].z for i in f.vertices) for f in p2.faces if p2.index(v) in f.vertices and f.bounded),
                None,
            )
            raise PerturbationTooLarge(f"edge star at (1,1,1) changed at eps={eps}; first face {first}")
        preserved = True
    return CounterexampleReport(n, rays, v, star.det, list(star.directions), bounded, bounded == expected, product, eps, preserved, R)


# -- lattice suites ------------------------------------------------------------

# (a, b, c, d) per row: row = (1, a + b sqrt 2, c + d sqrt 3)
_QUAD_ROWS = [
    ((0, 1, 0, 1), (1, -1, 0, 2), (-1, 2, 1, -1)),
    ((1, 1, 0, -1), (0, 2, 1, 1), (2, -1, -1, 1)),
    ((0, 1, 1, 1), (1, 1, -1, 1), (-1, -1, 0, 2)),
    ((2, 1, 0, 1), (0, -1, 1, 1), (1, 1, 2, -1)),
    ((0, 3, 1, -1), (1, -2, 0, 1), (0, 1, -1, 2)),
    ((-1, 1, 1, 1), (2, 1, -2, 1), (0, -1, 1, -1)),
    ((1, 2, 0, 1), (-1, 1, 1, -2), (0, 1, 2, 1)),
    ((0, 1, -1, 1), (1, 3, 0, -1), (2, -1, 1, 1)),
]


def quadratic_lattice(k: int) -> LatticeSpec:
    """Rows ``(1, a + b sqrt 2, c + d sqrt 3)``; with b, d nonzero no form vanishes on Z^3 minus 0."""
    rows = []
    for a, b, c, d in _QUAD_ROWS[k % len(_QUAD_ROWS)]:
        rows.append([Rational(1), quadratic(a, b, 2), quadratic(c, d, 3)])
    return LatticeSpec(rows)


def lattice_suite() -> List[Tuple[str, LatticeSpec]]:
    """Perturbed cone family for n = 3..6 at three perturbation sizes, plus eight quadratic lattices."""
    out = []
    for n in range(3, 7):
        for scale in (1, 2, 4):
            eps = Fraction(1, 100 * n * n * scale)
            out.append((f"cone-n{n}-eps{eps.numerator}/{eps.denominator}", perturbed_lattice(n, eps)))
    for k in range(len(_QUAD_ROWS)):
        out.append((f"quadratic-{k}", quadratic_lattice(k)))
    return out
