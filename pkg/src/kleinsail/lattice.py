"""Full-rank lattices ``A Z^n`` (n = 2, 3), the form product Pi, and exponent scans.

Every geometric decision (is a form positive, is a point inside a radius)
is made first in floating point with a certified error bound and falls
back to :mod:`kleinsail.numeric` only when the bound cannot decide.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from .contfrac import ExponentEstimate
from .errors import DegenerateForm, EmptyRange
from .numeric import ExactReal, Rational, as_real, format_real, parse_real

_iv = mpmath.iv
_iv.prec = 128

# relative slack for float box bounds; exact checks always follow
_SLACK = 1e-7
# bound on the rounding error of a float dot product of length <= 3, relative to sum |a_i z_i|
_DOT_REL = 1e-15

Entry = Union[ExactReal, int, Fraction, str]


def _iv_span(lo: Fraction, hi: Fraction):
    """Interval enclosing the rational range [lo, hi]."""
    a = _iv.mpf(lo.numerator) / lo.denominator
    b = _iv.mpf(hi.numerator) / hi.denominator
    return _iv.mpf([a.a, b.b])


def _down(x) -> float:
    return math.nextafter(float(x), -math.inf)


def _up(x) -> float:
    return math.nextafter(float(x), math.inf)


def _to_real(x: Entry) -> ExactReal:
    return parse_real(x) if isinstance(x, str) else as_real(x)


def _det(m: Sequence[Sequence[ExactReal]]) -> ExactReal:
    if len(m) == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def adjugate(m: Sequence[Sequence[ExactReal]]) -> List[List[ExactReal]]:
    """Adjugate (transpose of the cofactor matrix); ``A @ adj(A) = det(A) I``."""
    n = len(m)
    if n == 2:
        return [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]]
    cof = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            c = [k for k in range(3) if k != j]
            minor = m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]
            cof[i][j] = minor if (i + j) % 2 == 0 else -minor
    return [[cof[j][i] for j in range(3)] for i in range(3)]


class FormMatrix:
    """Square matrix whose rows are the coefficients of linear forms L_1..L_n."""

    def __init__(self, rows: Sequence[Sequence[Entry]]) -> None:
        self.rows: Tuple[Tuple[ExactReal, ...], ...] = tuple(
            tuple(_to_real(x) for x in row) for row in rows
        )
        self.n = len(self.rows)
        if self.n not in (2, 3) or any(len(r) != self.n for r in self.rows):
            raise ValueError("form matrix must be 2x2 or 3x3")
        self.det = _det(self.rows)
        if self.det.sign() == 0:
            raise ValueError("form matrix is singular")
        approx = [[x.approx() for x in row] for row in self.rows]
        self.mid = np.array([[a for a, _ in row] for row in approx], dtype=float)
        self.err = np.array([[e for _, e in row] for row in approx], dtype=float)
        self._bound_coef = self.err + _DOT_REL * np.abs(self.mid)

    @classmethod
    def from_text(cls, rows: Sequence[Sequence[str]]) -> "FormMatrix":
        return cls(rows)

    def to_text(self) -> List[List[str]]:
        return [[format_real(x) for x in row] for row in self.rows]

    def __repr__(self) -> str:
        return f"FormMatrix({self.to_text()})"

    @property
    def is_rational(self) -> bool:
        return all(isinstance(x, Rational) for row in self.rows for x in row)

    @cached_property
    def integer_rows(self) -> Optional[List[List[int]]]:
        """Rows scaled by positive integers to integer coefficients (rational forms only)."""
        if not self.is_rational:
            return None
        out = []
        for row in self.rows:
            den = reduce(math.lcm, (x.value.denominator for x in row), 1)
            out.append([int(x.value * den) for x in row])
        return out

    @cached_property
    def inv_mid(self) -> np.ndarray:
        return np.linalg.inv(self.mid)

    @cached_property
    def abs_det(self) -> ExactReal:
        return abs(self.det)

    def apply(self, z: Sequence[int]) -> Tuple[ExactReal, ...]:
        """Exact images ``(L_1(z), ..., L_n(z))``."""
        return tuple(sum((a * int(zi) for a, zi in zip(row, z)), Rational(0)) for row in self.rows)

    def values(self, Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Float images of the rows of ``Z`` and certified absolute error bounds."""
        Zf = np.asarray(Z, dtype=float).reshape(-1, self.n)
        vals = Zf @ self.mid.T
        errs = (np.abs(Zf) @ self._bound_coef.T) * (1 + 1e-9) + 1e-300
        return vals, errs

    def int_values(self, Z: np.ndarray) -> np.ndarray:
        """Exact integer images under :attr:`integer_rows` (rational forms only)."""
        M = self.integer_rows
        assert M is not None
        Z = np.asarray(Z).reshape(-1, self.n)
        bound = max(abs(v) for row in M for v in row) * (int(np.abs(Z).max(initial=0)) + 1) * self.n
        if bound < 2**62:
            return Z.astype(np.int64) @ np.array(M, dtype=np.int64).T
        Zo = Z.astype(object)
        return Zo @ np.array(M, dtype=object).T

    def signs(self, Z: np.ndarray) -> np.ndarray:
        """Exact signs of every form at every row of ``Z``."""
        Z = np.asarray(Z).reshape(-1, self.n)
        if self.is_rational:
            return np.sign(self.int_values(Z)).astype(np.int64)
        vals, errs = self.values(Z)
        out = np.where(vals > errs, 1, np.where(vals < -errs, -1, 0)).astype(np.int64)
        for k, i in zip(*np.nonzero(np.abs(vals) <= errs)):
            out[k, i] = self.apply(Z[k])[i].sign()
        return out


@dataclass(frozen=True)
class PiValue:
    """``Pi(x) = |x_1 ... x_n|^(1/n)``; ``power`` is the exact n-th power."""

    power: ExactReal
    value: float
    enclosure: Tuple[float, float]


def pi_value(x: Sequence[Entry], n: Optional[int] = None) -> PiValue:
    xs = [_to_real(v) for v in x]
    n = n or len(xs)
    if n != len(xs) or n not in (2, 3):
        raise ValueError("pi_value needs 2 or 3 coordinates")
    prod = reduce(lambda a, b: a * b, xs)
    power = abs(prod) if prod.sign() else Rational(0)
    lo, hi = power.enclosure(120)
    a = _iv.exp(_iv.log(_iv_span(lo, lo)) / n).a if lo > 0 else 0.0
    b = _iv.exp(_iv.log(_iv_span(hi, hi)) / n).b
    return PiValue(power, float(power) ** (1.0 / n), (_down(a), _up(b)))


class LatticeSpec:
    """The lattice ``A Z^n`` normalized by ``sigma = |det A|^(-1/n)``.

    ``sigma`` is never materialized as a number: normalized quantities are
    compared through n-th powers (``|sigma x|^n = |x|^n / |det A|``) and
    logarithms carry ``-log|det A| / n`` as an additive correction.
    """

    def __init__(self, forms: Union[FormMatrix, Sequence[Sequence[Entry]]]) -> None:
        self.forms = forms if isinstance(forms, FormMatrix) else FormMatrix(forms)
        self.n = self.forms.n
        self.abs_det = self.forms.abs_det
        lo, hi = self.abs_det.enclosure(120)
        self.log_abs_det = _iv.log(_iv_span(lo, hi))
        self.abs_det_float = float(self.abs_det)
        self.sigma = self.abs_det_float ** (-1.0 / self.n)
        self.log_sigma = -math.log(self.abs_det_float) / self.n

    def __repr__(self) -> str:
        return f"LatticeSpec({self.forms.to_text()})"

    def point(self, z: Sequence[int]) -> "LatticePoint":
        z = tuple(int(v) for v in z)
        image = self.forms.apply(z)
        prod = reduce(lambda a, b: a * b, image)
        power = abs(prod) / self.abs_det if prod.sign() else Rational(0)
        fl = [abs(float(v)) for v in image]
        norm = max(fl) * self.sigma
        pi = float(power) ** (1.0 / self.n)
        return LatticePoint(z, image, norm, pi, power)

    def radius_bounds(self, R: float) -> np.ndarray:
        """Unnormalized half-widths (slightly widened) of the normalized ball of radius R."""
        return np.full(self.n, float(R) / self.sigma * (1 + 1e-9))

    def within(self, Z: np.ndarray, R: Union[int, Fraction]) -> np.ndarray:
        """Exact mask of rows with normalized sup-norm ``<= R``."""
        Z = np.asarray(Z).reshape(-1, self.n)
        if len(Z) == 0:
            return np.zeros(0, dtype=bool)
        vals, errs = self.forms.values(Z)
        lim = float(R) / self.sigma
        absv = np.abs(vals)
        inside = np.all(absv + errs <= lim * (1 - 1e-12), axis=1)
        outside = np.any(absv - errs > lim * (1 + 1e-12), axis=1)
        unsure = ~inside & ~outside
        bound = as_real(Fraction(R)) ** self.n * self.abs_det
        for k in np.nonzero(unsure)[0]:
            image = self.forms.apply(Z[k])
            inside[k] = all((bound - abs(v) ** self.n).sign() >= 0 for v in image)
        return inside

    def pi_below_one(self, Z: np.ndarray) -> np.ndarray:
        """Exact mask of rows with normalized ``Pi < 1`` (i.e. ``|prod L| < |det|``)."""
        Z = np.asarray(Z).reshape(-1, self.n)
        if len(Z) == 0:
            return np.zeros(0, dtype=bool)
        vals, errs = self.forms.values(Z)
        absv = np.abs(vals)
        hi = np.prod(absv + errs, axis=1) * (1 + 1e-12)
        lo = np.prod(np.maximum(absv - errs, 0), axis=1) * (1 - 1e-12)
        D = self.abs_det_float
        below = hi < D * (1 - 1e-12)
        unsure = ~below & ~(lo > D * (1 + 1e-12))
        for k in np.nonzero(unsure)[0]:
            image = self.forms.apply(Z[k])
            prod = reduce(lambda a, b: a * b, image)
            below[k] = (self.abs_det - abs(prod)).sign() > 0
        return below


@dataclass(frozen=True)
class LatticePoint:
    z: Tuple[int, ...]
    image: Tuple[ExactReal, ...]
    norm: float
    pi: float
    pi_power: ExactReal

    def csv_row(self, digits: int = 17) -> List[str]:
        coords = [mpmath.nstr(mpmath.mpf(float(v)), digits) for v in self.image]
        return [*(str(v) for v in self.z), *coords, repr(self.pi), repr(self.norm)]


# -- enumeration ----------------------------------------------------------

def box_points(
    forms: FormMatrix,
    half_widths: Sequence[float],
    zmax: Optional[int] = None,
) -> np.ndarray:
    """Integer points z with ``|L_i(z)| <= half_widths[i]`` (a superset, never missing one).

    The preimage of the box is sliced along its longest coordinate: for each
    choice of the other coordinates every form gives an interval for the
    remaining one.  Rows come back sorted lexicographically.
    """
    n = forms.n
    X = np.asarray(half_widths, dtype=float)
    B = np.floor(np.abs(forms.inv_mid) @ X * (1 + 1e-6) + 1).astype(np.int64)
    if zmax is not None:
        B = np.minimum(B, int(zmax))
    c = int(np.argmax(B))
    outer = [j for j in range(n) if j != c]
    axes = [np.arange(-B[j], B[j] + 1, dtype=np.int64) for j in outer]
    O = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    chunks = []
    step = 1 << 18
    for s in range(0, len(O), step):
        chunks.append(_slice(forms, X, O[s : s + step], outer, c, B[c]))
    pts = np.concatenate(chunks) if chunks else np.zeros((0, n), dtype=np.int64)
    if len(pts):
        pts = pts[np.lexsort(pts.T[::-1])]
    return pts


def _slice(forms: FormMatrix, X: np.ndarray, O: np.ndarray, outer: List[int], c: int, Bc: int) -> np.ndarray:
    A = forms.mid
    Of = O.astype(float)
    lo = np.full(len(O), -Bc, dtype=np.int64)
    hi = np.full(len(O), Bc, dtype=np.int64)
    for i in range(forms.n):
        a = A[i, c]
        if a == 0.0:
            continue
        coef = A[i, outer]
        rest = Of @ coef
        slack = _SLACK * (X[i] + np.abs(Of) @ np.abs(coef) + abs(a) * Bc) + 1e-9
        l = (-X[i] - rest - slack) / a
        h = (X[i] - rest + slack) / a
        if a < 0:
            l, h = h, l
        lo = np.maximum(lo, np.ceil(l).astype(np.int64))
        hi = np.minimum(hi, np.floor(h).astype(np.int64))
    counts = np.maximum(hi - lo + 1, 0)
    total = int(counts.sum())
    n = forms.n
    out = np.empty((total, n), dtype=np.int64)
    if total == 0:
        return out
    rep = np.repeat(np.arange(len(O)), counts)
    starts = np.repeat(np.cumsum(counts) - counts, counts)
    out[:, c] = np.repeat(lo, counts) + (np.arange(total) - starts)
    for k, j in enumerate(outer):
        out[:, j] = O[rep, k]
    return out


def hyperbolic_boxes(M: Sequence[float], D: float) -> List[np.ndarray]:
    """Boxes covering ``{y : |y_i| <= M_i, |y_1 ... y_n| <= D}``.

    Each of the first n-1 coordinates runs over dyadic levels; the last
    coordinate gets whatever the product bound leaves.
    """
    M = [float(m) for m in M]
    n = len(M)
    total = math.prod(M)
    levels = []
    for i in range(n - 1):
        K = math.ceil(math.log2(M[i])) if M[i] > 0 else 0
        others = total / M[i] if M[i] > 0 else math.inf
        k_lo = math.floor(math.log2(D / others)) if D > 0 and others < math.inf else K
        k_lo = min(k_lo, K)
        levels.append([(k, k == k_lo) for k in range(k_lo, K + 1)])
    boxes = []
    for combo in itertools.product(*levels):
        X = []
        lower = 1.0
        for i, (k, bottom) in enumerate(combo):
            X.append(min(M[i], 2.0**k))
            lower = 0.0 if bottom else lower * 2.0 ** (k - 1)
        X.append(M[-1] if lower == 0.0 else min(M[-1], D / lower))
        boxes.append(np.array(X) * (1 + 1e-9))
    return boxes


def hyperbolic_points(
    forms: FormMatrix,
    M: Sequence[float],
    D: float,
    zmax: Optional[int] = None,
) -> np.ndarray:
    """Superset of the nonzero integer points with ``|L_i| <= M_i`` and ``|prod L_i| <= D``."""
    parts = [box_points(forms, X, zmax) for X in hyperbolic_boxes(M, D)]
    pts = np.concatenate(parts) if parts else np.zeros((0, forms.n), dtype=np.int64)
    pts = np.unique(pts, axis=0)
    pts = pts[np.any(pts != 0, axis=1)]
    if len(pts):
        vals, errs = forms.values(pts)
        lo = np.prod(np.maximum(np.abs(vals) - errs, 0.0), axis=1)
        pts = pts[lo <= D * (1 + 1e-9)]
    return pts


def _images(forms: FormMatrix, Z: np.ndarray, signs: Sequence[int]):
    """Sign-adjusted images (nonnegative in the cone): exact ints or (float, err)."""
    s = np.array(signs)
    if forms.is_rational:
        return forms.int_values(Z) * s, None
    vals, errs = forms.values(Z)
    return vals * s, errs


def pareto_filter(forms: FormMatrix, signs: Sequence[int], Z: np.ndarray) -> np.ndarray:
    """Drop points z with ``z - s`` in the cone for another candidate s; such z are never vertices."""
    if len(Z) < 2:
        return Z
    Y, E = _images(forms, Z, signs)
    order = np.argsort(Y.astype(float).sum(axis=1), kind="stable")
    Z, Y = Z[order], Y[order]
    E = E[order] if E is not None else None
    keep = np.ones(len(Z), dtype=bool)
    kept: List[int] = []
    for k in range(len(Z)):
        # candidates with a smaller or equal image sum come first
        if kept:
            prev = np.array(kept)
            diff = Y[k] - Y[prev]
            if E is None:
                dom = np.all(diff >= 0, axis=1)
            else:
                dom = np.all(diff > E[k] + E[prev], axis=1)
            if dom.any():
                keep[k] = False
                continue
        kept.append(k)
    out = Z[keep]
    return out[np.lexsort(out.T[::-1])]


def enumerate_points(
    lattice: LatticeSpec,
    R: Union[int, Fraction],
    strict: bool = False,
) -> Iterator[LatticePoint]:
    """Nonzero points of the normalized lattice with sup-norm ``<= R``, lexicographic in z."""
    if R < 1:
        raise ValueError("R must be at least 1")
    Z = box_points(lattice.forms, lattice.radius_bounds(R))
    Z = Z[np.any(Z != 0, axis=1)]
    Z = Z[lattice.within(Z, R)]
    if strict and len(Z):
        zero = np.any(lattice.forms.signs(Z) == 0, axis=1)
        if zero.any():
            raise DegenerateForm(f"a form vanishes at {tuple(int(v) for v in Z[np.argmax(zero)])}")
    for z in Z:
        yield lattice.point(z)


def points_csv(points: Iterable[LatticePoint], digits: int = 17) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    first = True
    for p in points:
        if first:
            n = len(p.z)
            w.writerow([f"z{i+1}" for i in range(n)] + [f"x{i+1}" for i in range(n)] + ["pi", "norm"])
            first = False
        w.writerow(p.csv_row(digits))
    return buf.getvalue()


# -- exponent scan ----------------------------------------------------------

def _exponent_enclosure(lattice: LatticeSpec, z: Sequence[int]) -> Tuple[float, float]:
    """Rigorous enclosure of ``log(1/Pi(x)) / log|x|`` for the normalized point x = A z."""
    image = lattice.forms.apply(z)
    logs = []
    for v in image:
        lo, hi = abs(v).enclosure(100)
        logs.append(_iv.log(_iv_span(lo, hi)))
    n = lattice.n
    log_pi = (sum(logs[1:], logs[0]) - lattice.log_abs_det) / n
    # log of the sup-norm: interval-wise max of the enclosures
    log_norm = _iv.mpf([max(l.a for l in logs), max(l.b for l in logs)])
    log_norm = log_norm - lattice.log_abs_det / n
    r = -log_pi / log_norm
    return _down(r.a), _up(r.b)


def omega_estimate(
    lattice: LatticeSpec,
    R: Union[int, Fraction],
    restrict_to: Optional[Iterable[Sequence[int]]] = None,
    tail: float = 2.0,
    clamp: bool = True,
) -> ExponentEstimate:
    """Finite-radius proxy for the Diophantine exponent of the normalized lattice.

    The value is ``max log(1/Pi(x)) / log|x|`` over lattice points in the
    outer shell ``R/tail < |x| <= R`` (and ``|x| > 1``), clamped at 0.
    Only points with ``Pi(x) < 1`` can contribute, so the scan covers the
    hyperbolic region ``|x_1...x_n| < |det|`` instead of the whole ball.
    ``running_max`` is the same maximum over ``2 < |x| <= R``; it is
    nondecreasing in R.  Points with ``|x|`` close to 1 are left out since
    there ``log|x|`` is tiny and the ratio says nothing about growth.
    ``restrict_to`` limits the scan to given preimages.
    """
    if R < 2:
        raise ValueError("R must be at least 2")
    forms = lattice.forms
    if restrict_to is None:
        Z = hyperbolic_points(forms, lattice.radius_bounds(R), lattice.abs_det_float * (1 + 1e-9))
    else:
        Z = np.array([tuple(int(v) for v in z) for z in restrict_to], dtype=np.int64).reshape(-1, lattice.n)
        Z = Z[np.any(Z != 0, axis=1)]
    if len(Z):
        Z = Z[lattice.within(Z, R)]
    if len(Z):
        if np.any(forms.signs(Z) == 0):
            raise DegenerateForm("a form vanishes at a scanned nonzero lattice point")
        Z = Z[lattice.pi_below_one(Z)]
    if len(Z):
        Z = Z[~lattice.within(Z, 1)]

    vals, _ = forms.values(Z)
    absv = np.abs(vals)
    log_norm = np.log(absv.max(axis=1)) + lattice.log_sigma if len(Z) else np.zeros(0)
    log_pi = np.log(absv).sum(axis=1) / lattice.n + lattice.log_sigma if len(Z) else np.zeros(0)
    ratio = -log_pi / log_norm if len(Z) else np.zeros(0)
    norms = np.exp(log_norm)

    def best_in(mask: np.ndarray) -> Tuple[float, Optional[int]]:
        if not mask.any():
            return 0.0, None
        idx = np.nonzero(mask)[0]
        k = idx[np.argmax(ratio[idx])]
        return float(ratio[k]), int(k)

    Rf = float(R)
    value, k_best = best_in(norms > Rf / tail)
    running, _ = best_in(norms > 2.0)
    history = []
    r = 4.0
    while r < Rf:
        history.append((r, max(0.0, best_in((norms > r / tail) & (norms <= r))[0])))
        r *= 2
    history.append((Rf, max(0.0, value)))

    if k_best is None:
        if not clamp:
            raise EmptyRange(f"no lattice point with Pi < 1 in the shell {Rf / tail} < |x| <= {Rf}")
        return ExponentEstimate(0.0, (0.0, 0.0), None, history, Rf, max(0.0, running))
    witness = tuple(int(v) for v in Z[k_best])
    lo, hi = _exponent_enclosure(lattice, witness)
    value = (lo + hi) / 2
    if clamp:
        value, lo, hi = max(value, 0.0), max(lo, 0.0), max(hi, 0.0)
    return ExponentEstimate(value, (lo, hi), witness, history, Rf, max(0.0, running))
