"""Exact real numbers with a reliable sign oracle.

Three variants share the :class:`ExactReal` interface:

* :class:`Rational` wraps a reduced :class:`fractions.Fraction`;
* :class:`Quadratic` is ``a + b*sqrt(d)`` with rational ``a, b`` and square-free ``d >= 2``;
* :class:`IntervalReal` is any other real, given by a generator of nested
  rational enclosures.

Rational and same-field quadratic arithmetic stays exact.  Anything else is
promoted to an :class:`IntervalReal` whose enclosures are computed on demand,
so ``sign`` either answers exactly or raises :class:`PrecisionExhausted`.
"""

from __future__ import annotations

import ast
import math
import re
from fractions import Fraction
from functools import cached_property
from typing import Callable, Tuple, Union

from .errors import ParseError, PrecisionExhausted

DEFAULT_MAX_BITS = 4096

Enclosure = Tuple[Fraction, Fraction]


def set_precision_ceiling(bits: int) -> None:
    """Change the refinement ceiling used by values created from now on."""
    if bits < 64:
        raise ValueError("precision ceiling must be at least 64 bits")
    ExactReal.max_bits = int(bits)

RealLike = Union["ExactReal", int, Fraction]


def _round_down(x: Fraction, k: int) -> Fraction:
    scale = 1 << k
    return Fraction(math.floor(x * scale), scale)


def _round_up(x: Fraction, k: int) -> Fraction:
    scale = 1 << k
    return Fraction(math.ceil(x * scale), scale)


def _magnitude_bits(x: Fraction) -> int:
    """Smallest ``m >= 0`` with ``|x| <= 2**m``."""
    x = abs(x)
    if x <= 1:
        return 0
    return (math.ceil(x) - 1).bit_length()


def squarefree_split(d: int) -> Tuple[int, int]:
    """Return ``(k, r)`` with ``d == k*k*r`` and ``r`` square-free."""
    if d <= 0:
        raise ValueError("radicand must be positive")
    k, r = 1, d
    p = 2
    while p * p <= r:
        while r % (p * p) == 0:
            r //= p * p
            k *= p
        p += 1 if p == 2 else 2
    return k, r


class ExactReal:
    """Common interface of the number tower."""

    max_bits: int = DEFAULT_MAX_BITS

    # -- enclosures -----------------------------------------------------
    def enclosure(self, bits: int) -> Enclosure:
        raise NotImplementedError

    def refine(self, bits: int) -> Enclosure:
        """Closed rational interval of width at most ``2**-bits`` containing the value."""
        if bits < 0:
            raise ValueError("bits must be nonnegative")
        if bits > self.max_bits:
            raise ValueError(f"bits={bits} exceeds the precision ceiling {self.max_bits}")
        return self.enclosure(bits)

    def sign(self) -> int:
        raise NotImplementedError

    @property
    def is_exact(self) -> bool:
        return False

    @cached_property
    def _approx(self) -> Tuple[float, float]:
        lo, hi = self.enclosure(64)
        mid = (lo + hi) / 2
        fmid = float(mid)
        err = max(hi - Fraction(fmid), Fraction(fmid) - lo)
        ferr = float(err)
        if Fraction(ferr) < err:
            ferr = math.nextafter(ferr, math.inf)
        return fmid, ferr

    def approx(self) -> Tuple[float, float]:
        """``(mid, err)`` as floats with ``|value - mid| <= err`` guaranteed."""
        return self._approx

    def __float__(self) -> float:
        return self._approx[0]

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other: RealLike) -> "ExactReal":
        other = as_real(other)
        return _add(self, other)

    __radd__ = __add__

    def __neg__(self) -> "ExactReal":
        raise NotImplementedError

    def __pos__(self) -> "ExactReal":
        return self

    def __sub__(self, other: RealLike) -> "ExactReal":
        return self + (-as_real(other))

    def __rsub__(self, other: RealLike) -> "ExactReal":
        return as_real(other) + (-self)

    def __mul__(self, other: RealLike) -> "ExactReal":
        return _mul(self, as_real(other))

    __rmul__ = __mul__

    def reciprocal(self) -> "ExactReal":
        raise NotImplementedError

    def __truediv__(self, other: RealLike) -> "ExactReal":
        return self * as_real(other).reciprocal()

    def __rtruediv__(self, other: RealLike) -> "ExactReal":
        return as_real(other) * self.reciprocal()

    def __pow__(self, k: int) -> "ExactReal":
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return (self ** (-k)).reciprocal()
        result: ExactReal = ONE
        base: ExactReal = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __abs__(self) -> "ExactReal":
        return -self if self.sign() < 0 else self


class Rational(ExactReal):

    def __init__(self, value: Union[int, Fraction, str]) -> None:
        self.value = Fraction(value)

    @property
    def is_exact(self) -> bool:
        return True

    def enclosure(self, bits: int) -> Enclosure:
        return self.value, self.value

    def sign(self) -> int:
        return (self.value > 0) - (self.value < 0)

    def __neg__(self) -> "Rational":
        return Rational(-self.value)

    def reciprocal(self) -> "Rational":
        if self.value == 0:
            raise ZeroDivisionError("reciprocal of zero")
        return Rational(1 / self.value)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Rational):
            return self.value == other.value
        if isinstance(other, (int, Fraction)):
            return self.value == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("Q", self.value))

    def __repr__(self) -> str:
        return f"Rational({self.value})"

    def __str__(self) -> str:
        return format_real(self)


class Quadratic(ExactReal):
    """``a + b*sqrt(d)``; build through :func:`quadratic` to get normalization."""


    def __init__(self, a: Fraction, b: Fraction, d: int) -> None:
        self.a, self.b, self.d = Fraction(a), Fraction(b), int(d)

    @property
    def is_exact(self) -> bool:
        return True

    def enclosure(self, bits: int) -> Enclosure:
        k = bits + _magnitude_bits(self.b) + 1
        s = math.isqrt(self.d << (2 * k))
        lo_root = Fraction(s, 1 << k)
        hi_root = Fraction(s + 1, 1 << k)
        if self.b > 0:
            return self.a + self.b * lo_root, self.a + self.b * hi_root
        return self.a + self.b * hi_root, self.a + self.b * lo_root

    def sign(self) -> int:
        sa = (self.a > 0) - (self.a < 0)
        sb = (self.b > 0) - (self.b < 0)
        if sa == sb or sa == 0:
            return sb
        # opposite signs: compare a^2 with b^2 d
        lhs, rhs = self.a * self.a, self.b * self.b * self.d
        return sa if lhs > rhs else sb

    def conjugate(self) -> "Quadratic":
        return Quadratic(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        return self.a * self.a - self.b * self.b * self.d

    def __neg__(self) -> "Quadratic":
        return Quadratic(-self.a, -self.b, self.d)

    def reciprocal(self) -> "Quadratic":
        nm = self.norm()
        return Quadratic(self.a / nm, -self.b / nm, self.d)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Quadratic):
            return (self.a, self.b, self.d) == (other.a, other.b, other.d)
        if isinstance(other, (Rational, int, Fraction)):
            return False
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("Q2", self.a, self.b, self.d))

    def __repr__(self) -> str:
        return f"Quadratic({self.a}, {self.b}, {self.d})"

    def __str__(self) -> str:
        return format_real(self)


class IntervalReal(ExactReal):
    """A real known only through rational enclosures.

    ``generator(p)`` must return an enclosure whose width tends to zero as
    ``p`` grows; the enclosures handed out are intersected so they only
    ever shrink.
    """

    def __init__(
        self,
        generator: Callable[[int], Enclosure],
        max_bits: int | None = None,
        label: str = "",
    ) -> None:
        self._generator = generator
        self.max_bits = max_bits or ExactReal.max_bits
        self.label = label
        self._best: Enclosure | None = None

    def _tighten(self, lo: Fraction, hi: Fraction) -> Enclosure:
        if self._best is not None:
            blo, bhi = self._best
            lo, hi = max(lo, blo), min(hi, bhi)
        self._best = (lo, hi)
        return lo, hi

    def enclosure(self, bits: int) -> Enclosure:
        target = Fraction(1, 1 << bits)
        if self._best is not None and self._best[1] - self._best[0] <= target:
            return self._best
        p = bits
        while True:
            lo, hi = self._tighten(*self._generator(p))
            if hi - lo <= target or p > self.max_bits + 64:
                return lo, hi
            p += max(16, p // 2)

    def sign(self) -> int:
        bits = 32
        while True:
            lo, hi = self.enclosure(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            if lo == hi == 0:
                return 0
            if bits >= self.max_bits:
                raise PrecisionExhausted(
                    f"enclosure [{float(lo)}, {float(hi)}] of {self.label or 'value'} "
                    f"still contains 0 at {self.max_bits} bits"
                )
            bits = min(self.max_bits, 2 * bits)

    def __neg__(self) -> "IntervalReal":
        src = self

        def gen(p: int) -> Enclosure:
            lo, hi = src.enclosure(p)
            return -hi, -lo

        return IntervalReal(gen, self.max_bits, f"-({self.label})")

    def reciprocal(self) -> "IntervalReal":
        return _reciprocal(self)

    def __repr__(self) -> str:
        lo, hi = self.enclosure(32)
        return f"IntervalReal({self.label or '?'} in [{float(lo)}, {float(hi)}])"

    def __str__(self) -> str:
        return format_real(self)


ZERO = Rational(0)
ONE = Rational(1)


def as_real(x: RealLike) -> ExactReal:
    if isinstance(x, ExactReal):
        return x
    if isinstance(x, (int, Fraction)):
        return Rational(x)
    raise TypeError(f"cannot convert {type(x).__name__} to ExactReal")


def rational(num: Union[int, Fraction, str], den: int = 1) -> Rational:
    return Rational(Fraction(num) / den)


def quadratic(a: Union[int, Fraction], b: Union[int, Fraction], d: int) -> ExactReal:
    """``a + b*sqrt(d)`` normalized: square factors pulled out, ``b == 0`` gives a Rational."""
    a, b = Fraction(a), Fraction(b)
    if b == 0:
        return Rational(a)
    k, r = squarefree_split(int(d))
    if r == 1:
        return Rational(a + b * k)
    return Quadratic(a, b * k, r)


def sqrt(x: RealLike) -> ExactReal:
    """Square root of a nonnegative rational, exact."""
    x = as_real(x)
    if not isinstance(x, Rational):
        raise TypeError("sqrt is only supported for rational arguments")
    v = x.value
    if v < 0:
        raise ValueError("sqrt of a negative number")
    if v == 0:
        return ZERO
    # sqrt(p/q) = sqrt(p*q)/q
    return quadratic(0, Fraction(1, v.denominator), v.numerator * v.denominator)


def _field(x: ExactReal) -> int | None:
    """1 for rationals, d for Quadratic, None otherwise."""
    if isinstance(x, Rational):
        return 1
    if isinstance(x, Quadratic):
        return x.d
    return None


def _parts(x: ExactReal) -> Tuple[Fraction, Fraction]:
    if isinstance(x, Rational):
        return x.value, Fraction(0)
    assert isinstance(x, Quadratic)
    return x.a, x.b


def _compatible(x: ExactReal, y: ExactReal) -> int | None:
    fx, fy = _field(x), _field(y)
    if fx is None or fy is None:
        return None
    if fx == 1:
        return fy
    if fy == 1 or fx == fy:
        return fx
    return None


def _add(x: ExactReal, y: ExactReal) -> ExactReal:
    d = _compatible(x, y)
    if d == 1:
        return Rational(x.value + y.value)  # type: ignore[attr-defined]
    if d is not None:
        xa, xb = _parts(x)
        ya, yb = _parts(y)
        return quadratic(xa + ya, xb + yb, d)

    def gen(p: int) -> Enclosure:
        xl, xh = x.enclosure(p + 1)
        yl, yh = y.enclosure(p + 1)
        return _round_down(xl + yl, p + 4), _round_up(xh + yh, p + 4)

    return IntervalReal(gen, max(x.max_bits, y.max_bits), "sum")


def _mul(x: ExactReal, y: ExactReal) -> ExactReal:
    d = _compatible(x, y)
    if d == 1:
        return Rational(x.value * y.value)  # type: ignore[attr-defined]
    if d is not None:
        xa, xb = _parts(x)
        ya, yb = _parts(y)
        return quadratic(xa * ya + xb * yb * d, xa * yb + xb * ya, d)
    if isinstance(x, Rational) and x.value == 0 or isinstance(y, Rational) and y.value == 0:
        return ZERO

    mx = max(abs(v) for v in x.enclosure(0))
    my = max(abs(v) for v in y.enclosure(0))
    bx, by = _magnitude_bits(mx + 1), _magnitude_bits(my + 1)

    def gen(p: int) -> Enclosure:
        xl, xh = x.enclosure(p + by + 2)
        yl, yh = y.enclosure(p + bx + 2)
        corners = (xl * yl, xl * yh, xh * yl, xh * yh)
        return _round_down(min(corners), p + 4), _round_up(max(corners), p + 4)

    return IntervalReal(gen, max(x.max_bits, y.max_bits), "product")


def _reciprocal(y: ExactReal) -> ExactReal:
    s = y.sign()
    if s == 0:
        raise ZeroDivisionError("reciprocal of zero")
    bits = 8
    while True:
        lo, hi = y.enclosure(bits)
        if lo > 0 or hi < 0:
            break
        bits *= 2
    m = min(abs(lo), abs(hi))
    mb = _magnitude_bits(1 / m)

    def gen(p: int) -> Enclosure:
        yl, yh = y.enclosure(p + 2 * mb + 2)
        if yl <= 0 <= yh:  # cannot happen after the separation above, kept defensive
            yl, yh = (m, yh) if s > 0 else (yl, -m)
        a, b = 1 / yh, 1 / yl
        return _round_down(min(a, b), p + 4), _round_up(max(a, b), p + 4)

    return IntervalReal(gen, y.max_bits, "reciprocal")


def sign(x: RealLike) -> int:
    return as_real(x).sign()


def compare(x: RealLike, y: RealLike) -> int:
    """-1, 0, +1 as ``x <, ==, > y``; computed as ``sign(x - y)``."""
    return (as_real(x) - as_real(y)).sign()


def refine(x: RealLike, bits: int) -> Enclosure:
    return as_real(x).refine(bits)


def fixed_interval(lo: Fraction, hi: Fraction, label: str = "") -> IntervalReal:
    """An interval real that cannot be refined beyond ``[lo, hi]``."""
    lo, hi = Fraction(lo), Fraction(hi)
    if lo > hi:
        raise ValueError("empty interval")
    return IntervalReal(lambda p: (lo, hi), label=label or "fixed")


# -- text encodings -------------------------------------------------------

def _format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_real(x: ExactReal) -> str:
    """Textual encoding; exact round trip for Rational and Quadratic."""
    if isinstance(x, Rational):
        return _format_fraction(x.value)
    if isinstance(x, Quadratic):
        op = "-" if x.b < 0 else "+"
        return f"{_format_fraction(x.a)}{op}{_format_fraction(abs(x.b))}*sqrt({x.d})"
    lo, hi = x.enclosure(64)
    mid, rad = (lo + hi) / 2, (hi - lo) / 2
    return f"dec:{float(mid)!r}±{float(rad) if rad else 0.0!r}"


_DEC_RE = re.compile(r"^dec:\s*([-+]?[0-9.eE+-]+?)\s*(?:±|\+-|\+/-)\s*([0-9.eE+-]+)\s*$")


def _eval_node(node: ast.AST) -> ExactReal:
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        if isinstance(node.value, bool):
            raise ParseError("booleans are not numbers")
        # floats are read from their literal text, not their binary value
        return Rational(Fraction(repr(node.value)) if isinstance(node.value, float) else node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_node(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
        left, right = _eval_node(node.left), _eval_node(node.right)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            if right.sign() == 0:
                raise ParseError("division by zero")
            return left / right
        if not (isinstance(right, Rational) and right.value.denominator == 1):
            raise ParseError("only integer exponents are supported")
        return left ** int(right.value)
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id == "sqrt"
        and len(node.args) == 1
        and not node.keywords
    ):
        arg = _eval_node(node.args[0])
        if not isinstance(arg, Rational) or arg.value < 0:
            raise ParseError("sqrt needs a nonnegative rational argument")
        return sqrt(arg)
    raise ParseError(f"unsupported syntax: {ast.dump(node)}")


def parse_real(text: str) -> ExactReal:
    """Parse ``p/q``, ``a+b*sqrt(d)`` (any +,-,*,/ expression over these) or ``dec:x±u``."""
    text = text.strip()
    m = _DEC_RE.match(text)
    if m:
        mid, ulp = Fraction(m.group(1)), Fraction(m.group(2))
        if ulp < 0:
            raise ParseError("negative uncertainty")
        if ulp == 0:
            return Rational(mid)
        return fixed_interval(mid - ulp, mid + ulp, label=text)
    if text.startswith("dec:"):
        raise ParseError(f"malformed interval encoding: {text!r}")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}") from None
    return _eval_node(tree)
