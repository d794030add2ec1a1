"""Ordinary continued fractions, convergents and the partial-quotient exponent."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import mpmath

from .errors import InsufficientDepth, ParseError, PrecisionExhausted
from .numeric import (
    ExactReal,
    Quadratic,
    Rational,
    as_real,
    quadratic,
)

_iv = mpmath.iv
_iv.prec = 128

RATIONAL = "exact-rational-terminated"
TRUNCATED = "truncated-at-depth"
PERIODIC = "periodic"

# cycle detection keeps expanding past max_terms until a state repeats
_MAX_CYCLE_SEARCH = 200_000


@dataclass(frozen=True)
class ContinuedFraction:
    quotients: Tuple[int, ...]
    termination: str = TRUNCATED
    preperiod: Optional[int] = None
    period: Optional[int] = None

    def __post_init__(self) -> None:
        q = self.quotients
        if not q:
            raise ValueError("a continued fraction needs at least a0")
        if any(a < 1 for a in q[1:]):
            raise ValueError("partial quotients after a0 must be positive")
        if self.termination == RATIONAL and len(q) > 1 and q[-1] < 2:
            raise ValueError("terminated expansion must end with a quotient >= 2")

    def __len__(self) -> int:
        return len(self.quotients)

    def __str__(self) -> str:
        q = self.quotients
        if len(q) == 1:
            return f"[{q[0]}]"
        return f"[{q[0]};" + ",".join(str(a) for a in q[1:]) + "]"

    @classmethod
    def parse(cls, text: str) -> "ContinuedFraction":
        """Read ``[a0;a1,a2,...]`` (tagged as truncated)."""
        s = text.strip()
        if not (s.startswith("[") and s.endswith("]")):
            raise ParseError(f"continued fraction must look like [a0;a1,...], got {text!r}")
        body = s[1:-1]
        head, _, tail = body.partition(";")
        try:
            quotients = [int(head)] + [int(t) for t in tail.split(",") if t.strip()]
        except ValueError:
            raise ParseError(f"non-integer partial quotient in {text!r}") from None
        return cls(tuple(quotients))

    def value(self) -> Fraction:
        """Exact value of the finite expansion."""
        p, q = convergent_pairs(self.quotients)[-1]
        return Fraction(p, q)


@dataclass(frozen=True)
class ConvergentList:
    p: Tuple[int, ...]
    q: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.p)

    def pairs(self) -> List[Tuple[int, int]]:
        return list(zip(self.p, self.q))

    def to_json(self) -> dict:
        return {"p": [str(v) for v in self.p], "q": [str(v) for v in self.q]}


@dataclass
class ExponentEstimate:
    """A finite-range proxy for a limsup exponent.

    ``history`` holds the value after each prefix (depth for continued
    fractions, dyadic radius for lattices); ``enclosure`` is a rigorous
    interval around ``value``.
    """

    value: float
    enclosure: Tuple[float, float]
    witness: object = None
    history: List[Tuple[float, float]] = field(default_factory=list)
    depth: float = 0
    running_max: float = 0.0

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "enclosure": list(self.enclosure),
            "witness": _jsonable(self.witness),
            "depth": self.depth,
            "running_max": self.running_max,
            "history": [list(h) for h in self.history],
        }


def _jsonable(obj: object) -> object:
    if isinstance(obj, tuple):
        return [_jsonable(x) for x in obj]
    return obj


# -- expansion ---------------------------------------------------------------

def _expand_rational(x: Fraction, max_terms: int) -> ContinuedFraction:
    num, den = x.numerator, x.denominator
    out: List[int] = []
    while len(out) < max_terms:
        a, r = divmod(num, den)
        out.append(a)
        if r == 0:
            return ContinuedFraction(tuple(out), RATIONAL)
        num, den = den, r
    return ContinuedFraction(tuple(out), TRUNCATED)


def _surd_state(x: Quadratic) -> Tuple[int, int, int]:
    """Write x = (P + sqrt(D)) / Q with Q | D - P^2."""
    lcm = math.lcm(x.a.denominator, x.b.denominator)
    A, B = int(x.a * lcm), int(x.b * lcm)
    D = B * B * x.d
    P, Q = (A, lcm) if B > 0 else (-A, -lcm)
    if (D - P * P) % Q:
        P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
    return P, Q, D


def _surd_floor(P: int, Q: int, D: int, root: int) -> int:
    if Q > 0:
        return (P + root) // Q
    return -((P + root) // -Q) - 1


def _expand_quadratic(x: Quadratic, max_terms: int) -> ContinuedFraction:
    P, Q, D = _surd_state(x)
    root = math.isqrt(D)
    seen = {}
    out: List[int] = []
    k = 0
    while True:
        state = (P, Q)
        if state in seen:
            pre = seen[state]
            per = k - pre
            while len(out) < max_terms:
                out.append(out[pre + (len(out) - pre) % per])
            return ContinuedFraction(tuple(out[:max_terms]), PERIODIC, pre, per)
        seen[state] = k
        a = _surd_floor(P, Q, D, root)
        out.append(a)
        P = a * Q - P
        Q = (D - P * P) // Q
        k += 1
        if k > max(max_terms, _MAX_CYCLE_SEARCH):
            return ContinuedFraction(tuple(out[:max_terms]), TRUNCATED)


def _certified_floor(x: ExactReal) -> int:
    bits = 16
    while True:
        lo, hi = x.enclosure(bits)
        flo = math.floor(lo)
        if flo == math.floor(hi):
            return flo
        if bits >= x.max_bits:
            raise PrecisionExhausted(f"cannot separate value from the integer {math.floor(hi)}")
        bits = min(x.max_bits, bits * 2)


def _expand_interval(x: ExactReal, max_terms: int) -> ContinuedFraction:
    out: List[int] = []
    while len(out) < max_terms:
        a = _certified_floor(x)
        out.append(a)
        if len(out) == max_terms:
            break
        x = (x - a).reciprocal()
    return ContinuedFraction(tuple(out), TRUNCATED)


def cf_expand(x: ExactReal | int | Fraction, max_terms: int) -> ContinuedFraction:
    """Canonical expansion of ``x`` with at most ``max_terms`` partial quotients."""
    if max_terms < 1:
        raise ValueError("max_terms must be positive")
    x = as_real(x)
    if isinstance(x, Rational):
        return _expand_rational(x.value, max_terms)
    if isinstance(x, Quadratic):
        return _expand_quadratic(x, max_terms)
    return _expand_interval(x, max_terms)


def convergent_pairs(quotients: Sequence[int]) -> List[Tuple[int, int]]:
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    out = []
    for a in quotients:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
    return out


def convergents(cf: ContinuedFraction) -> ConvergentList:
    pairs = convergent_pairs(cf.quotients)
    return ConvergentList(tuple(p for p, _ in pairs), tuple(q for _, q in pairs))


def mu_estimate(cf: ContinuedFraction) -> ExponentEstimate:
    """``2 + max log a_{n+1} / log q_n`` over the available depth (``q_n >= 2``)."""
    a = cf.quotients
    if len(a) < 3:
        raise InsufficientDepth(f"need at least 3 partial quotients, got {len(a)}")
    q = convergents(cf).q
    best = _iv.mpf(0)
    best_mid = 0.0
    witness = None
    history = []
    for n in range(len(a) - 1):
        if q[n] >= 2:
            r = _iv.log(a[n + 1]) / _iv.log(q[n])
            mid = float(r.mid)
            if witness is None or mid > best_mid:
                best, best_mid, witness = r, mid, n
        history.append((n, 2.0 + best_mid))
    lo, hi = (float(best.a), float(best.b)) if witness is not None else (0.0, 0.0)
    return ExponentEstimate(
        value=2.0 + best_mid,
        enclosure=(2.0 + lo, 2.0 + hi),
        witness=witness,
        history=history,
        depth=len(a),
        running_max=2.0 + best_mid,
    )


# -- builders ---------------------------------------------------------------

def denominator_growth_cf(depth: int, prefix: Sequence[int] = (1, 1)) -> ContinuedFraction:
    """Expansion with each new quotient equal to the latest denominator, a_{n+1} = q_n."""
    quotients = list(prefix)
    while len(quotients) < depth:
        quotients.append(convergent_pairs(quotients)[-1][1])
    return ContinuedFraction(tuple(quotients[:depth]))


def periodic_value(preperiod: Sequence[int], period: Sequence[int]) -> ExactReal:
    """Exact quadratic irrational ``[preperiod; period, period, ...]``."""
    if not period or any(a < 1 for a in period):
        raise ValueError("period must be a nonempty list of positive quotients")
    pairs = convergent_pairs(period)
    P1, Q1 = pairs[-1]
    P0, Q0 = pairs[-2] if len(pairs) > 1 else (1, 0)
    # y = (P1 y + P0) / (Q1 y + Q0)  =>  Q1 y^2 + (Q0 - P1) y - P0 = 0
    b = Q0 - P1
    disc = b * b + 4 * Q1 * P0
    y = quadratic(Fraction(-b, 2 * Q1), Fraction(1, 2 * Q1), disc)
    if not preperiod:
        return y
    pairs = convergent_pairs(preperiod)
    p, q = pairs[-1]
    p_prev, q_prev = pairs[-2] if len(pairs) > 1 else (1, 0)
    return (y * p + p_prev) / (y * q + q_prev)
