"""Exact arithmetic primitives: unbounded naturals and rationals in lowest terms.

Naturals are plain Python ints (arbitrary precision). Rationals are
fractions.Fraction values, which maintain lowest terms and a positive
denominator by construction. Nothing here ever touches a float.
"""

from __future__ import annotations

import math
from fractions import Fraction

Nat = int
Rat = Fraction

__all__ = [
    "Nat",
    "Rat",
    "rat_normalize",
    "rat_add",
    "rat_sum",
    "nat_gcd",
    "nat_valuation",
    "format_rat",
    "parse_rat",
]


def rat_normalize(p: int, q: int) -> Fraction:
    """Rational p/q reduced to lowest terms with positive denominator."""
    if q == 0:
        raise ValueError("invalid denominator: q = 0")
    return Fraction(p, q)


def rat_add(a: Fraction, b: Fraction) -> Fraction:
    """Exact sum of two rationals, already normalized."""
    return a + b


def rat_sum(values) -> Fraction:
    """Exact sum of an iterable of rationals by balanced reduction.

    A left fold drags the accumulated denominator through every addition,
    which is quadratic-ish on large families of unit fractions; pairwise
    reduction keeps intermediates small. The result is identical.
    """
    vals = list(values)
    if not vals:
        return Fraction(0)
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


def nat_gcd(a: int, b: int) -> int:
    """Greatest common divisor; gcd(0, b) = b."""
    if a < 0 or b < 0:
        raise ValueError("gcd arguments must be nonnegative")
    return math.gcd(a, b)


def nat_valuation(p: int, m: int) -> int:
    """Largest k with p^k dividing m.

    Requires p >= 2 and m >= 1; anything else has no well-defined answer.
    """
    if p < 2:
        raise ValueError(f"invalid argument: base {p} < 2")
    if m == 0:
        raise ValueError("invalid argument: m = 0")
    k = 0
    while m % p == 0:
        m //= p
        k += 1
    return k


def format_rat(r: Fraction) -> str:
    """Serialize as 'p/q' with decimal strings, denominator always present."""
    return f"{r.numerator}/{r.denominator}"


def parse_rat(s: str) -> Fraction:
    """Parse 'p/q' (or a bare integer) back into an exact rational."""
    s = s.strip()
    if "/" in s:
        p_str, q_str = s.split("/", 1)
        return rat_normalize(int(p_str), int(q_str))
    return Fraction(int(s))
