"""Exact arithmetic for solver values: rationals plus rational multiples of pi.

Geometry answers routinely look like ``4 - pi`` or ``12.566...``; keeping the
rational and the pi part separate lets the deduction engine stay exact until a
final float is demanded.  A value is a :class:`Num` as long as exactness is
representable; any operation that would leave that domain (pi*pi, sqrt of a
non-square, ...) degrades to a plain ``float``.  All helpers accept and return
``Num | float`` ("Value").
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union


@dataclass(frozen=True)
class Num:
    """rat + pi_coef * pi, both parts exact rationals."""

    rat: Fraction = Fraction(0)
    pi_coef: Fraction = Fraction(0)

    def __float__(self) -> float:
        return float(self.rat) + float(self.pi_coef) * math.pi

    def is_rational(self) -> bool:
        return self.pi_coef == 0

    def __repr__(self) -> str:
        if self.pi_coef == 0:
            return f"Num({self.rat})"
        return f"Num({self.rat} + {self.pi_coef}*pi)"


Value = Union[Num, float]

ZERO = Num()
ONE = Num(Fraction(1))
PI = Num(Fraction(0), Fraction(1))


def from_int(n: int) -> Num:
    return Num(Fraction(n))


def from_fraction(q: Fraction) -> Num:
    return Num(q)


def to_float(v: Value) -> float:
    return float(v)


def add(a: Value, b: Value) -> Value:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.rat + b.rat, a.pi_coef + b.pi_coef)
    return to_float(a) + to_float(b)


def sub(a: Value, b: Value) -> Value:
    return add(a, neg(b))


def neg(a: Value) -> Value:
    if isinstance(a, Num):
        return Num(-a.rat, -a.pi_coef)
    return -a


def mul(a: Value, b: Value) -> Value:
    if isinstance(a, Num) and isinstance(b, Num):
        # (r1 + p1*pi)(r2 + p2*pi) stays exact unless a pi^2 term appears.
        if a.pi_coef == 0 or b.pi_coef == 0:
            return Num(a.rat * b.rat, a.rat * b.pi_coef + a.pi_coef * b.rat)
    return to_float(a) * to_float(b)


def div(a: Value, b: Value) -> Value:
    if isinstance(b, Num) and b.rat == 0 and b.pi_coef == 0:
        raise ZeroDivisionError("division by exact zero")
    if isinstance(a, Num) and isinstance(b, Num):
        if b.pi_coef == 0:
            return Num(a.rat / b.rat, a.pi_coef / b.rat)
        if b.rat == 0 and a.rat == 0:
            # (p1*pi)/(p2*pi) is rational.
            return Num(a.pi_coef / b.pi_coef)
    return to_float(a) / to_float(b)


def _rational_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    num = math.isqrt(q.numerator)
    den = math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


def sqrt(a: Value) -> Value:
    if isinstance(a, Num) and a.is_rational():
        root = _rational_sqrt(a.rat)
        if root is not None:
            return Num(root)
    x = to_float(a)
    if x < 0:
        raise ValueError(f"sqrt of negative value {x}")
    return math.sqrt(x)


def pow_(a: Value, b: Value) -> Value:
    if isinstance(b, Num) and b.is_rational() and b.rat.denominator == 1:
        n = b.rat.numerator
        if isinstance(a, Num) and a.is_rational() and -8 <= n <= 8:
            if n >= 0:
                return Num(a.rat**n)
            if a.rat != 0:
                return Num(a.rat**n)
        if isinstance(b, Num) and n == 1:
            return a
    return to_float(a) ** to_float(b)


def is_close(a: Value, b: Value, tol: float = 1e-9) -> bool:
    if isinstance(a, Num) and isinstance(b, Num):
        if a == b:
            return True
    fa, fb = to_float(a), to_float(b)
    return abs(fa - fb) <= tol * max(1.0, abs(fa), abs(fb))
