#!/usr/bin/env python3
# Exact Numerics - arithmetic over Q and Q(sqrt(gamma))

from __future__ import annotations

import math
from fractions import Fraction
from functools import total_ordering
from typing import Iterable, Optional, Union

import mpmath

from debuglin.errors import DomainError

# Working precision (bits) for approximate(); never used by comparisons
APPROX_PREC = 256

RationalLike = Union[int, Fraction, str]

_OPS = ('add', 'sub', 'mul')


def as_rational(value: RationalLike) -> Fraction:
    """Coerce int, Fraction or a 'p/q' string to a canonical Fraction"""
    if isinstance(value, bool):
        raise DomainError(f"boolean is not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as e:
            raise DomainError(f"not a rational: {value!r}") from e
    if isinstance(value, ExactScalar):
        if not value.is_rational:
            raise DomainError(f"irrational value where a rational is required: {value}")
        return value.a
    raise DomainError(f"unsupported rational type: {type(value).__name__}")


def rational_sqrt(q: Fraction) -> Optional[Fraction]:
    """Square root of a non-negative rational if it is rational, else None"""
    q = as_rational(q)
    if q < 0:
        return None
    num_root = math.isqrt(q.numerator)
    den_root = math.isqrt(q.denominator)
    if num_root * num_root == q.numerator and den_root * den_root == q.denominator:
        return Fraction(num_root, den_root)
    return None


def _sign(q: Fraction) -> int:
    return (q > 0) - (q < 0)


@total_ordering
class ExactScalar:
    """
    The value a + b*sqrt(gamma) with a, b, gamma rational and gamma > 0.

    When gamma is the square of a rational the value is stored with b = 0.
    Scalars with different gammas never mix.
    """

    __slots__ = ('_a', '_b', '_gamma')

    def __init__(self, a: RationalLike = 0, b: RationalLike = 0, gamma: RationalLike = 1) -> None:
        a = as_rational(a)
        b = as_rational(b)
        gamma = as_rational(gamma)
        if gamma <= 0:
            raise DomainError(f"gamma must be positive, got {gamma}")
        if b:
            root = rational_sqrt(gamma)
            if root is not None:
                a, b = a + b * root, Fraction(0)
        self._a = a
        self._b = b
        self._gamma = gamma

    @property
    def a(self) -> Fraction:
        return self._a

    @property
    def b(self) -> Fraction:
        return self._b

    @property
    def gamma(self) -> Fraction:
        return self._gamma

    @property
    def is_rational(self) -> bool:
        return self._b == 0

    @classmethod
    def zero(cls, gamma: RationalLike = 1) -> ExactScalar:
        return cls(0, 0, gamma)

    @classmethod
    def root(cls, gamma: RationalLike) -> ExactScalar:
        """sqrt(gamma) itself"""
        return cls(0, 1, gamma)

    def normalized(self) -> ExactScalar:
        return self.__class__(self._a, self._b, self._gamma)

    def conjugate(self) -> ExactScalar:
        return self.__class__(self._a, -self._b, self._gamma)

    def norm(self) -> Fraction:
        """a^2 - gamma*b^2, the product with the conjugate"""
        return self._a * self._a - self._gamma * self._b * self._b

    def sign(self) -> int:
        return scalar_sign(self)

    def approximate(self, prec: int = APPROX_PREC) -> mpmath.mpf:
        with mpmath.workprec(prec):
            value = mpmath.mpf(self._a.numerator) / self._a.denominator
            if self._b:
                root = mpmath.sqrt(mpmath.mpf(self._gamma.numerator) / self._gamma.denominator)
                value += mpmath.mpf(self._b.numerator) / self._b.denominator * root
            return +value

    def _coerce(self, other) -> Optional[ExactScalar]:
        if isinstance(other, ExactScalar):
            if other._gamma != self._gamma:
                raise DomainError(
                    f"gamma mismatch: {self._gamma} vs {other._gamma}"
                )
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.__class__(other, 0, self._gamma)
        return None

    def __repr__(self) -> str:
        return f"ExactScalar({self._a}, {self._b}, gamma={self._gamma})"

    def __str__(self) -> str:
        return format_scalar(self)

    def __hash__(self) -> int:
        if self._b == 0:
            return hash(self._a)
        return hash((self._a, self._b, self._gamma))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, ExactScalar):
            if self._b == 0 and other._b == 0:
                return self._a == other._a
            return (self._a, self._b, self._gamma) == (other._a, other._b, other._gamma)
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self._b == 0 and self._a == other
        return NotImplemented

    def __lt__(self, other) -> bool:
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return scalar_sign(scalar_arith(self, 'sub', rhs)) < 0

    def __bool__(self) -> bool:
        return bool(self._a) or bool(self._b)

    def __neg__(self) -> ExactScalar:
        return self.__class__(-self._a, -self._b, self._gamma)

    def __abs__(self) -> ExactScalar:
        return -self if scalar_sign(self) < 0 else self

    def __add__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return scalar_arith(self, 'add', rhs)

    __radd__ = __add__

    def __sub__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return scalar_arith(self, 'sub', rhs)

    def __rsub__(self, other):
        lhs = self._coerce(other)
        if lhs is None:
            return NotImplemented
        return scalar_arith(lhs, 'sub', self)

    def __mul__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return scalar_arith(self, 'mul', rhs)

    __rmul__ = __mul__

    def __truediv__(self, other):
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return scalar_div(self, rhs)

    def __rtruediv__(self, other):
        lhs = self._coerce(other)
        if lhs is None:
            return NotImplemented
        return scalar_div(lhs, self)


def scalar_arith(lhs: ExactScalar, op: str, rhs: ExactScalar) -> ExactScalar:
    """Exact add, sub or mul of two scalars sharing one gamma"""
    if op not in _OPS:
        raise DomainError(f"unknown operation {op!r}, expected one of {_OPS}")
    if lhs.gamma != rhs.gamma:
        raise DomainError(f"gamma mismatch: {lhs.gamma} vs {rhs.gamma}")
    gamma = lhs.gamma
    a1, b1, a2, b2 = lhs.a, lhs.b, rhs.a, rhs.b
    # Rational fast path
    if not b1 and not b2:
        if op == 'add':
            return ExactScalar(a1 + a2, 0, gamma)
        if op == 'sub':
            return ExactScalar(a1 - a2, 0, gamma)
        return ExactScalar(a1 * a2, 0, gamma)
    if op == 'add':
        return ExactScalar(a1 + a2, b1 + b2, gamma)
    if op == 'sub':
        return ExactScalar(a1 - a2, b1 - b2, gamma)
    return ExactScalar(a1 * a2 + gamma * b1 * b2, a1 * b2 + a2 * b1, gamma)


def scalar_div(lhs: ExactScalar, rhs: ExactScalar) -> ExactScalar:
    """lhs / rhs via the conjugate of rhs"""
    if lhs.gamma != rhs.gamma:
        raise DomainError(f"gamma mismatch: {lhs.gamma} vs {rhs.gamma}")
    if not rhs:
        raise DomainError("division by zero")
    if not rhs.b:
        return ExactScalar(lhs.a / rhs.a, lhs.b / rhs.a, lhs.gamma)
    num = scalar_arith(lhs, 'mul', rhs.conjugate())
    den = rhs.norm()
    return ExactScalar(num.a / den, num.b / den, lhs.gamma)


def scalar_sign(v: ExactScalar) -> int:
    """Exact sign of a + b*sqrt(gamma)"""
    sa = _sign(v.a)
    sb = _sign(v.b)
    if sb == 0:
        return sa
    if sa == 0 or sa == sb:
        return sb
    # Opposite signs: the larger square wins
    return sa * _sign(v.a * v.a - v.gamma * v.b * v.b)


def scalar(value, gamma: RationalLike = 1) -> ExactScalar:
    """Lift an int, Fraction, 'p/q' string or ExactScalar into Q(sqrt(gamma))"""
    if isinstance(value, ExactScalar):
        if value.gamma != as_rational(gamma):
            raise DomainError(f"gamma mismatch: {value.gamma} vs {gamma}")
        return value
    return ExactScalar(as_rational(value), 0, gamma)


def vector(values: Iterable, gamma: RationalLike = 1) -> tuple[ExactScalar, ...]:
    return tuple(scalar(v, gamma) for v in values)


def format_rational(q: Fraction) -> str:
    """Canonical text form: 'p' or 'p/q'"""
    q = as_rational(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_scalar(v: ExactScalar) -> str:
    """Human-readable exact form, e.g. '1/2 + 3*sqrt(2)'"""
    if not v.b:
        return format_rational(v.a)
    root = f"sqrt({format_rational(v.gamma)})"
    coef = '' if abs(v.b) == 1 else f"{format_rational(abs(v.b))}*"
    if not v.a:
        return f"{'-' if v.b < 0 else ''}{coef}{root}"
    op = '-' if v.b < 0 else '+'
    return f"{format_rational(v.a)} {op} {coef}{root}"


def format_approx(v: ExactScalar, digits: int = 6) -> str:
    return mpmath.nstr(v.approximate(), digits)
