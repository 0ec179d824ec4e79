"""Exact dyadic geometry on the half line.

Points are binary rationals ``n * 2**-J`` held as integers, so the dyadic
distance is computed with shifts and XOR and never touches floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Union

__all__ = [
    "DyadicInterval",
    "DyadicPoint",
    "DeltaValue",
    "IdenticalPointsError",
    "smallest_common_interval",
    "dyadic_distance",
    "shell_measure",
    "delta_power_integral",
    "ball_constant",
    "tail_constant",
]


class IdenticalPointsError(ValueError):
    pass


@dataclass(frozen=True)
class DyadicInterval:
    """``I^j_k = [k 2^-j, (k+1) 2^-j)``."""

    level: int
    position: int

    def __post_init__(self):
        if self.position < 0:
            raise ValueError("dyadic intervals live in [0, inf): position must be >= 0")

    @property
    def length(self) -> Fraction:
        return Fraction(2) ** -self.level

    @property
    def left(self) -> Fraction:
        return self.position * self.length

    @property
    def right(self) -> Fraction:
        return (self.position + 1) * self.length

    @property
    def parent(self) -> "DyadicInterval":
        return DyadicInterval(self.level - 1, self.position // 2)

    @property
    def is_left_half(self) -> bool:
        return self.position % 2 == 0

    def children(self) -> tuple["DyadicInterval", "DyadicInterval"]:
        return (DyadicInterval(self.level + 1, 2 * self.position),
                DyadicInterval(self.level + 1, 2 * self.position + 1))

    def contains(self, other: Union["DyadicInterval", "DyadicPoint"]) -> bool:
        if isinstance(other, DyadicPoint):
            return self.left <= other.value < self.right
        if other.level < self.level:
            return False
        return other.position >> (other.level - self.level) == self.position

    def intersects(self, other: "DyadicInterval") -> bool:
        return self.contains(other) or other.contains(self)


@dataclass(frozen=True)
class DyadicPoint:
    """The binary rational ``numerator * 2**-exponent``, stored in lowest terms."""

    numerator: int
    exponent: int = 0

    def __post_init__(self):
        n, J = self.numerator, self.exponent
        if n < 0:
            raise ValueError("points must be nonnegative")
        if n == 0:
            J = 0
        else:
            tz = (n & -n).bit_length() - 1
            n >>= tz
            J -= tz
        object.__setattr__(self, "numerator", n)
        object.__setattr__(self, "exponent", J)

    @classmethod
    def of(cls, x) -> "DyadicPoint":
        """Exact conversion from int, float, Fraction or DyadicPoint."""
        if isinstance(x, DyadicPoint):
            return x
        if isinstance(x, float):
            if not math.isfinite(x):
                raise ValueError("point must be finite")
            x = Fraction(*x.as_integer_ratio())
        x = Fraction(x)
        den = x.denominator
        if den & (den - 1):
            raise ValueError(f"{x} is not a binary rational")
        return cls(x.numerator, den.bit_length() - 1)

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator) / Fraction(2) ** self.exponent

    def __float__(self) -> float:
        return math.ldexp(self.numerator, -self.exponent)

    def scale(self, j: int) -> "DyadicPoint":
        """``2**j * x``."""
        return DyadicPoint(self.numerator, self.exponent - j)

    def aligned(self, exponent: int) -> int:
        """Numerator at resolution ``exponent``; requires exponent >= self.exponent."""
        return self.numerator << (exponent - self.exponent)


@total_ordering
@dataclass(frozen=True)
class DeltaValue:
    """A value of the dyadic distance: ``2**exponent``, or zero when exponent is None."""

    exponent: int | None

    @classmethod
    def zero(cls) -> "DeltaValue":
        return cls(None)

    @property
    def is_zero(self) -> bool:
        return self.exponent is None

    @property
    def value(self) -> Fraction:
        if self.exponent is None:
            return Fraction(0)
        return Fraction(2) ** self.exponent

    def __float__(self) -> float:
        return 0.0 if self.exponent is None else math.ldexp(1.0, self.exponent)

    def __lt__(self, other: "DeltaValue") -> bool:
        if not isinstance(other, DeltaValue):
            return NotImplemented
        if other.exponent is None:
            return False
        if self.exponent is None:
            return True
        return self.exponent < other.exponent

    def scale(self, j: int) -> "DeltaValue":
        return self if self.exponent is None else DeltaValue(self.exponent + j)


def _common(x: DyadicPoint, y: DyadicPoint) -> tuple[int, int, int]:
    J = max(x.exponent, y.exponent)
    return x.aligned(J), y.aligned(J), J


def smallest_common_interval(x, y) -> DyadicInterval:
    """The smallest dyadic interval holding both points; they sit in different halves of it."""
    x, y = DyadicPoint.of(x), DyadicPoint.of(y)
    a, b, J = _common(x, y)
    s = (a ^ b).bit_length()
    if s == 0:
        raise IdenticalPointsError("identical points")
    return DyadicInterval(J - s, a >> s)


def dyadic_distance(x, y) -> DeltaValue:
    x, y = DyadicPoint.of(x), DyadicPoint.of(y)
    a, b, J = _common(x, y)
    s = (a ^ b).bit_length()
    if s == 0:
        return DeltaValue.zero()
    return DeltaValue(s - J)


def shell_measure(x, m: int) -> float:
    """Lebesgue measure of ``{y : delta(x, y) = 2**m}``; the same for every x."""
    DyadicPoint.of(x)
    return math.ldexp(1.0, m - 1)


def ball_constant(alpha: float) -> float:
    """``c(alpha) = 1 / (2 (1 - 2^-(1+alpha)))`` for alpha > -1."""
    return 0.5 / (1.0 - 2.0 ** -(1.0 + alpha))


def tail_constant(alpha: float) -> float:
    """``c~(alpha) = 1 / (2 (1 - 2^(1+alpha)))`` for alpha < -1."""
    return 0.5 / (1.0 - 2.0 ** (1.0 + alpha))


def _floor_log2(r: float) -> int:
    return math.frexp(r)[1] - 1


def delta_power_integral(alpha: float, r: float, region: str) -> float:
    """Integral of ``delta(x, y)**alpha`` over a delta-ball or its complement.

    ``region="ball"`` integrates over ``{delta(x, y) <= r}`` and
    ``region="tail"`` over ``{delta(x, y) >= r}``. Both are sums of
    ``2**(m - 1) * 2**(alpha m)`` over the shells they contain and are
    evaluated in closed form; divergent cases return ``inf``.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    if region == "ball":
        if alpha <= -1:
            return math.inf
        j0 = _floor_log2(r)
        return ball_constant(alpha) * 2.0 ** ((1.0 + alpha) * j0)
    if region == "tail":
        if alpha >= -1:
            return math.inf
        j1 = _floor_log2(r)
        if math.ldexp(1.0, j1) != r:
            j1 += 1
        return tail_constant(alpha) * 2.0 ** ((1.0 + alpha) * j1)
    raise ValueError(f"unknown region {region!r}; expected 'ball' or 'tail'")
