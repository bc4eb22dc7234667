"""Nonnegative extended-real values.

Lagrangians and energies here take values in [0, +inf) together with a
PlusInfinity element.  Infinities are produced by explicit domain
predicates upstream, never by floating overflow, so a plain float with
``math.inf`` as the infinite element is a faithful carrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class ExtendedValue:
    """A value in [0, +inf].

    Arithmetic follows the conservative convention 0 * PlusInfinity =
    PlusInfinity: an infinite Lagrangian factor on a non-null set must
    never be silently cancelled by a vanishing weight.
    """

    value: float

    def __post_init__(self) -> None:
        v = float(self.value)
        if math.isnan(v):
            raise ValueError("ExtendedValue cannot be NaN")
        if v < 0.0:
            raise ValueError(f"ExtendedValue must be nonnegative, got {v!r}")
        object.__setattr__(self, "value", v)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def __float__(self) -> float:
        return self.value

    def __add__(self, other: "ExtendedValue | float") -> "ExtendedValue":
        other = as_extended(other)
        if self.is_infinite or other.is_infinite:
            return PLUS_INFINITY
        return ExtendedValue(self.value + other.value)

    __radd__ = __add__

    def __mul__(self, other: "ExtendedValue | float") -> "ExtendedValue":
        other = as_extended(other)
        # 0 * inf = inf, by convention
        if self.is_infinite or other.is_infinite:
            return PLUS_INFINITY
        return ExtendedValue(self.value * other.value)

    __rmul__ = __mul__

    def __le__(self, other: "ExtendedValue | float") -> bool:
        return self.value <= float(as_extended(other))

    def __lt__(self, other: "ExtendedValue | float") -> bool:
        return self.value < float(as_extended(other))

    def __ge__(self, other: "ExtendedValue | float") -> bool:
        return self.value >= float(as_extended(other))

    def __gt__(self, other: "ExtendedValue | float") -> bool:
        return self.value > float(as_extended(other))

    def __repr__(self) -> str:
        if self.is_infinite:
            return "PlusInfinity"
        return f"ExtendedValue({self.value!r})"

    def to_json(self) -> float | str:
        return "inf" if self.is_infinite else self.value

    @staticmethod
    def from_json(obj: float | str) -> "ExtendedValue":
        if obj == "inf":
            return PLUS_INFINITY
        return ExtendedValue(float(obj))


PLUS_INFINITY = ExtendedValue(math.inf)
ZERO = ExtendedValue(0.0)


def finite(v: float) -> ExtendedValue:
    """A checked finite nonnegative value."""
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"expected a finite value, got {v!r}")
    return ExtendedValue(v)


def as_extended(x: "ExtendedValue | float") -> ExtendedValue:
    if isinstance(x, ExtendedValue):
        return x
    return ExtendedValue(float(x))
