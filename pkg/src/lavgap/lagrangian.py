"""Product Lagrangians L(s, y, u) = Lambda(s, y, u) * Psi(s, y).

Both factors are nonnegative and may be extended valued.  Infinite
values are produced by explicit domain predicates (np.where on masks),
never by floating overflow, so PlusInfinity detection downstream is
reliable.  The effective domain of Lambda is assumed to be of product
form I x D: finiteness does not depend on the time variable.

Factor callables are vectorized: lam(s, y, u) and psi(s, y) with
s of shape (m,), y and u of shape (m, n), returning (m,).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .extended import PLUS_INFINITY, ExtendedValue
from .intervals import Interval

LambdaFn = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
PsiFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

BUILTIN_NAMES = ("mania", "alberti_two_endpoint", "alberti_one_endpoint", "power", "arclength")


@dataclass(frozen=True)
class ProductLagrangian:
    name: str
    interval: Interval
    lam: LambdaFn
    psi: PsiFn
    p: float = 1.0
    dimension: int = 1
    domain_hint: str | None = None

    def __post_init__(self) -> None:
        if self.p < 1:
            raise ValueError("Sobolev exponent p must be >= 1")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    def lambda_values(self, s: np.ndarray, y: np.ndarray, u: np.ndarray) -> np.ndarray:
        out = np.asarray(self.lam(s, y, u), dtype=float)
        if np.any(out < 0):
            raise ValueError("Lambda must be nonnegative")
        return out

    def psi_values(self, s: np.ndarray, y: np.ndarray) -> np.ndarray:
        out = np.asarray(self.psi(s, y), dtype=float)
        if np.any(out < 0):
            raise ValueError("Psi must be nonnegative")
        return out

    def product_values(self, s: np.ndarray, y: np.ndarray, u: np.ndarray) -> np.ndarray:
        """L = Lambda * Psi with the conservative 0 * inf = inf rule."""
        lam = self.lambda_values(s, y, u)
        psi = self.psi_values(s, y)
        inf = np.isinf(lam) | np.isinf(psi)
        return np.where(inf, np.inf, np.where(inf, 0.0, lam) * np.where(inf, 0.0, psi))


@dataclass(frozen=True)
class BoundaryData:
    """End-point data: pin the initial point, the final point, or both."""

    kind: str
    X: np.ndarray | None = None
    Y: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("initial", "final", "both"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        for label, vec, needed in (("X", self.X, self.kind in ("initial", "both")),
                                   ("Y", self.Y, self.kind in ("final", "both"))):
            if needed and vec is None:
                raise ValueError(f"boundary kind {self.kind!r} needs {label}")
        if self.X is not None:
            object.__setattr__(self, "X", np.atleast_1d(np.asarray(self.X, dtype=float)))
        if self.Y is not None:
            object.__setattr__(self, "Y", np.atleast_1d(np.asarray(self.Y, dtype=float)))

    @classmethod
    def initial(cls, X) -> "BoundaryData":
        return cls("initial", X=np.atleast_1d(np.asarray(X, dtype=float)))

    @classmethod
    def final(cls, Y) -> "BoundaryData":
        return cls("final", Y=np.atleast_1d(np.asarray(Y, dtype=float)))

    @classmethod
    def both(cls, X, Y) -> "BoundaryData":
        return cls("both", X=np.atleast_1d(np.asarray(X, dtype=float)),
                   Y=np.atleast_1d(np.asarray(Y, dtype=float)))

    def pins_left(self) -> bool:
        return self.kind in ("initial", "both")

    def pins_right(self) -> bool:
        return self.kind in ("final", "both")

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.X is not None:
            out["X"] = self.X.tolist()
        if self.Y is not None:
            out["Y"] = self.Y.tolist()
        return out

    @staticmethod
    def from_json(obj: dict) -> "BoundaryData":
        return BoundaryData(obj["kind"], X=obj.get("X"), Y=obj.get("Y"))


def eval_L(lag: ProductLagrangian, s: float, y, u) -> ExtendedValue:
    """Evaluate the product Lagrangian at a single point."""
    if not lag.interval.contains(s):
        raise ValueError(f"time {s} outside interval [{lag.interval.t}, {lag.interval.T}]")
    sv = np.asarray([s], dtype=float)
    yv = np.atleast_1d(np.asarray(y, dtype=float))[None, :]
    uv = np.atleast_1d(np.asarray(u, dtype=float))[None, :]
    if yv.shape[1] != lag.dimension or uv.shape[1] != lag.dimension:
        raise ValueError("state/velocity dimension mismatch")
    val = float(lag.product_values(sv, yv, uv)[0])
    return PLUS_INFINITY if np.isinf(val) else ExtendedValue(val)


def in_domain(lag: ProductLagrangian, y, u) -> bool:
    """Whether Lambda is finite at (y, u); the probe time is immaterial
    because the effective domain has product form."""
    sv = np.asarray([lag.interval.t], dtype=float)
    yv = np.atleast_1d(np.asarray(y, dtype=float))[None, :]
    uv = np.atleast_1d(np.asarray(u, dtype=float))[None, :]
    return bool(np.isfinite(lag.lambda_values(sv, yv, uv)[0]))


# ---------------------------------------------------------------------------
# built-in problems
# ---------------------------------------------------------------------------

UNIT_INTERVAL = Interval(0.0, 1.0)


def alberti_base_slope(z: np.ndarray) -> np.ndarray:
    """q(z) = 1 / (2 (1 - z)) for z in [0, 1[, +inf at z >= 1.

    This is y'(y^{-1}(z)) for the base trajectory y(s) = 1 - sqrt(1 - s),
    whose inverse is y^{-1}(z) = 1 - (1 - z)^2.
    """
    z = np.asarray(z, dtype=float)
    denom = 2.0 * (1.0 - z)
    with np.errstate(divide="ignore"):
        return np.where(denom > 0.0, 1.0 / np.where(denom > 0.0, denom, 1.0), np.inf)


# The critical-slope comparisons below use the product form
# 2 v (1 - z) <=> 1 with a relative boundary slack: the base trajectory
# lies exactly on the critical slope, and without the slack a 1-ulp
# rounding of 1 - z would flip the predicate on about half the samples.
_SLOPE_SLACK = 1e-9


def _psi_one(s: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.ones_like(np.asarray(s, dtype=float))


def _mania() -> ProductLagrangian:
    def lam(s, y, u):
        return u[:, 0] ** 6

    def psi(s, y):
        return (y[:, 0] ** 3 - s) ** 2

    return ProductLagrangian("mania", UNIT_INTERVAL, lam, psi, p=1.0,
                             domain_hint="real valued")


def _alberti_two_endpoint() -> ProductLagrangian:
    def lam(s, y, u):
        z, v = y[:, 0], u[:, 0]
        in_strip = (z >= 0.0) & (z < 1.0)
        below = 2.0 * v * (1.0 - z) <= 1.0 + _SLOPE_SLACK
        return np.where(~in_strip | below, 0.0, np.inf)

    return ProductLagrangian(
        "alberti_two_endpoint", UNIT_INTERVAL, lam, _psi_one, p=1.0,
        domain_hint="zero iff z outside [0,1) or v <= 1/(2(1-z))")


def _alberti_one_endpoint() -> ProductLagrangian:
    def lam(s, y, u):
        z, v = y[:, 0], u[:, 0]
        in_strip = (z >= 0.0) & (z <= 1.0)
        above = 2.0 * v * (1.0 - z) >= 1.0 - _SLOPE_SLACK
        return np.where(in_strip & above, 0.0, np.inf)

    return ProductLagrangian(
        "alberti_one_endpoint", UNIT_INTERVAL, lam, _psi_one, p=1.0,
        domain_hint="zero iff z in [0,1] and v >= 1/(2(1-z))")


def _power(p: float) -> ProductLagrangian:
    def lam(s, y, u):
        return np.linalg.norm(u, axis=1) ** p

    return ProductLagrangian("power", UNIT_INTERVAL, lam, _psi_one, p=p,
                             domain_hint="real valued")


def _arclength() -> ProductLagrangian:
    def lam(s, y, u):
        return np.sqrt(1.0 + np.linalg.norm(u, axis=1) ** 2)

    return ProductLagrangian("arclength", UNIT_INTERVAL, lam, _psi_one, p=1.0,
                             domain_hint="real valued")


def builtin(name: str, params: dict | None = None) -> ProductLagrangian:
    """Return a named built-in problem Lagrangian."""
    params = dict(params or {})
    if name == "mania":
        return _mania()
    if name == "alberti_two_endpoint":
        return _alberti_two_endpoint()
    if name == "alberti_one_endpoint":
        return _alberti_one_endpoint()
    if name == "power":
        return _power(float(params.pop("p", 2.0)))
    if name == "arclength":
        return _arclength()
    raise ValueError(f"unknown builtin Lagrangian {name!r}; choose from {BUILTIN_NAMES}")


def validate_product_form(
    lag: ProductLagrangian, rng: np.random.Generator, n_points: int = 100, n_time_pairs: int = 10,
    state_radius: float = 2.0, velocity_radius: float = 4.0,
) -> bool:
    """Sampled check that finiteness of Lambda does not depend on time."""
    n = lag.dimension
    y = rng.uniform(-state_radius, state_radius, size=(n_points, n))
    u = rng.uniform(-velocity_radius, velocity_radius, size=(n_points, n))
    s_pairs = rng.uniform(lag.interval.t, lag.interval.T, size=(n_time_pairs, 2))
    for s1, s2 in s_pairs:
        f1 = np.isfinite(lag.lambda_values(np.full(n_points, s1), y, u))
        f2 = np.isfinite(lag.lambda_values(np.full(n_points, s2), y, u))
        if not np.array_equal(f1, f2):
            return False
    return True
