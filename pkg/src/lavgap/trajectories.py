"""Vector-valued absolutely continuous trajectories on an interval.

Three concrete representations: closed-form (value and derivative
callables), piecewise linear (knots and values, the workhorse of every
construction), and derived wrappers used by the approximation pipeline
(a skeleton that replaces a base trajectory by affine pieces on an open
set, and a composition with a piecewise-linear time change).

Values are always exposed as arrays of shape (m, n) for m query points
in dimension n; derivatives are the a.e. classical ones.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .extended import PLUS_INFINITY, ExtendedValue
from .intervals import Grid, Interval, IntervalUnion
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate


class Trajectory:
    """Base class: an evaluable function of time with an a.e. derivative."""

    interval: Interval
    dimension: int

    def value_at(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative_at(self, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value(self, s: float) -> np.ndarray:
        return self.value_at(np.asarray([s], dtype=float))[0]

    def derivative(self, s: float) -> np.ndarray:
        return self.derivative_at(np.asarray([s], dtype=float))[0]

    def scalar_value(self, s: float) -> float:
        if self.dimension != 1:
            raise ValueError("scalar_value needs dimension 1")
        return float(self.value(s)[0])


class ClosedFormTrajectory(Trajectory):
    """Trajectory given by vectorized value and derivative callables.

    The callables receive an array of times (m,) and return either
    (m,) for scalar trajectories or (m, n).
    """

    def __init__(
        self,
        interval: Interval,
        value_fn: Callable[[np.ndarray], np.ndarray],
        derivative_fn: Callable[[np.ndarray], np.ndarray],
        dimension: int = 1,
        name: str = "",
    ) -> None:
        self.interval = interval
        self.dimension = int(dimension)
        self._value_fn = value_fn
        self._derivative_fn = derivative_fn
        self.name = name

    def _shape(self, out: np.ndarray, m: int) -> np.ndarray:
        out = np.asarray(out, dtype=float)
        if out.ndim == 1:
            out = out[:, None]
        if out.shape != (m, self.dimension):
            raise ValueError(f"trajectory callable returned shape {out.shape}")
        return out

    def value_at(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return self._shape(self._value_fn(s), s.size)

    def derivative_at(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return self._shape(self._derivative_fn(s), s.size)


class PiecewiseLinearTrajectory(Trajectory):
    """Globally Lipschitz trajectory interpolating knot values linearly.

    The derivative is the per-cell difference quotient, so value and
    derivative representations are exactly consistent.
    """

    def __init__(self, knots: Sequence[float] | np.ndarray, values: np.ndarray) -> None:
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if knots.ndim != 1 or knots.size < 2:
            raise ValueError("need at least two knots")
        if not np.all(np.diff(knots) > 0):
            raise ValueError("knots must be strictly increasing")
        if values.shape[0] != knots.size:
            raise ValueError("values/knots length mismatch")
        self.knots = knots
        self.values = values
        self.interval = Interval(float(knots[0]), float(knots[-1]))
        self.dimension = int(values.shape[1])
        self._slopes = np.diff(values, axis=0) / np.diff(knots)[:, None]

    @property
    def slopes(self) -> np.ndarray:
        return self._slopes

    def _cells(self, s: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.knots, s, side="right") - 1
        return np.clip(idx, 0, self.knots.size - 2)

    def value_at(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        idx = self._cells(s)
        out = self.values[idx] + (s - self.knots[idx])[:, None] * self._slopes[idx]
        # exact at knots, including the right endpoint
        at_knot = np.searchsorted(self.knots, s)
        hit = (at_knot < self.knots.size) & (self.knots[np.minimum(at_knot, self.knots.size - 1)] == s)
        if np.any(hit):
            out[hit] = self.values[at_knot[hit]]
        return out

    def derivative_at(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return self._slopes[self._cells(s)]

    def lipschitz_constant(self) -> float:
        return float(np.max(np.linalg.norm(self._slopes, axis=1)))

    def to_json(self) -> dict:
        return {
            "interval": [self.interval.t, self.interval.T],
            "dimension": self.dimension,
            "kind": "piecewise_linear",
            "knots": self.knots.tolist(),
            "values": self.values.tolist(),
        }

    @staticmethod
    def from_json(obj: dict) -> "PiecewiseLinearTrajectory":
        if obj.get("kind") != "piecewise_linear":
            raise ValueError(f"unsupported trajectory kind {obj.get('kind')!r}")
        traj = PiecewiseLinearTrajectory(np.asarray(obj["knots"]), np.asarray(obj["values"]))
        if traj.dimension != int(obj["dimension"]):
            raise ValueError("dimension field inconsistent with values")
        return traj


# A sampled trajectory is a piecewise-linear one built from grid samples.
SampledTrajectory = PiecewiseLinearTrajectory


def from_samples(grid: Grid, values: np.ndarray) -> PiecewiseLinearTrajectory:
    return PiecewiseLinearTrajectory(grid.nodes, values)


def sample_closed_form(y: Trajectory, grid: Grid) -> PiecewiseLinearTrajectory:
    return PiecewiseLinearTrajectory(grid.nodes, y.value_at(grid.nodes))


class SkeletonTrajectory(Trajectory):
    """Equal to a base trajectory off an open set, affine on its components.

    Off the components, value and derivative delegate to the base
    object, so the skeleton is bitwise identical to the base there.
    """

    def __init__(self, base: Trajectory, steep_set: IntervalUnion) -> None:
        self.base = base
        self.steep_set = steep_set
        self.interval = base.interval
        self.dimension = base.dimension
        comps = steep_set.components
        self._lo = np.asarray([c[0] for c in comps], dtype=float)
        self._hi = np.asarray([c[1] for c in comps], dtype=float)
        if comps:
            self._vlo = base.value_at(self._lo)
            self._vhi = base.value_at(self._hi)
            self._slope = (self._vhi - self._vlo) / (self._hi - self._lo)[:, None]
        else:
            self._vlo = np.zeros((0, self.dimension))
            self._vhi = np.zeros((0, self.dimension))
            self._slope = np.zeros((0, self.dimension))

    @property
    def component_slopes(self) -> np.ndarray:
        """Affine slope vector per component, shape (k, n)."""
        return self._slope

    @property
    def component_slope_norms(self) -> np.ndarray:
        return np.linalg.norm(self._slope, axis=1) if self._slope.size else np.zeros(0)

    def _locate(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self._lo.size == 0:
            return np.zeros(s.shape, dtype=bool), np.zeros(s.shape, dtype=int)
        idx = np.searchsorted(self._lo, s, side="right") - 1
        idx_c = np.clip(idx, 0, self._lo.size - 1)
        inside = (idx >= 0) & (s > self._lo[idx_c]) & (s < self._hi[idx_c])
        return inside, idx_c

    def value_at(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = self.base.value_at(s)
        inside, idx = self._locate(s)
        if np.any(inside):
            k = idx[inside]
            out[inside] = self._vlo[k] + (s[inside] - self._lo[k])[:, None] * self._slope[k]
        return out

    def derivative_at(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = self.base.derivative_at(s)
        inside, idx = self._locate(s)
        if np.any(inside):
            out[inside] = self._slope[idx[inside]]
        return out


class ComposedTrajectory(Trajectory):
    """z composed with a piecewise-linear time change psi: s -> z(psi(s))."""

    def __init__(self, z: Trajectory, psi) -> None:
        self.z = z
        self.psi = psi
        self.interval = Interval(float(psi.breaks[0]), float(psi.breaks[-1]))
        self.dimension = z.dimension
        lo, hi = float(np.min(psi.values)), float(np.max(psi.values))
        slack = 1e-9 * max(1.0, z.interval.length)
        if lo < z.interval.t - slack or hi > z.interval.T + slack:
            raise ValueError("time change leaves the trajectory's domain")

    def value_at(self, s: np.ndarray) -> np.ndarray:
        tau = self.z.interval.clip(self.psi.eval_at(np.asarray(s, dtype=float)))
        return self.z.value_at(tau)

    def derivative_at(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        tau = self.z.interval.clip(self.psi.eval_at(s))
        return self.z.derivative_at(tau) * self.psi.derivative_at(s)[:, None]


def as_piecewise_linear(y: Trajectory, n: int = 513) -> PiecewiseLinearTrajectory:
    """Sample any trajectory to a piecewise-linear export, keeping knots."""
    if isinstance(y, PiecewiseLinearTrajectory):
        return y
    nodes = np.linspace(y.interval.t, y.interval.T, n)
    extra: list[float] = []
    if isinstance(y, ComposedTrajectory):
        extra = [float(v) for v in y.psi.breaks]
    elif isinstance(y, SkeletonTrajectory):
        extra = [float(v) for v in np.concatenate([y._lo, y._hi])]
    if extra:
        nodes = np.unique(np.concatenate([nodes, np.asarray(extra)]))
        nodes = nodes[(nodes >= y.interval.t) & (nodes <= y.interval.T)]
    return PiecewiseLinearTrajectory(nodes, y.value_at(nodes))


# ---------------------------------------------------------------------------
# norms and distances
# ---------------------------------------------------------------------------


def _base_edges(y: Trajectory, grid: Grid | None) -> np.ndarray | None:
    if grid is None:
        return None
    if not grid.interval.same_as(y.interval, tol=1e-9 * max(1.0, y.interval.length)):
        raise ValueError("grid does not span the trajectory's interval")
    return grid.nodes


def sup_norm(y: Trajectory, grid: Grid | None = None) -> float:
    """Max over grid nodes of the pointwise Euclidean norm."""
    nodes = grid.nodes if grid is not None else Grid.uniform(y.interval, 1025).nodes
    return float(np.max(np.linalg.norm(y.value_at(nodes), axis=1)))


def lp_norm_derivative(
    y: Trajectory,
    p: float,
    grid: Grid | None = None,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ExtendedValue:
    """(integral |y'|^p)^(1/p) by refining midpoint quadrature."""
    if p < 1:
        raise ValueError("p must be >= 1")

    def f(mids: np.ndarray) -> np.ndarray:
        mag = np.linalg.norm(y.derivative_at(mids), axis=1)
        return mag**p

    out = integrate(f, y.interval, spec, _base_edges(y, grid))
    if out.value.is_infinite:
        return PLUS_INFINITY
    return ExtendedValue(float(out.value) ** (1.0 / p))


def lp_norm(
    y: Trajectory,
    p: float,
    grid: Grid | None = None,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ExtendedValue:
    if p < 1:
        raise ValueError("p must be >= 1")

    def f(mids: np.ndarray) -> np.ndarray:
        return np.linalg.norm(y.value_at(mids), axis=1) ** p

    out = integrate(f, y.interval, spec, _base_edges(y, grid))
    if out.value.is_infinite:
        return PLUS_INFINITY
    return ExtendedValue(float(out.value) ** (1.0 / p))


def sobolev_distance(
    a: Trajectory,
    b: Trajectory,
    p: float,
    grid: Grid | None = None,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ExtendedValue:
    """W^{1,p} distance ||a-b||_p + ||a'-b'||_p."""
    if a.dimension != b.dimension:
        raise ValueError("trajectories have different dimensions")
    if not a.interval.same_as(b.interval, tol=1e-9 * max(1.0, a.interval.length)):
        raise ValueError("trajectories live on different intervals")
    if p < 1:
        raise ValueError("p must be >= 1")
    edges = _base_edges(a, grid)

    def f_val(mids: np.ndarray) -> np.ndarray:
        return np.linalg.norm(a.value_at(mids) - b.value_at(mids), axis=1) ** p

    def f_der(mids: np.ndarray) -> np.ndarray:
        return np.linalg.norm(a.derivative_at(mids) - b.derivative_at(mids), axis=1) ** p

    v = integrate(f_val, a.interval, spec, edges).value
    d = integrate(f_der, a.interval, spec, edges).value
    if v.is_infinite or d.is_infinite:
        return PLUS_INFINITY
    return ExtendedValue(float(v) ** (1.0 / p) + float(d) ** (1.0 / p))
