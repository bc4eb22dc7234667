"""Closed bounded intervals, finite unions of open subintervals, grids."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np


@dataclass(frozen=True, slots=True)
class Interval:
    """A closed bounded interval [t, T] with t < T."""

    t: float
    T: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.t) and np.isfinite(self.T)):
            raise ValueError("interval endpoints must be finite")
        if not self.t < self.T:
            raise ValueError(f"interval needs t < T, got [{self.t}, {self.T}]")

    @property
    def length(self) -> float:
        return self.T - self.t

    def contains(self, s: float, tol: float = 0.0) -> bool:
        return self.t - tol <= s <= self.T + tol

    def clip(self, s):
        return np.clip(s, self.t, self.T)

    def same_as(self, other: "Interval", tol: float = 1e-12) -> bool:
        return abs(self.t - other.t) <= tol and abs(self.T - other.T) <= tol


@dataclass(frozen=True)
class Grid:
    """Strictly increasing nodes spanning an interval end to end."""

    nodes: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("grid needs at least two nodes")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, interval: Interval, n: int) -> "Grid":
        if n < 2:
            raise ValueError("uniform grid needs n >= 2")
        return cls(np.linspace(interval.t, interval.T, n))

    @property
    def interval(self) -> Interval:
        return Interval(float(self.nodes[0]), float(self.nodes[-1]))

    def __len__(self) -> int:
        return int(self.nodes.size)


@dataclass(frozen=True)
class IntervalUnion:
    """A finite union of disjoint open subintervals ]a_k, b_k[.

    Components are kept sorted; degenerate pieces are dropped.  The
    restriction to finitely many components is deliberate: every
    construction in this package produces finitely many.
    """

    components: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self) -> None:
        comps = []
        for a, b in self.components:
            a, b = float(a), float(b)
            if b - a > 0.0:
                comps.append((a, b))
        comps.sort()
        for (a1, b1), (a2, b2) in zip(comps, comps[1:]):
            if a2 < b1:
                raise ValueError("interval union components must be disjoint")
        object.__setattr__(self, "components", tuple(comps))

    @classmethod
    def empty(cls) -> "IntervalUnion":
        return cls(())

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "IntervalUnion":
        merged = _merge_overlapping([(float(a), float(b)) for a, b in pairs])
        return cls(tuple(merged))

    def measure(self) -> float:
        return float(sum(b - a for a, b in self.components))

    def is_empty(self) -> bool:
        return len(self.components) == 0

    def contains(self, s: float) -> bool:
        for a, b in self.components:
            if a < s < b:
                return True
        return False

    def contains_many(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape, dtype=bool)
        for a, b in self.components:
            out |= (s > a) & (s < b)
        return out

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return IntervalUnion.from_pairs(list(self.components) + list(other.components))

    def intersection(self, other: "IntervalUnion") -> "IntervalUnion":
        out = []
        for a, b in self.components:
            for c, d in other.components:
                lo, hi = max(a, c), min(b, d)
                if hi > lo:
                    out.append((lo, hi))
        return IntervalUnion(tuple(out))

    def difference(self, other: "IntervalUnion") -> "IntervalUnion":
        out = []
        for a, b in self.components:
            pieces = [(a, b)]
            for c, d in other.components:
                nxt = []
                for lo, hi in pieces:
                    if d <= lo or c >= hi:
                        nxt.append((lo, hi))
                        continue
                    if c > lo:
                        nxt.append((lo, min(c, hi)))
                    if d < hi:
                        nxt.append((max(d, lo), hi))
                pieces = nxt
            out.extend(pieces)
        return IntervalUnion(tuple(p for p in out if p[1] - p[0] > 0))

    def merge_gaps(self, gap_tol: float) -> "IntervalUnion":
        """Merge components separated by gaps of at most gap_tol."""
        if not self.components:
            return self
        merged = [list(self.components[0])]
        for a, b in self.components[1:]:
            if a - merged[-1][1] <= gap_tol:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return IntervalUnion(tuple((a, b) for a, b in merged))

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def to_json(self) -> list[list[float]]:
        return [[a, b] for a, b in self.components]

    @staticmethod
    def from_json(obj: Iterable[Sequence[float]]) -> "IntervalUnion":
        return IntervalUnion(tuple((float(a), float(b)) for a, b in obj))


def _merge_overlapping(pairs: list[tuple[float, float]]) -> list[tuple[float, float]]:
    pairs = sorted((a, b) for a, b in pairs if b - a > 0)
    merged: list[list[float]] = []
    for a, b in pairs:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged]
