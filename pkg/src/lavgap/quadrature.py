"""Composite midpoint quadrature with dyadic refinement.

The integrands here are nonnegative, a.e. defined, and may take the
value +inf on sets of positive measure (domain predicates) or blow up
at isolated points (improper integrals).  The engine therefore has to
do three jobs at once:

* converge on smooth and integrably-singular integrands,
* report PlusInfinity when an infinite sample persists under
  refinement (positive-measure infinity) or when the refinement trend
  shows divergence,
* ignore isolated infinite samples, which have measure zero.

Evaluation happens only at cell midpoints, so endpoint singularities
are never sampled directly.  Summation uses numpy's pairwise order on
a fixed cell ordering, which keeps results reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .extended import PLUS_INFINITY, ExtendedValue
from .intervals import Interval, IntervalUnion

# Consecutive refinement levels an infinite sample must survive before
# the cell is declared infinite for good.
_INF_PERSIST_LEVELS = 6
# Trend windows for the divergence detectors.
_TREND_LEVELS = 6


@dataclass(frozen=True)
class QuadratureSpec:
    """Knobs for the refining midpoint rule.

    divergence_factor triggers on totals growing geometrically; the
    stall_ratio detector catches slow divergences (1/s and s^(-4/3)
    style) whose increments refuse to decay.  Either verdict is only
    issued once the running total is significant relative to the
    tolerances, so round-off tails cannot masquerade as divergence.
    """

    base_cells: int = 16
    max_refinement_levels: int = 64
    divergence_factor: float = 1.5
    abs_tol: float = 1e-9
    rel_tol: float = 1e-8
    divergence_cap: float = 1e12
    stall_ratio: float = 0.9
    max_evaluations: int = 4_000_000

    def __post_init__(self) -> None:
        if self.base_cells < 8:
            raise ValueError("base_cells must be >= 8")
        if self.divergence_factor <= 1.0:
            raise ValueError("divergence_factor must be > 1")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")

    def with_tol(self, tol: float) -> "QuadratureSpec":
        return QuadratureSpec(
            base_cells=self.base_cells,
            max_refinement_levels=self.max_refinement_levels,
            divergence_factor=self.divergence_factor,
            abs_tol=tol,
            rel_tol=tol,
            divergence_cap=self.divergence_cap,
            stall_ratio=self.stall_ratio,
            max_evaluations=self.max_evaluations,
        )


DEFAULT_SPEC = QuadratureSpec()


@dataclass
class QuadratureOutcome:
    value: ExtendedValue
    converged: bool
    diverged: bool
    levels: int
    evaluations: int
    cells_used: int
    infinite_cells: IntervalUnion
    flagged: dict[str, IntervalUnion] = field(default_factory=dict)


Integrand = Callable[[np.ndarray], "np.ndarray | tuple[np.ndarray, dict[str, np.ndarray]]"]


def _call(f: Integrand, mids: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    out = f(mids)
    if isinstance(out, tuple):
        vals, masks = out
    else:
        vals, masks = out, {}
    vals = np.asarray(vals, dtype=float)
    if np.any(np.isnan(vals)):
        raise ValueError("integrand produced NaN")
    if np.any(vals < 0):
        raise ValueError("integrand must be nonnegative")
    return vals, {k: np.asarray(v, dtype=bool) for k, v in masks.items()}


def integrate(
    f: Integrand,
    interval: Interval,
    spec: QuadratureSpec = DEFAULT_SPEC,
    base_edges: np.ndarray | None = None,
) -> QuadratureOutcome:
    """Integrate a nonnegative extended-valued integrand over interval.

    f maps an array of midpoints to integrand values (np.inf allowed),
    optionally paired with named boolean masks; flagged cells are
    reported per mask name in the outcome.
    """
    if base_edges is None:
        edges = np.linspace(interval.t, interval.T, spec.base_cells + 1)
    else:
        edges = np.asarray(base_edges, dtype=float)
        if edges.size < 2 or not np.all(np.diff(edges) > 0):
            raise ValueError("base_edges must be strictly increasing")
    span = interval.length

    a = edges[:-1].copy()
    b = edges[1:].copy()
    vals, masks = _call(f, 0.5 * (a + b))
    inf_age = np.where(np.isinf(vals), 1, 0)
    evaluations = a.size

    settled_sum = 0.0
    settled_cells = 0
    settled_flags: dict[str, list[tuple[float, float]]] = {k: [] for k in masks}

    S_prev: float | None = None
    dS_prev: float | None = None
    grow_count = 0
    stall_count = 0
    small_count = 0
    tail = 0.0

    def _flagged_unions(active_masks: dict[str, np.ndarray]) -> dict[str, IntervalUnion]:
        out: dict[str, IntervalUnion] = {}
        names = set(settled_flags) | set(active_masks)
        for name in names:
            pairs = list(settled_flags.get(name, []))
            mask = active_masks.get(name)
            if mask is not None and mask.size:
                pairs.extend(zip(a[mask], b[mask]))
            out[name] = IntervalUnion.from_pairs(pairs)
        return out

    def _outcome(value: ExtendedValue, converged: bool, diverged: bool, level: int,
                 inf_cells: IntervalUnion) -> QuadratureOutcome:
        return QuadratureOutcome(
            value=value,
            converged=converged,
            diverged=diverged,
            levels=level,
            evaluations=evaluations,
            cells_used=settled_cells + a.size,
            infinite_cells=inf_cells,
            flagged=_flagged_unions(masks),
        )

    for level in range(spec.max_refinement_levels + 1):
        finite = np.isfinite(vals)
        has_inf = bool(np.any(~finite))
        widths = b - a
        S = settled_sum + float(np.sum(widths[finite] * vals[finite]))
        tol = spec.abs_tol + spec.rel_tol * abs(S)

        if np.any(inf_age >= _INF_PERSIST_LEVELS):
            inf_cells = IntervalUnion.from_pairs(zip(a[~finite], b[~finite]))
            return _outcome(PLUS_INFINITY, False, True, level, inf_cells)

        if S > spec.divergence_cap:
            chain = IntervalUnion.from_pairs(zip(a, b))
            return _outcome(PLUS_INFINITY, False, True, level, chain)

        if S_prev is not None:
            dS = S - S_prev
            if abs(dS) <= tol:
                small_count += 1
                grow_count = 0
                stall_count = 0
            else:
                small_count = 0
                if S_prev > 0 and S >= spec.divergence_factor * S_prev:
                    grow_count += 1
                else:
                    grow_count = 0
                significant = S > 1e3 * tol
                if (
                    significant
                    and dS_prev is not None
                    and abs(dS_prev) > tol
                    and abs(dS) >= spec.stall_ratio * abs(dS_prev)
                ):
                    stall_count += 1
                else:
                    stall_count = 0
            if grow_count >= _TREND_LEVELS or stall_count >= _TREND_LEVELS:
                chain = IntervalUnion.from_pairs(
                    zip(a, b) if not has_inf else zip(a[~finite], b[~finite])
                )
                return _outcome(PLUS_INFINITY, False, True, level, chain)
            if dS_prev is not None and dS_prev != 0.0 and dS != 0.0:
                r = dS / dS_prev
                tail = dS * r / (1.0 - r) if 0.02 < r < 0.97 else 0.0
            else:
                tail = 0.0
            dS_prev = dS
        S_prev = S

        done_settled = not has_inf and a.size == 0
        done_tol = not has_inf and small_count >= 2
        if done_settled or done_tol:
            return _outcome(ExtendedValue(max(S + tail, 0.0)), True, False, level,
                            IntervalUnion.empty())

        if level == spec.max_refinement_levels or evaluations >= spec.max_evaluations:
            if has_inf:
                inf_cells = IntervalUnion.from_pairs(zip(a[~finite], b[~finite]))
                return _outcome(PLUS_INFINITY, False, True, level, inf_cells)
            decaying = dS_prev is None or abs(dS_prev) <= tol or (
                tail != 0.0 and abs(tail) < 1e3 * tol
            )
            if decaying or S <= 1e3 * tol:
                return _outcome(ExtendedValue(max(S + tail, 0.0)), False, False, level,
                                IntervalUnion.empty())
            chain = IntervalUnion.from_pairs(zip(a, b))
            return _outcome(PLUS_INFINITY, False, True, level, chain)

        # split every active cell and evaluate the two child midpoints
        mid = 0.5 * (a + b)
        a2 = np.empty(2 * a.size)
        b2 = np.empty(2 * a.size)
        a2[0::2], a2[1::2] = a, mid
        b2[0::2], b2[1::2] = mid, b
        vals2, masks2 = _call(f, 0.5 * (a2 + b2))
        evaluations += a2.size

        child_inf = np.isinf(vals2)
        age2 = np.zeros(a2.size, dtype=int)
        parent_age = np.repeat(inf_age, 2)
        age2[child_inf] = parent_age[child_inf] + 1

        # settle cells whose two children already reproduce the parent sum
        parent_finite = np.repeat(finite, 2)[0::2]
        half = 0.5 * np.repeat(widths, 2)
        pair_sum = (half * np.where(child_inf, 0.0, vals2)).reshape(-1, 2).sum(axis=1)
        pair_all_finite = ~(child_inf.reshape(-1, 2).any(axis=1))
        parent_est = widths * np.where(finite, vals, 0.0)
        cell_tol = 0.25 * (spec.abs_tol + spec.rel_tol * abs(S)) * widths / span
        settle = pair_all_finite & parent_finite & (np.abs(pair_sum - parent_est) <= cell_tol)

        if np.any(settle):
            settled_sum += float(np.sum(pair_sum[settle]))
            settled_cells += 2 * int(np.count_nonzero(settle))
            child_settle = np.repeat(settle, 2)
            for name, m2 in masks2.items():
                hit = child_settle & m2
                if np.any(hit):
                    settled_flags.setdefault(name, []).extend(zip(a2[hit], b2[hit]))

        keep = ~np.repeat(settle, 2)
        a, b = a2[keep], b2[keep]
        vals = vals2[keep]
        inf_age = age2[keep]
        masks = {k: v[keep] for k, v in masks2.items()}

    raise AssertionError("unreachable")


def integral_value(
    f: Integrand,
    interval: Interval,
    spec: QuadratureSpec = DEFAULT_SPEC,
    base_edges: np.ndarray | None = None,
) -> ExtendedValue:
    return integrate(f, interval, spec, base_edges).value
