"""Direct minimization over bounded-slope piecewise-linear trajectories.

Estimates the Lipschitz infimum of the functional for given boundary
data by multi-start coordinate descent over knot values, with a
shrinking step and projection onto the slope bound and endpoint pins.
The objective is extended valued and non-smooth at domain boundaries,
so derivative-free moves with feasibility clipping are the robust
choice at desk scale.

The search is guided by a fixed-resolution midpoint objective (cheap,
cached per segment); every reported best value is re-evaluated with the
adaptive quadrature of the energy module, so sweep records remain
consistent with the library's own functional.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .energy import energy
from .extended import PLUS_INFINITY, ExtendedValue
from .intervals import Interval
from .lagrangian import BoundaryData, ProductLagrangian
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .trajectories import PiecewiseLinearTrajectory, Trajectory


class GapVerdict(enum.Enum):
    GAP_DETECTED = "GapDetected"
    NO_GAP_EVIDENCE = "NoGapEvidence"
    INCONCLUSIVE = "Inconclusive"


class SearchSpaceError(ValueError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    """Uniform-knot piecewise-linear trajectories with a slope bound."""

    interval: Interval
    knot_count: int
    slope_bound: float
    boundary: BoundaryData
    dimension: int = 1
    free_range: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.knot_count < 2:
            raise SearchSpaceError("need at least two knots")
        if self.slope_bound <= 0:
            raise SearchSpaceError("slope bound must be positive")
        if self.boundary.kind == "both":
            chord = float(np.linalg.norm(self.boundary.Y - self.boundary.X))
            if chord / self.interval.length > self.slope_bound * (1 + 1e-12):
                raise SearchSpaceError(
                    f"no feasible trajectory: chord slope {chord / self.interval.length} "
                    f"exceeds the bound {self.slope_bound}")

    @property
    def knot_times(self) -> np.ndarray:
        return np.linspace(self.interval.t, self.interval.T, self.knot_count)

    def reach(self) -> tuple[float, float]:
        """Default range for a free endpoint: what the slope bound can reach."""
        if self.free_range is not None:
            return self.free_range
        span = self.slope_bound * self.interval.length
        if self.boundary.kind == "final":
            pin = float(self.boundary.Y[0])
        elif self.boundary.kind == "initial":
            pin = float(self.boundary.X[0])
        else:
            return (-math.inf, math.inf)
        return (pin - span, pin + span)


@dataclass
class SweepRecord:
    slope_bound: float
    knot_count: int
    best_value: ExtendedValue
    evaluations: int
    n_starts: int
    n_infinite_starts: int

    def to_json(self) -> dict:
        return {
            "slope_bound": self.slope_bound,
            "knot_count": self.knot_count,
            "best_value": self.best_value.to_json(),
            "evaluations": self.evaluations,
            "n_starts": self.n_starts,
            "n_infinite_starts": self.n_infinite_starts,
        }


@dataclass
class GapEstimate:
    f_candidate: ExtendedValue
    records: list[SweepRecord]
    verdict: GapVerdict
    best_trajectory: PiecewiseLinearTrajectory | None
    gap_margin: float

    def to_json(self) -> dict:
        return {
            "f_candidate": self.f_candidate.to_json(),
            "records": [r.to_json() for r in self.records],
            "verdict": self.verdict.value,
            "best_trajectory": (self.best_trajectory.to_json()
                                if self.best_trajectory is not None else None),
            "gap_margin": self.gap_margin,
        }


# ---------------------------------------------------------------------------
# fast fixed-resolution objective
# ---------------------------------------------------------------------------


class SegmentObjective:
    """Midpoint energy of a uniform-knot scalar profile, cached per segment."""

    def __init__(self, lag: ProductLagrangian, knot_times: np.ndarray,
                 samples_per_segment: int = 8) -> None:
        if lag.dimension != 1:
            raise SearchSpaceError("the direct search handles scalar problems")
        self.lag = lag
        self.times = knot_times
        self.nseg = knot_times.size - 1
        self.width = knot_times[1] - knot_times[0]
        frac = (np.arange(samples_per_segment) + 0.5) / samples_per_segment
        self.frac = frac
        # sample times, shape (nseg, spp)
        self.s = knot_times[:-1, None] + frac[None, :] * np.diff(knot_times)[:, None]
        self.spp = samples_per_segment
        self.evaluations = 0

    def segment_values(self, values: np.ndarray, segs: np.ndarray) -> np.ndarray:
        v0 = values[segs][:, None]
        v1 = values[segs + 1][:, None]
        z = v0 + self.frac[None, :] * (v1 - v0)
        widths = self.times[segs + 1] - self.times[segs]
        u = (v1 - v0) / widths[:, None]
        s = self.s[segs].ravel()
        zz = z.ravel()[:, None]
        uu = np.broadcast_to(u, z.shape).ravel()[:, None]
        L = self.lag.product_values(s, zz, uu).reshape(len(segs), self.spp)
        self.evaluations += s.size
        return np.mean(L, axis=1) * widths

    def full(self, values: np.ndarray) -> tuple[float, np.ndarray]:
        seg = self.segment_values(values, np.arange(self.nseg))
        return float(np.sum(seg)), seg


def project_to_space(values: np.ndarray, space: SearchSpace) -> np.ndarray:
    """Clamp a knot-value profile onto the slope bound and endpoint pins."""
    v = np.asarray(values, dtype=float).copy()
    dt = np.diff(space.knot_times)
    cap = space.slope_bound * dt * (1.0 - 1e-13)
    lo, hi = space.reach()
    b = space.boundary
    for _ in range(8):
        if b.pins_left():
            v[0] = float(b.X[0])
        else:
            v[0] = np.clip(v[0], lo, hi)
        if b.pins_right():
            v[-1] = float(b.Y[0])
        for i in range(v.size - 1):
            v[i + 1] = np.clip(v[i + 1], v[i] - cap[i], v[i] + cap[i])
        if b.pins_right():
            v[-1] = float(b.Y[0])
            for i in range(v.size - 2, -1, -1):
                v[i] = np.clip(v[i], v[i + 1] - cap[i], v[i + 1] + cap[i])
            if b.pins_left():
                v[0] = float(b.X[0])
        slopes = np.abs(np.diff(v)) / dt
        if np.all(slopes <= space.slope_bound * (1 + 1e-12)):
            break
    return v


def _line_start(space: SearchSpace) -> np.ndarray:
    b = space.boundary
    times = space.knot_times
    if b.kind == "both":
        x, y = float(b.X[0]), float(b.Y[0])
        return x + (times - times[0]) / (times[-1] - times[0]) * (y - x)
    pin = float(b.Y[0]) if b.kind == "final" else float(b.X[0])
    return np.full(times.size, pin)


def _coordinate_descent(
    obj: SegmentObjective,
    space: SearchSpace,
    start: np.ndarray,
    max_sweeps: int = 60,
) -> tuple[float, np.ndarray]:
    v = project_to_space(start, space)
    total, seg = obj.full(v)
    dt = np.diff(space.knot_times)
    cap = space.slope_bound * dt * (1.0 - 1e-13)
    b = space.boundary
    movable = list(range(v.size))
    if b.pins_left():
        movable = movable[1:]
    if b.pins_right():
        movable = movable[:-1]
    lo_free, hi_free = space.reach()

    step = 0.5 * space.slope_bound * space.interval.length / max(space.knot_count - 1, 1) * 4
    step_min = 1e-8 * max(1.0, space.slope_bound * space.interval.length)
    sweeps = 0
    while step > step_min and sweeps < max_sweeps:
        improved = False
        for i in movable:
            lo = v[i - 1] - cap[i - 1] if i > 0 else lo_free
            hi = v[i - 1] + cap[i - 1] if i > 0 else hi_free
            if i < v.size - 1:
                lo = max(lo, v[i + 1] - cap[i])
                hi = min(hi, v[i + 1] + cap[i])
            segs = np.asarray([j for j in (i - 1, i) if 0 <= j < obj.nseg])
            base = float(np.sum(seg[segs]))
            best_val, best_x = 0.0, None
            for cand in (v[i] + step, v[i] - step):
                x = float(np.clip(cand, lo, hi))
                if x == v[i]:
                    continue
                old = v[i]
                v[i] = x
                trial = obj.segment_values(v, segs)
                v[i] = old
                delta = float(np.sum(trial)) - base
                if math.isnan(delta):
                    continue
                if delta < best_val - 1e-15:
                    best_val, best_x = delta, (x, trial)
            if best_x is not None:
                x, trial = best_x
                v[i] = x
                seg[segs] = trial
                total += best_val
                improved = True
        sweeps += 1
        if not improved:
            step *= 0.5
        if not np.isfinite(total) and sweeps >= 2 and not improved:
            break
    total = float(np.sum(obj.segment_values(v, np.arange(obj.nseg))))
    return total, v


def _random_start(space: SearchSpace, rng: np.random.Generator) -> np.ndarray:
    base = _line_start(space)
    amp = 0.35 * space.slope_bound * space.interval.length
    bumps = rng.uniform(-amp, amp, size=base.size)
    return project_to_space(base + bumps, space)


def minimize_lipschitz(
    lag: ProductLagrangian,
    space: SearchSpace,
    restarts: int = 20,
    seed: int = 0,
    candidate: Trajectory | None = None,
    warm_starts: tuple[np.ndarray, ...] = (),
    spec: QuadratureSpec = DEFAULT_SPEC,
    samples_per_segment: int = 8,
    workers: int = 1,
    redraw_budget: int = 8,
) -> tuple[ExtendedValue, PiecewiseLinearTrajectory, dict]:
    """Best energy over the search space from multiple starts.

    Deterministic for a fixed seed: every restart owns a seed spawned
    from its index, and the reduction takes the minimum by (value,
    start index).  Returns the adaptively re-evaluated best value, the
    best trajectory, and search statistics.
    """
    times = space.knot_times
    obj = SegmentObjective(lag, times, samples_per_segment)

    starts: list[np.ndarray] = [_line_start(space)]
    if candidate is not None:
        starts.append(project_to_space(candidate.value_at(times)[:, 0], space))
    for w in warm_starts:
        w = np.asarray(w, dtype=float)
        if w.size != times.size:
            w = np.interp(times, np.linspace(times[0], times[-1], w.size), w)
        starts.append(project_to_space(w, space))

    rng_seq = np.random.SeedSequence(seed)
    children = rng_seq.spawn(restarts + redraw_budget)
    k = 0
    redraws = 0
    while len(starts) < restarts and k < len(children):
        rng = np.random.default_rng(children[k])
        k += 1
        cand = _random_start(space, rng)
        if redraws < redraw_budget and math.isinf(obj.full(cand)[0]):
            redraws += 1
            continue
        starts.append(cand)

    init_vals = [obj.full(s)[0] for s in starts]

    def run(idx: int) -> tuple[float, np.ndarray]:
        return _coordinate_descent(obj, space, starts[idx])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(len(starts))))
    else:
        results = [run(i) for i in range(len(starts))]

    order = min(range(len(results)), key=lambda i: (results[i][0], i))
    best_fast, best_values = results[order]
    traj = PiecewiseLinearTrajectory(times, best_values)
    value = energy(lag, traj, spec)
    stats = {
        "evaluations": obj.evaluations,
        "n_starts": len(starts),
        "n_infinite_starts": int(sum(1 for f in init_vals if math.isinf(f))),
        "start_values": init_vals,
        "fast_best": best_fast,
    }
    return value, traj, stats


def default_gap_margin(f_candidate: ExtendedValue) -> float:
    base = float(f_candidate) if f_candidate.is_finite else 1.0
    return 1e-3 * max(1.0, base)


def gap_report(
    lag: ProductLagrangian,
    y: Trajectory,
    boundary: BoundaryData,
    bounds: tuple[float, ...] = (2.0, 4.0, 8.0, 16.0, 32.0),
    knots: tuple[int, ...] = (32, 128),
    restarts: int = 20,
    seed: int = 0,
    gap_margin: float | None = None,
    spec: QuadratureSpec = DEFAULT_SPEC,
    workers: int = 1,
) -> GapEstimate:
    """Sweep (slope bound, knot count) classes and compare the Lipschitz
    best values against the candidate's energy.

    Warm starts chain along increasing slope bounds (for a fixed knot
    count), which makes the per-bound best values non-increasing.
    """
    f_cand = energy(lag, y, spec)
    margin = gap_margin if gap_margin is not None else default_gap_margin(f_cand)

    records: list[SweepRecord] = []
    best_traj: PiecewiseLinearTrajectory | None = None
    best_val: ExtendedValue = PLUS_INFINITY
    prev_by_knots: dict[int, np.ndarray] = {}
    per_bound_best: dict[float, ExtendedValue] = {}

    for kn in sorted(knots):
        prev_m_values: np.ndarray | None = None
        for M in sorted(bounds):
            space = SearchSpace(interval=lag.interval, knot_count=kn, slope_bound=M,
                                boundary=boundary)
            warm: list[np.ndarray] = []
            if prev_m_values is not None:
                warm.append(prev_m_values)
            smaller = [k2 for k2 in prev_by_knots if k2 < kn]
            if smaller:
                warm.append(prev_by_knots[max(smaller)])
            value, traj, stats = minimize_lipschitz(
                lag, space, restarts=restarts, seed=seed + 1000 * kn + int(M),
                candidate=y, warm_starts=tuple(warm), spec=spec, workers=workers)
            records.append(SweepRecord(
                slope_bound=M, knot_count=kn, best_value=value,
                evaluations=stats["evaluations"], n_starts=stats["n_starts"],
                n_infinite_starts=stats["n_infinite_starts"]))
            prev_m_values = traj.values[:, 0]
            prev_by_knots[kn] = traj.values[:, 0]
            if value < best_val or best_traj is None:
                best_val, best_traj = value, traj
            cur = per_bound_best.get(M)
            if cur is None or value < cur:
                per_bound_best[M] = value

    verdict = _verdict(f_cand, per_bound_best, margin)
    return GapEstimate(f_candidate=f_cand, records=records, verdict=verdict,
                       best_trajectory=best_traj, gap_margin=margin)


def _verdict(f_cand: ExtendedValue, per_bound_best: dict[float, ExtendedValue],
             margin: float) -> GapVerdict:
    if not per_bound_best:
        return GapVerdict.INCONCLUSIVE
    ordered = [per_bound_best[m] for m in sorted(per_bound_best)]
    finite = [v for v in ordered if v.is_finite]
    if not finite:
        # every class came back infinite; that is a gap whenever the
        # candidate itself has finite energy
        return GapVerdict.GAP_DETECTED if f_cand.is_finite else GapVerdict.INCONCLUSIVE
    best = min(float(v) for v in finite)
    target = (float(f_cand) if f_cand.is_finite else 0.0) + margin
    if f_cand.is_finite and best <= target:
        return GapVerdict.NO_GAP_EVIDENCE
    # non-increasing within solver noise?
    vals = [float(v) if v.is_finite else math.inf for v in ordered]
    for a, b in zip(vals, vals[1:]):
        if b > a + max(1e-6, 1e-6 * abs(a)):
            return GapVerdict.INCONCLUSIVE
    # plateau: the last halving of the excess is small
    finite_vals = [v for v in vals if math.isfinite(v)]
    if len(finite_vals) >= 2:
        drop = finite_vals[-2] - finite_vals[-1]
        excess = finite_vals[-1] - (float(f_cand) if f_cand.is_finite else 0.0)
        if drop > 0.5 * excess:
            return GapVerdict.INCONCLUSIVE
    return GapVerdict.GAP_DETECTED
