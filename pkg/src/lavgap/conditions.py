"""Sampled verification of the hypotheses behind the approximation results.

Every checker returns a three-valued verdict: sampling can certify a
failure (it carries a concrete witness that re-evaluates to a violating
value) but can only support, never prove, that a condition holds.  Grid
densities and seeds are recorded in each report.

Checked conditions, named by what they constrain:

* time_lipschitz: |Lambda(s2,z,v) - Lambda(s1,z,v)| bounded by
  (kappa Lambda + beta |v|^p + gamma) |s2 - s1| locally in time,
* linear_growth: Lambda >= alpha |v| - d,
* velocity_box: Lambda bounded for velocities in a small ball,
* weight_bounded / weight_time_continuous / weight_positive: the
  corresponding properties of the weight factor Psi,
* range_window: an open window of the trajectory's range on which
  Lambda stays bounded for every velocity radius.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .energy import lambda_along
from .extended import ExtendedValue
from .intervals import Interval
from .lagrangian import BoundaryData, ProductLagrangian
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .trajectories import Trajectory, sup_norm

POSITIVITY_FLOOR = 1e-8


class Condition(enum.Enum):
    TIME_LIPSCHITZ = "time_lipschitz"
    LINEAR_GROWTH = "linear_growth"
    VELOCITY_BOX = "velocity_box"
    WEIGHT_BOUNDED = "weight_bounded"
    WEIGHT_TIME_CONTINUOUS = "weight_time_continuous"
    WEIGHT_POSITIVE = "weight_positive"
    RANGE_WINDOW = "range_window"


class Verdict(enum.Enum):
    HOLDS = "Holds"
    FAILS_WITH_WITNESS = "FailsWithWitness"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class ConditionReport:
    condition: Condition
    verdict: Verdict
    constants: dict = field(default_factory=dict)
    witness: dict | None = None
    sampling: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict is Verdict.HOLDS

    def to_json(self) -> dict:
        return {
            "condition": self.condition.value,
            "verdict": self.verdict.value,
            "constants": self.constants,
            "witness": self.witness,
            "sampling": self.sampling,
        }


@dataclass(frozen=True)
class SamplingSpec:
    seed: int = 0
    n_state: int = 64
    n_velocity: int = 48
    n_time: int = 32

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(salt,)))


DEFAULT_SAMPLING = SamplingSpec()


def _ball_samples(rng: np.random.Generator, radius: float, n: int, dim: int) -> np.ndarray:
    direction = rng.normal(size=(n, dim))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    r = radius * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / dim)
    return r * direction / norms


def _state_pool(
    lag: ProductLagrangian,
    sampling: SamplingSpec,
    rng: np.random.Generator,
    state_radius: float | None,
    y: Trajectory | None,
    neighborhood: float,
) -> np.ndarray:
    """States from the ball of the given radius, or a neighborhood of the
    trajectory's range when a trajectory is supplied."""
    n = lag.dimension
    if y is not None:
        s = np.linspace(y.interval.t, y.interval.T, sampling.n_state)
        graph = y.value_at(s)
        jitter = _ball_samples(rng, neighborhood, sampling.n_state, n)
        return np.concatenate([graph, graph + jitter])
    if state_radius is None:
        raise ValueError("need either a state radius or a trajectory")
    pool = _ball_samples(rng, state_radius, sampling.n_state, n)
    corners = state_radius * np.concatenate([np.eye(n), -np.eye(n), np.zeros((1, n))])
    return np.concatenate([pool, corners])


def _lam_grid(lag: ProductLagrangian, s: np.ndarray, z: np.ndarray,
              v: np.ndarray) -> np.ndarray:
    return lag.lambda_values(s, z, v)


# ---------------------------------------------------------------------------
# Condition on the time variable of Lambda
# ---------------------------------------------------------------------------


def _fit_time_rate(a: np.ndarray, b: np.ndarray, d: np.ndarray) -> tuple[float, float, float]:
    """Smallest (kappa, beta, gamma) >= 0 with kappa a + beta b + gamma >= d."""
    sa = float(np.max(a)) or 1.0
    sb = float(np.max(b)) or 1.0
    res = linprog(
        c=[1.0, 1.0, 1.0],
        A_ub=np.column_stack([-a / sa, -b / sb, -np.ones_like(a)]),
        b_ub=-d,
        bounds=[(0, None)] * 3,
        method="highs",
    )
    if not res.success:  # pragma: no cover - the constant term always fits
        return 0.0, 0.0, float(np.max(d))
    kappa, beta, gamma = res.x
    return float(kappa / sa), float(beta / sb), float(gamma)


def check_time_lipschitz(
    lag: ProductLagrangian,
    state_radius: float,
    p: float | None = None,
    sampling: SamplingSpec = DEFAULT_SAMPLING,
    eps_star: float | None = None,
) -> ConditionReport:
    """Local Lipschitz bound in time for Lambda on states of bounded norm.

    Fits constant (kappa, beta, gamma) by linear programming over
    sampled difference quotients, then refines the time spacing twice;
    a fit that keeps growing under refinement certifies failure at the
    worst sampled point.
    """
    if state_radius <= 0:
        raise ValueError("state_radius must be positive")
    p = float(p if p is not None else lag.p)
    rng = sampling.rng(1)
    interval = lag.interval
    eps0 = eps_star if eps_star is not None else interval.length / 50.0
    n = lag.dimension

    def batch(eps: float, s_focus: float | None) -> dict[str, np.ndarray]:
        m = sampling.n_time * 4
        s = rng.uniform(interval.t, interval.T, size=m)
        # exponentially spaced probes toward both endpoints catch
        # boundary singularities of the time dependence
        k = np.arange(1, m // 4 + 1)
        s = np.concatenate([
            s,
            interval.t + interval.length * 0.5 ** k,
            interval.T - interval.length * 0.5 ** k,
        ])
        if s_focus is not None:
            s = np.concatenate([s, np.clip(
                s_focus + eps * rng.uniform(-2, 2, size=m // 2),
                interval.t, interval.T)])
        z = _ball_samples(rng, state_radius, s.size, n)
        v = _ball_samples(rng, 4.0, s.size, n) * rng.choice(
            [0.25, 1.0, 4.0], size=(s.size, 1))
        s1 = np.clip(s + rng.uniform(-eps, eps, size=s.size), interval.t, interval.T)
        s2 = np.clip(s + rng.uniform(-eps, eps, size=s.size), interval.t, interval.T)
        ok = np.abs(s2 - s1) > 1e-14 * interval.length
        lam0 = _lam_grid(lag, s, z, v)
        ok &= np.isfinite(lam0)
        s, s1, s2, z, v, lam0 = s[ok], s1[ok], s2[ok], z[ok], v[ok], lam0[ok]
        lam1 = _lam_grid(lag, s1, z, v)
        lam2 = _lam_grid(lag, s2, z, v)
        quot = np.abs(lam2 - lam1) / np.abs(s2 - s1)
        return {"s": s, "s1": s1, "s2": s2, "z": z, "v": v,
                "lam0": lam0, "vmag": np.linalg.norm(v, axis=1), "quot": quot}

    pools = [batch(eps0, None)]
    fits = []
    for level in range(3):
        data = {k: np.concatenate([pl[k] for pl in pools]) for k in pools[0]}
        if np.all(data["quot"] == 0.0):
            return ConditionReport(
                Condition.TIME_LIPSCHITZ, Verdict.HOLDS,
                constants={"kappa": 0.0, "beta": 0.0, "gamma": 0.0,
                           "eps_star": eps0, "residual": 0.0},
                sampling={"seed": sampling.seed, "samples": int(data["s"].size),
                          "refinements": level},
            )
        kappa, beta, gamma = _fit_time_rate(data["lam0"], data["vmag"] ** p, data["quot"])
        fits.append(kappa * max(float(np.mean(data["lam0"])), 1e-12)
                    + beta * max(float(np.mean(data["vmag"] ** p)), 1e-12) + gamma)
        if level < 2:
            worst = int(np.argmax(data["quot"] - kappa * data["lam0"]
                                  - beta * data["vmag"] ** p))
            pools.append(batch(eps0 / 2.0 ** (level + 1), float(data["s"][worst])))

    grew = fits[2] > 3.0 * fits[0] + 1e-12 and fits[2] > fits[1] > fits[0]
    worst = int(np.argmax(data["quot"] - kappa * data["lam0"] - beta * data["vmag"] ** p))
    witness = {
        "s": float(data["s"][worst]),
        "s1": float(data["s1"][worst]),
        "s2": float(data["s2"][worst]),
        "z": data["z"][worst].tolist(),
        "v": data["v"][worst].tolist(),
        "quotient": float(data["quot"][worst]),
    }
    residual = float(np.max(data["quot"] - kappa * data["lam0"]
                            - beta * data["vmag"] ** p - gamma))
    report_sampling = {"seed": sampling.seed, "samples": int(data["s"].size),
                       "refinements": 2, "fit_track": fits}
    if grew:
        return ConditionReport(Condition.TIME_LIPSCHITZ, Verdict.FAILS_WITH_WITNESS,
                               constants={"kappa": kappa, "beta": beta, "gamma": gamma,
                                          "eps_star": eps0},
                               witness=witness, sampling=report_sampling)
    if residual <= 1e-9 * max(1.0, gamma + 1.0):
        return ConditionReport(Condition.TIME_LIPSCHITZ, Verdict.HOLDS,
                               constants={"kappa": kappa, "beta": beta, "gamma": gamma,
                                          "eps_star": eps0, "residual": max(residual, 0.0)},
                               sampling=report_sampling)
    return ConditionReport(Condition.TIME_LIPSCHITZ, Verdict.INCONCLUSIVE,
                           constants={"kappa": kappa, "beta": beta, "gamma": gamma,
                                      "eps_star": eps0, "residual": residual},
                           witness=witness, sampling=report_sampling)


# ---------------------------------------------------------------------------
# Linear growth from below
# ---------------------------------------------------------------------------


def check_linear_growth(
    lag: ProductLagrangian,
    sampling: SamplingSpec = DEFAULT_SAMPLING,
    state_radius: float = 2.0,
    velocity_max: float = 64.0,
) -> ConditionReport:
    """Largest alpha (by halving from 4) such that Lambda >= alpha|v| - d
    holds with a d that stays stable when the sampled velocity radius
    doubles; an offset that keeps growing with the radius certifies
    failure along large velocities."""
    rng = sampling.rng(2)
    n = lag.dimension
    m = sampling.n_velocity * 8

    def offsets(alpha: float, radius: float) -> tuple[float, dict]:
        s = rng.uniform(lag.interval.t, lag.interval.T, size=m)
        z = _ball_samples(rng, state_radius, m, n)
        v = _ball_samples(rng, radius, m, n)
        # deterministic spokes at the sampling radius
        spokes = radius * np.concatenate([np.eye(n), -np.eye(n)])
        v = np.concatenate([v, spokes])
        s = np.concatenate([s, rng.uniform(lag.interval.t, lag.interval.T,
                                           size=spokes.shape[0])])
        z = np.concatenate([z, np.zeros((spokes.shape[0], n))])
        lam = _lam_grid(lag, s, z, v)
        gap = alpha * np.linalg.norm(v, axis=1) - np.where(np.isinf(lam), np.inf, lam)
        gap = np.where(np.isinf(lam), -np.inf, gap)  # infinite Lambda never binds
        worst = int(np.argmax(gap))
        return max(float(gap[worst]), 0.0), {
            "s": float(s[worst]), "z": z[worst].tolist(), "v": v[worst].tolist()}

    alpha = 4.0
    last_witness: dict | None = None
    for _ in range(10):
        d_half, _ = offsets(alpha, velocity_max / 2.0)
        d_full, wit = offsets(alpha, velocity_max)
        stable = d_full <= d_half + 0.05 * alpha * velocity_max / 2.0 + 1e-9
        if stable:
            return ConditionReport(
                Condition.LINEAR_GROWTH, Verdict.HOLDS,
                constants={"alpha": alpha, "d": d_full},
                sampling={"seed": sampling.seed, "velocity_max": velocity_max,
                          "samples": m})
        last_witness = {**wit, "alpha": alpha, "d_attempted": d_half}
        alpha *= 0.5
    return ConditionReport(
        Condition.LINEAR_GROWTH, Verdict.FAILS_WITH_WITNESS,
        constants={"alpha_min_tried": alpha * 2.0},
        witness=last_witness,
        sampling={"seed": sampling.seed, "velocity_max": velocity_max, "samples": m})


# ---------------------------------------------------------------------------
# Boundedness of Lambda on velocity boxes
# ---------------------------------------------------------------------------


DEFAULT_NU_GRID = tuple(0.05 * 2.0 ** k for k in range(7))  # 0.05 .. 3.2


def check_velocity_box(
    lag: ProductLagrangian,
    state_radius: float | None = None,
    nu_grid: tuple[float, ...] = DEFAULT_NU_GRID,
    sampling: SamplingSpec = DEFAULT_SAMPLING,
    y: Trajectory | None = None,
    neighborhood: float = 0.05,
) -> ConditionReport:
    """Largest radius in nu_grid whose velocity ball keeps Lambda finite
    over the sampled states (a ball of the given radius, or a
    neighborhood of a trajectory's range).  The sample pool is nested
    across radii so the reported sup is monotone in the radius."""
    rng = sampling.rng(3)
    n = lag.dimension
    states = _state_pool(lag, sampling, rng, state_radius, y, neighborhood)
    nu_grid = tuple(sorted(nu_grid))
    times = np.linspace(lag.interval.t, lag.interval.T, sampling.n_time)

    pool_v = [np.zeros((1, n))]
    lower = 0.0
    batches: list[np.ndarray] = []
    for nu in nu_grid:
        shell = _ball_samples(rng, 1.0, sampling.n_velocity, n)
        mags = rng.uniform(lower, nu, size=(sampling.n_velocity, 1))
        norms = np.linalg.norm(shell, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        batch = shell / norms * mags
        spokes = nu * np.concatenate([np.eye(n), -np.eye(n)])
        batches.append(np.concatenate([batch, spokes]))
        lower = nu
    pool = np.concatenate(pool_v + batches)
    pool_norm = np.linalg.norm(pool, axis=1)

    best: tuple[float, float] | None = None
    first_witness: dict | None = None
    rejected_at: float | None = None
    ns = states.shape[0]
    for nu in nu_grid:
        vs = pool[pool_norm <= nu * (1 + 1e-12)]
        nv = vs.shape[0]
        zz = np.repeat(states, nv, axis=0)
        uu = np.tile(vs, (ns, 1))
        sup = 0.0
        witness = None
        for t in times:
            lam = _lam_grid(lag, np.full(zz.shape[0], t), zz, uu)
            if np.any(np.isinf(lam)):
                k = int(np.argmax(np.isinf(lam)))
                witness = {"s": float(t), "z": zz[k].tolist(), "u": uu[k].tolist()}
                break
            sup = max(sup, float(np.max(lam)))
        if witness:
            rejected_at = nu
            if first_witness is None:
                first_witness = witness
            break
        best = (nu, sup)

    samp = {"seed": sampling.seed, "states": int(states.shape[0]),
            "velocities": int(pool.shape[0]), "times": int(times.size),
            "nu_grid": list(nu_grid)}
    if best is None:
        return ConditionReport(Condition.VELOCITY_BOX, Verdict.FAILS_WITH_WITNESS,
                               constants={"nu_rejected": rejected_at},
                               witness=first_witness, sampling=samp)
    constants = {"nu0": best[0], "bound": best[1]}
    if rejected_at is not None:
        constants["nu_rejected"] = rejected_at
    return ConditionReport(Condition.VELOCITY_BOX, Verdict.HOLDS,
                           constants=constants, sampling=samp)


# ---------------------------------------------------------------------------
# The weight factor Psi
# ---------------------------------------------------------------------------


def check_weight(
    lag: ProductLagrangian,
    state_radius: float | None = None,
    mode: str = "boundedness",
    sampling: SamplingSpec = DEFAULT_SAMPLING,
    y: Trajectory | None = None,
    neighborhood: float = 0.05,
    positivity_floor: float = POSITIVITY_FLOOR,
) -> ConditionReport:
    """Boundedness, time continuity, or positive lower bound of Psi over
    sampled states (ball of radius state_radius, or along a trajectory's
    graph when one is given)."""
    rng = sampling.rng(4)
    interval = lag.interval
    times = np.linspace(interval.t, interval.T, sampling.n_time)

    if y is not None and mode == "positivity":
        s = np.linspace(interval.t, interval.T, 8 * sampling.n_state)
        states = y.value_at(s)
        psi = lag.psi_values(s, states)
        k = int(np.argmin(psi))
        m = float(psi[k])
        samp = {"seed": sampling.seed, "graph_samples": int(s.size)}
        if m > positivity_floor:
            return ConditionReport(Condition.WEIGHT_POSITIVE, Verdict.HOLDS,
                                   constants={"m": m}, sampling=samp)
        return ConditionReport(Condition.WEIGHT_POSITIVE, Verdict.FAILS_WITH_WITNESS,
                               constants={"m": m, "floor": positivity_floor},
                               witness={"s": float(s[k]), "z": states[k].tolist(),
                                        "psi": m},
                               sampling=samp)

    states = _state_pool(lag, sampling, rng, state_radius, y, neighborhood)
    if state_radius is not None:
        n = lag.dimension
        corners = state_radius * np.asarray(
            np.meshgrid(*([[-1.0, 1.0]] * n))).reshape(n, -1).T
        states = np.concatenate([states, corners])
    samp = {"seed": sampling.seed, "states": int(states.shape[0]),
            "times": int(times.size)}

    if mode == "boundedness":
        sup = 0.0
        witness = None
        for t in (interval.t, interval.T, *times):
            psi = lag.psi_values(np.full(states.shape[0], t), states)
            if np.any(np.isinf(psi)):
                k = int(np.argmax(np.isinf(psi)))
                witness = {"s": float(t), "z": states[k].tolist()}
                break
            sup = max(sup, float(np.max(psi)))
        if witness:
            return ConditionReport(Condition.WEIGHT_BOUNDED, Verdict.FAILS_WITH_WITNESS,
                                   witness=witness, sampling=samp)
        return ConditionReport(Condition.WEIGHT_BOUNDED, Verdict.HOLDS,
                               constants={"bound": sup}, sampling=samp)

    if mode == "continuity_in_s":
        delta0 = interval.length / 16.0
        worst: dict | None = None
        moduli = []
        for delta in (delta0, delta0 / 4.0, delta0 / 16.0):
            omega = 0.0
            for z in states[:: max(1, states.shape[0] // 24)]:
                s1 = rng.uniform(interval.t, interval.T, size=64)
                s2 = np.clip(s1 + rng.uniform(-delta, delta, size=64),
                             interval.t, interval.T)
                zz = np.broadcast_to(z, (64, z.size))
                dif = np.abs(lag.psi_values(s1, zz) - lag.psi_values(s2, zz))
                k = int(np.argmax(dif))
                if float(dif[k]) > omega:
                    omega = float(dif[k])
                    worst = {"s1": float(s1[k]), "s2": float(s2[k]), "z": z.tolist(),
                             "jump": omega}
            moduli.append(omega)
        samp["moduli"] = moduli
        if moduli[-1] <= 0.5 * moduli[0] + 1e-12:
            return ConditionReport(Condition.WEIGHT_TIME_CONTINUOUS, Verdict.HOLDS,
                                   constants={"modulus_track": moduli}, sampling=samp)
        if moduli[-1] >= 0.9 * moduli[0] > 0:
            return ConditionReport(Condition.WEIGHT_TIME_CONTINUOUS,
                                   Verdict.FAILS_WITH_WITNESS,
                                   constants={"modulus_track": moduli},
                                   witness=worst, sampling=samp)
        return ConditionReport(Condition.WEIGHT_TIME_CONTINUOUS, Verdict.INCONCLUSIVE,
                               constants={"modulus_track": moduli}, witness=worst,
                               sampling=samp)

    if mode == "positivity":
        inf_val = math.inf
        witness = None
        for t in times:
            psi = lag.psi_values(np.full(states.shape[0], t), states)
            k = int(np.argmin(psi))
            if float(psi[k]) < inf_val:
                inf_val = float(psi[k])
                witness = {"s": float(t), "z": states[k].tolist(), "psi": inf_val}
        if inf_val > positivity_floor:
            return ConditionReport(Condition.WEIGHT_POSITIVE, Verdict.HOLDS,
                                   constants={"m": inf_val}, sampling=samp)
        return ConditionReport(Condition.WEIGHT_POSITIVE, Verdict.FAILS_WITH_WITNESS,
                               constants={"m": inf_val, "floor": positivity_floor},
                               witness=witness, sampling=samp)

    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Range window
# ---------------------------------------------------------------------------


DEFAULT_RADII = (1.0, 4.0, 16.0, 64.0, 256.0)


def default_windows(y: Trajectory) -> list[tuple[float, float]]:
    vals = y.value_at(np.linspace(y.interval.t, y.interval.T, 513))[:, 0]
    lo, hi = float(np.min(vals)), float(np.max(vals))
    span = hi - lo
    qs = [(0.40, 0.60), (0.20, 0.40), (0.60, 0.80), (0.10, 0.30), (0.70, 0.90)]
    return [(lo + a * span, lo + b * span) for a, b in qs if span > 0]


def check_range_window(
    lag: ProductLagrangian,
    y: Trajectory,
    r_list: tuple[float, ...] = DEFAULT_RADII,
    candidate_windows: list[tuple[float, float]] | None = None,
    sampling: SamplingSpec = DEFAULT_SAMPLING,
) -> ConditionReport:
    """Scan candidate open windows of the trajectory's range for one on
    which Lambda stays finite for every sampled velocity radius."""
    rng = sampling.rng(5)
    samp = {"seed": sampling.seed, "radii": list(r_list)}
    if y.dimension != 1:
        return ConditionReport(Condition.RANGE_WINDOW, Verdict.INCONCLUSIVE,
                               constants={"reason": "vector-valued range"},
                               sampling=samp)
    vals = y.value_at(np.linspace(y.interval.t, y.interval.T, 257))[:, 0]
    if float(np.max(vals) - np.min(vals)) <= 0:
        return ConditionReport(Condition.RANGE_WINDOW, Verdict.INCONCLUSIVE,
                               constants={"reason": "constant range"}, sampling=samp)
    windows = candidate_windows if candidate_windows is not None else default_windows(y)
    samp["windows"] = [list(w) for w in windows]
    times = np.linspace(lag.interval.t, lag.interval.T, sampling.n_time)

    failures: list[dict] = []
    for window in windows:
        lo, hi = window
        z = np.linspace(lo, hi, sampling.n_state)[1:-1][:, None]
        bad = None
        bound = 0.0
        for r in r_list:
            u = np.concatenate([_ball_samples(rng, r, sampling.n_velocity, 1),
                                np.asarray([[r], [-r], [0.0]])])
            for t in times[:: max(1, times.size // 8)]:
                for uu in u:
                    lam = _lam_grid(lag, np.full(z.shape[0], t), z,
                                    np.broadcast_to(uu, z.shape))
                    if np.any(np.isinf(lam)):
                        k = int(np.argmax(np.isinf(lam)))
                        bad = {"window": list(window), "r": float(r),
                               "s": float(t), "z": z[k].tolist(), "u": uu.tolist()}
                        break
                    bound = max(bound, float(np.max(lam)))
                if bad:
                    break
            if bad:
                break
        if bad is None:
            return ConditionReport(Condition.RANGE_WINDOW, Verdict.HOLDS,
                                   constants={"window": list(window), "bound": bound},
                                   sampling=samp)
        failures.append(bad)
    return ConditionReport(Condition.RANGE_WINDOW, Verdict.FAILS_WITH_WITNESS,
                           constants={"windows_tried": len(windows)},
                           witness=failures[0] if failures else None,
                           sampling={**samp, "failures": failures})


# ---------------------------------------------------------------------------
# Closed-form bounds
# ---------------------------------------------------------------------------


def derivative_l1_bound(F_y: float, m: float, alpha: float, d: float,
                        interval: Interval) -> float:
    """Upper bound on the integral of |y'| from the energy, a positive
    lower bound m for the weight along the graph, and linear growth
    constants (alpha, d).  The bound reads (F(y) + m d (T-t)) / (m alpha)."""
    if m <= 0 or alpha <= 0:
        raise ValueError("m and alpha must be positive")
    if not math.isfinite(F_y):
        raise ValueError("F_y must be finite")
    return (F_y + m * d * interval.length) / (m * alpha)


def state_radius_bound(X, inf_value: float, m: float, alpha: float, d: float,
                       interval: Interval) -> float:
    """Radius beyond which boundedness hypotheses on a single ball
    suffice for a minimizing sequence with initial datum X:
    |X| + (inf + m d (T-t)) / (m alpha)."""
    Xv = np.atleast_1d(np.asarray(X, dtype=float))
    return float(np.linalg.norm(Xv)) + derivative_l1_bound(inf_value, m, alpha, d,
                                                           interval)


# ---------------------------------------------------------------------------
# Gate
# ---------------------------------------------------------------------------

_MISSING_INTEGRABLE = "lambda_along_y_integrable"


@dataclass
class GateReport:
    applicable: bool
    missing: list[str]
    variant: str
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"applicable": self.applicable, "missing": self.missing,
                "variant": self.variant, "details": self.details}


def applicability_gate(
    lag: ProductLagrangian,
    y: Trajectory,
    boundary: BoundaryData,
    reports: dict[Condition, ConditionReport],
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> GateReport:
    """Decide whether the no-gap construction applies at y for the given
    boundary data, listing any missing hypotheses.

    The one-endpoint variant needs the time condition, the velocity box
    and the weight boundedness/continuity along the graph, plus the
    integrability of Lambda along (s, y, y'); the latter is granted by a
    positive weight lower bound or probed by direct quadrature.  The
    two-endpoint variant additionally needs a bounded range window.
    """
    missing: list[str] = []
    details: dict = {}
    for cond in (Condition.TIME_LIPSCHITZ, Condition.VELOCITY_BOX,
                 Condition.WEIGHT_BOUNDED, Condition.WEIGHT_TIME_CONTINUOUS):
        rep = reports.get(cond)
        if rep is None or not rep.holds:
            missing.append(cond.value)

    positive = reports.get(Condition.WEIGHT_POSITIVE)
    if positive is not None and positive.holds:
        details["integrability"] = "granted by the positive weight bound"
    else:
        probe = lambda_along(lag, y, spec)
        details["integrability"] = f"direct quadrature: {probe!r}"
        if probe.is_infinite:
            missing.append(_MISSING_INTEGRABLE)

    variant = "two_endpoint" if boundary.kind == "both" else "one_endpoint"
    if variant == "two_endpoint":
        rep = reports.get(Condition.RANGE_WINDOW)
        if rep is None or not rep.holds:
            missing.append(Condition.RANGE_WINDOW.value)
    return GateReport(applicable=not missing, missing=missing, variant=variant,
                      details=details)


def run_all_checks(
    lag: ProductLagrangian,
    y: Trajectory,
    sampling: SamplingSpec = DEFAULT_SAMPLING,
    neighborhood: float = 0.05,
) -> dict[Condition, ConditionReport]:
    """All trajectory-local checkers needed by the applicability gate."""
    K = sup_norm(y) + neighborhood
    return {
        Condition.TIME_LIPSCHITZ: check_time_lipschitz(lag, K, sampling=sampling),
        Condition.VELOCITY_BOX: check_velocity_box(lag, y=y, sampling=sampling,
                                                   neighborhood=neighborhood),
        Condition.WEIGHT_BOUNDED: check_weight(lag, mode="boundedness", y=y,
                                               sampling=sampling,
                                               neighborhood=neighborhood),
        Condition.WEIGHT_TIME_CONTINUOUS: check_weight(lag, mode="continuity_in_s",
                                                       y=y, sampling=sampling,
                                                       neighborhood=neighborhood),
        Condition.WEIGHT_POSITIVE: check_weight(lag, mode="positivity", y=y,
                                                sampling=sampling),
        Condition.RANGE_WINDOW: check_range_window(lag, y, sampling=sampling),
    }
