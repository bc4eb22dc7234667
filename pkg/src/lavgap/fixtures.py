"""Named trajectories and ready-made problem setups used by the CLI,
the demos and the test suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .intervals import Interval
from .lagrangian import BoundaryData, ProductLagrangian, builtin
from .trajectories import ClosedFormTrajectory, Trajectory

UNIT = Interval(0.0, 1.0)


def cuberoot() -> ClosedFormTrajectory:
    def value(s):
        return np.cbrt(s)

    def derivative(s):
        with np.errstate(divide="ignore"):
            return np.where(s > 0, 1.0 / (3.0 * np.cbrt(s) ** 2), np.inf)

    return ClosedFormTrajectory(UNIT, value, derivative, name="cuberoot")


def sqrt() -> ClosedFormTrajectory:
    def value(s):
        return np.sqrt(s)

    def derivative(s):
        with np.errstate(divide="ignore"):
            return np.where(s > 0, 0.5 / np.sqrt(np.where(s > 0, s, 1.0)), np.inf)

    return ClosedFormTrajectory(UNIT, value, derivative, name="sqrt")


def affine(slope: float = 1.0, offset: float = 0.0) -> ClosedFormTrajectory:
    return ClosedFormTrajectory(
        UNIT,
        lambda s: offset + slope * s,
        lambda s: np.full_like(np.asarray(s, dtype=float), slope),
        name="affine",
    )


def one_minus_sqrt() -> ClosedFormTrajectory:
    def value(s):
        return 1.0 - np.sqrt(1.0 - s)

    def derivative(s):
        rest = 1.0 - np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(rest > 0, 0.5 / np.sqrt(np.where(rest > 0, rest, 1.0)),
                            np.inf)

    return ClosedFormTrajectory(UNIT, value, derivative, name="one_minus_sqrt")


def absolute_kink() -> ClosedFormTrajectory:
    return ClosedFormTrajectory(
        UNIT,
        lambda s: np.abs(np.asarray(s, dtype=float) - 0.5),
        lambda s: np.sign(np.asarray(s, dtype=float) - 0.5),
        name="absolute_kink",
    )


def truncated_cuberoot(h: int) -> ClosedFormTrajectory:
    """Flat at h^(-1/3) up to 1/h, the cube root after; the classical
    Lipschitz approximant with a free initial value."""
    cut = 1.0 / h
    level = h ** (-1.0 / 3.0)

    def value(s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= cut, level, np.cbrt(s))

    def derivative(s):
        s = np.asarray(s, dtype=float)
        return np.where(s <= cut, 0.0, 1.0 / (3.0 * np.cbrt(np.maximum(s, cut)) ** 2))

    return ClosedFormTrajectory(UNIT, value, derivative, name=f"truncated_cuberoot_{h}")


NAMED_TRAJECTORIES = {
    "cuberoot": cuberoot,
    "sqrt": sqrt,
    "affine": affine,
    "one_minus_sqrt": one_minus_sqrt,
    "absolute_kink": absolute_kink,
}


def named_trajectory(name: str) -> Trajectory:
    try:
        return NAMED_TRAJECTORIES[name]()
    except KeyError:
        raise ValueError(
            f"unknown trajectory {name!r}; choose from {sorted(NAMED_TRAJECTORIES)}"
        ) from None


@dataclass(frozen=True)
class ProblemSetup:
    """A Lagrangian together with its canonical trajectory, boundary data
    and two-endpoint window."""

    lagrangian: ProductLagrangian
    trajectory_name: str
    boundary: BoundaryData
    window: tuple[float, float] | None = None
    velocity_radius: float | None = None

    @property
    def trajectory(self) -> Trajectory:
        return named_trajectory(self.trajectory_name)


def problem_setup(name: str, params: dict | None = None) -> ProblemSetup:
    lag = builtin(name, params)
    if name == "mania":
        return ProblemSetup(lag, "cuberoot", BoundaryData.final([1.0]),
                            velocity_radius=1e-3)
    if name == "alberti_two_endpoint":
        return ProblemSetup(lag, "one_minus_sqrt", BoundaryData.initial([0.0]))
    if name == "alberti_one_endpoint":
        return ProblemSetup(lag, "one_minus_sqrt", BoundaryData.final([1.0]))
    if name == "power":
        return ProblemSetup(lag, "affine", BoundaryData.both([0.0], [1.0]))
    if name == "arclength":
        return ProblemSetup(lag, "sqrt", BoundaryData.both([0.0], [1.0]),
                            window=(0.5, 0.9))
    raise ValueError(f"unknown problem {name!r}")
