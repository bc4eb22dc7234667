"""The integral functional F(y) = integral of Lambda(s,y,y') Psi(s,y).

Evaluation is midpoint quadrature with dyadic refinement (see the
quadrature module).  Alongside the value, energy_report keeps track of
where the integrand was infinite and where the weight Psi vanished.
Cells where Psi = 0 meets Lambda = +inf are flagged explicitly; under
the 0 * inf = inf convention they make the energy infinite rather than
silently cancelling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .extended import ExtendedValue
from .intervals import Interval, IntervalUnion
from .lagrangian import ProductLagrangian
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate
from .trajectories import Trajectory

PSI_ZERO_FLOOR = 1e-16


@dataclass
class EnergyReport:
    value: ExtendedValue
    cells_used: int
    levels: int
    evaluations: int
    converged: bool
    infinite_cells: IntervalUnion
    psi_zero_cells: IntervalUnion
    conflict_cells: IntervalUnion = field(default_factory=IntervalUnion.empty)

    def to_json(self) -> dict:
        return {
            "value": self.value.to_json(),
            "cells_used": self.cells_used,
            "levels": self.levels,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "infinite_cells": self.infinite_cells.to_json(),
            "psi_zero_cells": self.psi_zero_cells.to_json(),
            "conflict_cells": self.conflict_cells.to_json(),
        }


def _check_compatible(lag: ProductLagrangian, y: Trajectory) -> None:
    if y.dimension != lag.dimension:
        raise ValueError("trajectory dimension does not match the Lagrangian")
    if not y.interval.same_as(lag.interval, tol=1e-9 * max(1.0, lag.interval.length)):
        raise ValueError("trajectory interval does not match the Lagrangian")


def _integrand(lag: ProductLagrangian, y: Trajectory, track: bool):
    def f(mids: np.ndarray):
        yv = y.value_at(mids)
        uv = y.derivative_at(mids)
        lam = lag.lambda_values(mids, yv, uv)
        psi = lag.psi_values(mids, yv)
        inf = np.isinf(lam) | np.isinf(psi)
        vals = np.where(inf, np.inf, np.where(inf, 0.0, lam) * np.where(inf, 0.0, psi))
        if not track:
            return vals
        psi_zero = psi <= PSI_ZERO_FLOOR
        return vals, {"psi_zero": psi_zero, "conflict": psi_zero & np.isinf(lam)}

    return f


def energy(
    lag: ProductLagrangian,
    y: Trajectory,
    spec: QuadratureSpec = DEFAULT_SPEC,
    interval: Interval | None = None,
) -> ExtendedValue:
    """F(y) over the Lagrangian's interval (or a subinterval)."""
    _check_compatible(lag, y)
    dom = interval if interval is not None else lag.interval
    return integrate(_integrand(lag, y, track=False), dom, spec).value


def energy_report(
    lag: ProductLagrangian,
    y: Trajectory,
    spec: QuadratureSpec = DEFAULT_SPEC,
    interval: Interval | None = None,
) -> EnergyReport:
    """As energy, plus where the integrand was infinite and Psi vanished."""
    _check_compatible(lag, y)
    dom = interval if interval is not None else lag.interval
    out = integrate(_integrand(lag, y, track=True), dom, spec)
    gap_tol = 1e-12 * dom.length
    return EnergyReport(
        value=out.value,
        cells_used=out.cells_used,
        levels=out.levels,
        evaluations=out.evaluations,
        converged=out.converged,
        infinite_cells=out.infinite_cells.merge_gaps(gap_tol),
        psi_zero_cells=out.flagged.get("psi_zero", IntervalUnion.empty()).merge_gaps(gap_tol),
        conflict_cells=out.flagged.get("conflict", IntervalUnion.empty()).merge_gaps(gap_tol),
    )


def lambda_along(
    lag: ProductLagrangian,
    y: Trajectory,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> ExtendedValue:
    """Integral of Lambda(s, y, y') alone, the integrability probe used
    by the applicability gate."""
    _check_compatible(lag, y)

    def f(mids: np.ndarray) -> np.ndarray:
        return lag.lambda_values(mids, y.value_at(mids), y.derivative_at(mids))

    return integrate(f, lag.interval, spec).value
