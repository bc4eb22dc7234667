"""File formats: problem configs, trajectory JSON, report CSV/JSON.

Everything written here is re-parseable by the readers below; the CLI
round-trips through these functions and the tests assert it.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any

from .extended import ExtendedValue
from .intervals import Interval
from .lagrangian import BoundaryData, ProductLagrangian, builtin
from .reparam import ConstructionReport
from .trajectories import PiecewiseLinearTrajectory

CONSTRUCT_CSV_COLUMNS = (
    "stage",
    "measure_steep",
    "measure_slowdown",
    "endpoint_residual_left",
    "endpoint_residual_right",
    "lipschitz_constant",
    "distance_w1p",
    "energy",
)

SWEEP_CSV_COLUMNS = (
    "slope_bound",
    "knot_count",
    "best_value",
    "evaluations",
    "n_starts",
    "n_infinite_starts",
)


def _cell(v: Any) -> str:
    if isinstance(v, ExtendedValue):
        return "inf" if v.is_infinite else repr(float(v))
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def _parse_cell(text: str) -> float:
    return math.inf if text == "inf" else float(text)


def write_construction_csv(path: str | Path, reports: list[ConstructionReport]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CONSTRUCT_CSV_COLUMNS)
        for rep in reports:
            d = rep.diagnostics
            writer.writerow([
                rep.stage,
                _cell(d["measure_steep"]),
                _cell(d["measure_slowdown"]),
                _cell(d["endpoint_residual_left"]),
                _cell(d["endpoint_residual_right"]),
                _cell(d["lipschitz_constant"]),
                _cell(d["distance_w1p"]),
                _cell(d["energy"]),
            ])


def read_construction_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CONSTRUCT_CSV_COLUMNS:
            raise ValueError(f"unexpected construction CSV header in {path}")
        rows = []
        for row in reader:
            parsed = {"stage": int(row["stage"])}
            for key in CONSTRUCT_CSV_COLUMNS[1:]:
                parsed[key] = _parse_cell(row[key])
            rows.append(parsed)
    return rows


def write_sweep_csv(path: str | Path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_COLUMNS)
        for rec in records:
            writer.writerow([
                _cell(rec.slope_bound),
                rec.knot_count,
                _cell(rec.best_value),
                rec.evaluations,
                rec.n_starts,
                rec.n_infinite_starts,
            ])


def read_sweep_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SWEEP_CSV_COLUMNS:
            raise ValueError(f"unexpected sweep CSV header in {path}")
        rows = []
        for row in reader:
            rows.append({
                "slope_bound": _parse_cell(row["slope_bound"]),
                "knot_count": int(row["knot_count"]),
                "best_value": _parse_cell(row["best_value"]),
                "evaluations": int(row["evaluations"]),
                "n_starts": int(row["n_starts"]),
                "n_infinite_starts": int(row["n_infinite_starts"]),
            })
    return rows


def write_json(path: str | Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: str | Path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_trajectory_json(path: str | Path, traj: PiecewiseLinearTrajectory) -> None:
    write_json(path, traj.to_json())


def read_trajectory_json(path: str | Path) -> PiecewiseLinearTrajectory:
    return PiecewiseLinearTrajectory.from_json(read_json(path))


# ---------------------------------------------------------------------------
# problem configs
# ---------------------------------------------------------------------------


def problem_config_to_json(lag: ProductLagrangian, boundary: BoundaryData,
                           params: dict | None = None) -> dict:
    return {
        "lagrangian": {"name": lag.name, "params": dict(params or {})},
        "interval": [lag.interval.t, lag.interval.T],
        "p": lag.p,
        "boundary": boundary.to_json(),
    }


def load_problem_config(obj: dict) -> tuple[ProductLagrangian, BoundaryData]:
    spec = obj["lagrangian"]
    lag = builtin(spec["name"], spec.get("params"))
    interval = Interval(*obj["interval"])
    if not lag.interval.same_as(interval):
        raise ValueError("configs may only use the builtin problem's interval")
    if "p" in obj and float(obj["p"]) != lag.p:
        raise ValueError("configs may only use the builtin problem's exponent")
    boundary = BoundaryData.from_json(obj["boundary"])
    return lag, boundary


def read_problem_config(path: str | Path) -> tuple[ProductLagrangian, BoundaryData]:
    return load_problem_config(read_json(path))
