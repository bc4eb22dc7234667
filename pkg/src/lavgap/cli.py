"""Command line front end.

Subcommands: check | construct | gap | demo.  Exit codes: 0 when the
run completed and assertions passed, 1 on configuration errors, 2 when
a construction invariant or a demo threshold failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .conditions import SamplingSpec, applicability_gate, check_velocity_box, run_all_checks
from .demos import run_demo
from .fixtures import named_trajectory, problem_setup
from .gapsearch import gap_report
from .lagrangian import BoundaryData
from .quadrature import DEFAULT_SPEC
from .reparam import ConstructionError, StageParams, construct_sequence
from .serialize import (
    problem_config_to_json,
    read_problem_config,
    read_trajectory_json,
    write_construction_csv,
    write_json,
    write_sweep_csv,
)
from .trajectories import as_piecewise_linear

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ASSERTION = 2


class ConfigError(ValueError):
    pass


def _load_problem(args):
    if args.config:
        lag, boundary = read_problem_config(args.config)
        setup = problem_setup(lag.name, {"p": lag.p} if lag.name == "power" else None)
        return lag, boundary, setup
    if not args.problem:
        raise ConfigError("pass --problem NAME or --config FILE")
    params = {"p": args.p} if args.p is not None else None
    setup = problem_setup(args.problem, params)
    boundary = setup.boundary
    return setup.lagrangian, boundary, setup


def _load_trajectory(args, setup):
    if args.trajectory is None:
        return setup.trajectory
    path = Path(args.trajectory)
    if path.suffix == ".json" and path.exists():
        return read_trajectory_json(path)
    return named_trajectory(args.trajectory)


def _quad(args):
    if args.quad_tol is None:
        return DEFAULT_SPEC
    return DEFAULT_SPEC.with_tol(args.quad_tol)


def _outdir(args) -> Path | None:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_check(args) -> int:
    lag, boundary, setup = _load_problem(args)
    y = _load_trajectory(args, setup)
    reports = run_all_checks(lag, y, SamplingSpec(seed=args.seed))
    gate = applicability_gate(lag, y, boundary, reports)

    rows = [(r.condition.value, r.verdict.value,
             ", ".join(f"{k}={v}" for k, v in sorted(r.constants.items())
                       if not isinstance(v, (list, dict))))
            for r in reports.values()]
    width = max(len(r[0]) for r in rows)
    print(f"problem: {lag.name}   trajectory: {getattr(y, 'name', 'from file')}")
    for name, verdict, consts in rows:
        print(f"  {name:<{width}}  {verdict:<17} {consts}")
    print(f"gate[{gate.variant}]: applicable={gate.applicable} missing={gate.missing}")

    out = _outdir(args)
    if out is not None:
        payload = {
            "problem": problem_config_to_json(lag, boundary),
            "reports": {r.condition.value: r.to_json() for r in reports.values()},
            "gate": gate.to_json(),
        }
        write_json(out / "check.json", payload)
    return EXIT_OK


def cmd_construct(args) -> int:
    lag, boundary, setup = _load_problem(args)
    y = _load_trajectory(args, setup)
    if args.variant:
        kind = {"initial": "initial", "final": "final", "both": "both"}[args.variant]
        if kind != boundary.kind:
            t, T = lag.interval.t, lag.interval.T
            from .lagrangian import BoundaryData

            left = y.value(t)
            right = y.value(T)
            boundary = {"initial": BoundaryData.initial(left),
                        "final": BoundaryData.final(right),
                        "both": BoundaryData.both(left, right)}[kind]
    window = setup.window
    if args.window:
        lo, hi = (float(x) for x in args.window.split(","))
        window = (lo, hi)
    nu = args.nu if args.nu is not None else setup.velocity_radius
    if nu is None:
        from .conditions import check_velocity_box

        box = check_velocity_box(lag, y=y, sampling=SamplingSpec(seed=args.seed))
        if not box.holds:
            print(f"no usable velocity box: {box.witness}", file=sys.stderr)
            return EXIT_ASSERTION
        nu = box.constants["nu0"]
    params = StageParams(velocity_radius=nu, window=window, quad=_quad(args))
    try:
        reports = construct_sequence(lag, y, boundary, params, h_max=args.hmax)
    except ConstructionError as err:
        print(f"construction failed: {err}", file=sys.stderr)
        return EXIT_ASSERTION

    header = ("stage", "|steep|", "|slow|", "res_left", "res_right", "lip",
              "dist_w1p", "energy")
    print(("{:>5} " + "{:>11} " * 7).format(*header))
    for rep in reports:
        d = rep.diagnostics
        print("{:>5d} {:>11.4e} {:>11.4e} {:>11.2e} {:>11.2e} {:>11.4e} "
              "{:>11.4e} {:>11.4e}".format(
                  rep.stage, d["measure_steep"], d["measure_slowdown"],
                  d["endpoint_residual_left"], d["endpoint_residual_right"],
                  d["lipschitz_constant"], float(d["distance_w1p"]),
                  float(d["energy"])))
    out = _outdir(args)
    if out is not None:
        write_construction_csv(out / "construct.csv", reports)
        write_json(out / "construct.json", {
            "problem": problem_config_to_json(lag, boundary),
            "velocity_radius": nu,
            "window": list(window) if window else None,
            "reports": [r.to_json() for r in reports],
        })
        write_json(out / "approximant_final.json",
                   as_piecewise_linear(reports[-1].approximant).to_json())
    return EXIT_OK


def cmd_gap(args) -> int:
    lag, boundary, setup = _load_problem(args)
    y = _load_trajectory(args, setup)
    bounds = tuple(float(b) for b in args.bounds.split(","))
    knots = tuple(int(k) for k in args.knots.split(","))
    estimate = gap_report(lag, y, boundary, bounds=bounds, knots=knots,
                          restarts=args.restarts, seed=args.seed, spec=_quad(args),
                          workers=args.workers)
    print(f"candidate energy: {estimate.f_candidate!r}")
    for rec in estimate.records:
        print(f"  M={rec.slope_bound:<6g} knots={rec.knot_count:<5d} "
              f"best={rec.best_value!r} infinite_starts="
              f"{rec.n_infinite_starts}/{rec.n_starts}")
    print(f"verdict: {estimate.verdict.value}")
    out = _outdir(args)
    if out is not None:
        write_sweep_csv(out / "sweep.csv", estimate.records)
        write_json(out / "gap.json", estimate.to_json())
    return EXIT_OK


def cmd_demo(args) -> int:
    result = run_demo(args.name, seed=args.seed, workers=args.workers)
    print(f"demo {result.name}:")
    for line in result.lines():
        print(f"  {line}")
    print("OVERALL", "PASS" if result.passed else "FAIL")
    return EXIT_OK if result.passed else EXIT_ASSERTION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lavgap",
        description="Lipschitz approximation and gap detection for "
                    "one-dimensional variational problems")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trajectory=True):
        p.add_argument("--problem", help="builtin problem name")
        p.add_argument("--config", help="problem config JSON file")
        p.add_argument("--p", type=float, default=None,
                       help="exponent for the power problem")
        if trajectory:
            p.add_argument("--trajectory",
                           help="named trajectory or a trajectory JSON file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", help="output directory for CSV/JSON artifacts")
        p.add_argument("--quad-tol", type=float, default=None,
                       help="override both quadrature tolerances")

    p_check = sub.add_parser("check", help="run the hypothesis checkers")
    common(p_check)
    p_check.set_defaults(fn=cmd_check)

    p_con = sub.add_parser("construct", help="build the approximating sequence")
    common(p_con)
    p_con.add_argument("--variant", choices=("initial", "final", "both"),
                       help="which endpoints to pin (default: the problem's)")
    p_con.add_argument("--hmax", type=int, default=12)
    p_con.add_argument("--nu", type=float, default=None,
                       help="velocity box radius (default: from the checker)")
    p_con.add_argument("--window", help="range window lo,hi for the both variant")
    p_con.set_defaults(fn=cmd_construct)

    p_gap = sub.add_parser("gap", help="direct-search sweep for the Lipschitz infimum")
    common(p_gap)
    p_gap.add_argument("--bounds", default="2,4,8,16,32",
                       help="comma-separated slope bounds")
    p_gap.add_argument("--knots", default="32,128", help="comma-separated knot counts")
    p_gap.add_argument("--restarts", type=int, default=20)
    p_gap.set_defaults(fn=cmd_gap)

    p_demo = sub.add_parser("demo", help="canned reproduction of a named example")
    p_demo.add_argument("name", choices=("mania", "alberti", "alberti2"))
    p_demo.add_argument("--seed", type=int, default=0)
    p_demo.add_argument("--workers", type=int, default=1)
    p_demo.set_defaults(fn=cmd_demo)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError, FileNotFoundError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
