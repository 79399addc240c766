"""Command-line entry points: ``plan``, ``check``, and ``route``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from .mission import Mission
from .mission_io import MissionFormatError, parse_mission
from .outputs import (
    build_report,
    read_trajectory_csv,
    render_figures,
    render_svg,
    write_report,
    write_trajectory_csv,
)
from .planner import (
    OptimizerSettings,
    Status,
    optimize,
    validate,
)
from .routing import HorizonExceeded, Infeasible, Route, plan_route, route_to_trajectory
from .smooth import SmoothConfig

__all__ = ["main", "build_parser"]

EXIT_SATISFIED = 0
EXIT_UNSATISFIED = 2
EXIT_INFEASIBLE = 3
EXIT_BAD_INPUT = 4

log = logging.getLogger("ergoplan")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ergoplan",
        description="Route and optimize ergonomic multi-handover drone missions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    plan = sub.add_parser("plan", help="plan a mission and write artifacts")
    plan.add_argument("mission", type=Path, help="mission JSON file")
    plan.add_argument("-o", "--out-dir", type=Path, default=Path("."),
                      help="directory for artifacts (default: current directory)")
    plan.add_argument("--smooth", choices=("agm", "lse"), default="agm",
                      help="robustness smoothing used by the optimizer")
    plan.add_argument("--beta", type=float, default=10.0,
                      help="sharpness of the lse smoothing")
    plan.add_argument("--max-iters", type=int, default=2000)
    plan.add_argument("--tol", type=float, default=1e-6,
                      help="stop once an accepted step gains less than this")
    plan.add_argument("--route-only", action="store_true",
                      help="skip optimization; emit the stitched seed trajectory")
    plan.add_argument("--svg", action="store_true",
                      help="also write a top-down SVG sketch")
    plan.add_argument("--seed", type=int, default=None,
                      help="recorded in the report; planning is deterministic")

    check = sub.add_parser("check", help="score a trajectory CSV against a mission")
    check.add_argument("mission", type=Path)
    check.add_argument("trajectory", type=Path, help="trajectory CSV file")

    route = sub.add_parser("route", help="print the optimal visit order")
    route.add_argument("mission", type=Path)
    return parser


def _configure_logging() -> None:
    name = os.environ.get("ERGOPLAN_LOG", "WARNING").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_mission(path: Path) -> Mission:
    return parse_mission(path.read_text())


def _route_text(route: Route, mission: Mission) -> str:
    n_ops = len(mission.operators)
    names = []
    for vid, kind in zip(route.stops, route.kinds):
        if kind == "depot":
            names.append("depot")
        elif kind == "operator":
            names.append(f"operator {vid}")
        else:
            names.append(f"refill {vid - n_ops}")
    return " -> ".join(names) + f" ({route.length:.2f} m)"


def _cmd_plan(args: argparse.Namespace) -> int:
    mission = _load_mission(args.mission)
    started = time.perf_counter()
    route = plan_route(mission)
    seed = route_to_trajectory(route, mission)
    log.info("routing and seed construction took %.3f s", time.perf_counter() - started)

    smoothing = SmoothConfig(mode=args.smooth, beta=args.beta)
    settings = OptimizerSettings(max_iters=args.max_iters, tol=args.tol, seed=args.seed)
    if args.route_only:
        result = validate(seed, mission, smoothing)
    else:
        started = time.perf_counter()
        result = optimize(mission, seed, smoothing, settings)
        log.info(
            "optimization: %d accepted steps in %.2f s",
            result.iterations,
            time.perf_counter() - started,
        )

    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "trajectory.csv"
    report_path = out / "report.json"
    write_trajectory_csv(csv_path, result.trajectory)
    write_report(report_path, build_report(result, smoothing, settings))
    written = [csv_path, report_path]
    written.extend(render_figures(out, mission, result.trajectory))
    if args.svg:
        svg_path = out / "mission.svg"
        render_svg(svg_path, mission, result.trajectory)
        written.append(svg_path)

    print(f"route: {_route_text(result.route, mission)}")
    print(f"status: {result.status.value}")
    print(f"exact robustness: {result.exact_robustness:.6f}")
    print(f"iterations: {result.iterations}")
    print("wrote: " + " ".join(str(p) for p in written))
    return EXIT_SATISFIED if result.status is Status.SATISFIED else EXIT_UNSATISFIED


def _cmd_check(args: argparse.Namespace) -> int:
    mission = _load_mission(args.mission)
    trajectory = read_trajectory_csv(args.trajectory)
    result = validate(trajectory, mission)
    print(f"status: {result.status.value}")
    print(f"exact robustness: {result.exact_robustness:.6f}")
    width = max(len(label) for label, _ in result.per_subformula)
    for label, value in result.per_subformula:
        print(f"  {label:<{width}}  {value: .6f}")
    return EXIT_SATISFIED if result.status is Status.SATISFIED else EXIT_UNSATISFIED


def _cmd_route(args: argparse.Namespace) -> int:
    mission = _load_mission(args.mission)
    route = plan_route(mission)
    print(_route_text(route, mission))
    return EXIT_SATISFIED


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plan":
            return _cmd_plan(args)
        if args.command == "check":
            return _cmd_check(args)
        return _cmd_route(args)
    except MissionFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (Infeasible, HorizonExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ValueError as exc:  # malformed CSV, grid mismatch, degenerate regions
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
