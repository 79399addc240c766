"""Ergonomics-aware planning for multi-handover drone delivery missions.

The package turns a mission description (workspace, obstacles, operators
with approach preferences, refill stations, payload capacity, timing) into
a dynamically feasible trajectory: an exact routing step fixes the visit
order, the mission is compiled into one signal-temporal-logic conjunction,
and projected gradient ascent on a smoothed robustness measure shapes the
final trajectory.
"""

from .dynamics import (
    KinematicLimits,
    State,
    Trajectory,
    rest_to_rest_duration,
    rest_to_rest_segment,
    rollout,
    step,
)
from .mission import Approach, Mission, OperatorSpec
from .mission_io import (
    BadBox,
    MissingField,
    MissionFormatError,
    RegionOutsideWorkspace,
    TimeInconsistent,
    parse_mission,
    serialize_mission,
)
from .outputs import (
    build_report,
    read_trajectory_csv,
    render_figures,
    render_svg,
    write_report,
    write_trajectory_csv,
)
from .planner import (
    DegenerateRegion,
    GridMismatch,
    HorizonTooShort,
    OptimizerSettings,
    PlanResult,
    Status,
    clip_box_to_workspace,
    compile_mission,
    derive_regions,
    optimize,
    validate,
)
from .routing import (
    Disconnected,
    HorizonExceeded,
    IlpSolution,
    Infeasible,
    Route,
    RoutingError,
    RoutingGraph,
    build_graph,
    capacity_cut_rhs,
    extract_route,
    plan_route,
    route_to_trajectory,
    solve_ilp,
)
from .smooth import SmoothConfig, SmoothValueGrad, eval_smooth, eval_smooth_grad, smooth_max, smooth_min
from .stl import (
    AffinePredicate,
    Always,
    And,
    Box3,
    EmptyWindow,
    Eventually,
    Interval,
    Not,
    Or,
    Pred,
    StlError,
    StlFormula,
    TimedTrace,
    Until,
    box_avoids,
    box_contains,
    eval_bool,
    eval_robustness,
    window_indices,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # signals and formulas
    "AffinePredicate", "Always", "And", "Box3", "EmptyWindow", "Eventually",
    "Interval", "Not", "Or", "Pred", "StlError", "StlFormula", "TimedTrace",
    "Until", "box_avoids", "box_contains", "eval_bool", "eval_robustness",
    "window_indices",
    # smoothing
    "SmoothConfig", "SmoothValueGrad", "eval_smooth", "eval_smooth_grad",
    "smooth_max", "smooth_min",
    # dynamics
    "KinematicLimits", "State", "Trajectory", "rest_to_rest_duration",
    "rest_to_rest_segment", "rollout", "step",
    # mission model and formats
    "Approach", "Mission", "OperatorSpec", "BadBox", "MissingField",
    "MissionFormatError", "RegionOutsideWorkspace", "TimeInconsistent",
    "parse_mission", "serialize_mission",
    # routing
    "Disconnected", "HorizonExceeded", "IlpSolution", "Infeasible", "Route",
    "RoutingError", "RoutingGraph", "build_graph", "capacity_cut_rhs",
    "extract_route", "plan_route", "route_to_trajectory", "solve_ilp",
    # planning
    "DegenerateRegion", "GridMismatch", "HorizonTooShort", "OptimizerSettings",
    "PlanResult", "Status", "clip_box_to_workspace", "compile_mission",
    "derive_regions", "optimize", "validate",
    # artifacts
    "build_report", "read_trajectory_csv", "render_figures", "render_svg",
    "write_report", "write_trajectory_csv",
]
