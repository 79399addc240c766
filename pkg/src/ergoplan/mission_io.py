"""Mission file parsing and serialization (JSON with path-level diagnostics)."""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .dynamics import KinematicLimits
from .mission import Approach, Mission, OperatorSpec
from .stl import Box3

__all__ = [
    "MissionFormatError",
    "MissingField",
    "BadBox",
    "TimeInconsistent",
    "RegionOutsideWorkspace",
    "parse_mission",
    "serialize_mission",
]

_GRID_TOL = 1e-9


class MissionFormatError(ValueError):
    """A mission file failed validation; ``field`` is the offending path."""

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"{field}: {message}")


class MissingField(MissionFormatError):
    pass


class BadBox(MissionFormatError):
    pass


class TimeInconsistent(MissionFormatError):
    pass


class RegionOutsideWorkspace(MissionFormatError):
    pass


def _require(obj: Any, key: str, path: str) -> Any:
    if not isinstance(obj, dict):
        raise MissionFormatError(path or "$", "expected an object")
    if key not in obj:
        raise MissingField(f"{path}.{key}" if path else key, "required field is missing")
    return obj[key]


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MissionFormatError(path, f"expected a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise MissionFormatError(path, "number must be finite")
    return out


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise MissionFormatError(path, f"expected an integer, got {value!r}")
    return value


def _vector3(value: Any, path: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise MissionFormatError(path, "expected a list of three numbers")
    return np.array([_number(v, f"{path}[{k}]") for k, v in enumerate(value)])


def _box(value: Any, path: str) -> Box3:
    lo = _vector3(_require(value, "lo", path), f"{path}.lo")
    hi = _vector3(_require(value, "hi", path), f"{path}.hi")
    if np.any(lo >= hi):
        raise BadBox(path, f"box needs lo < hi per axis, got lo={lo.tolist()} hi={hi.tolist()}")
    return Box3(lo, hi)


def _box_inside(inner: Box3, workspace: Box3) -> bool:
    return bool(np.all(inner.lo >= workspace.lo) and np.all(inner.hi <= workspace.hi))


def _operator(value: Any, path: str, workspace: Box3) -> OperatorSpec:
    box = _box(_require(value, "box", path), f"{path}.box")
    if not _box_inside(box, workspace):
        raise RegionOutsideWorkspace(f"{path}.box", "handover box must sit inside the workspace")
    heading = _number(_require(value, "heading_rad", path), f"{path}.heading_rad")
    if not -math.pi < heading <= math.pi:
        raise MissionFormatError(f"{path}.heading_rad", "heading must lie in (-pi, pi]")
    raw_prefs = _require(value, "preferences", path)
    if not isinstance(raw_prefs, list) or not raw_prefs:
        raise MissionFormatError(f"{path}.preferences", "expected a nonempty list")
    prefs = []
    for k, name in enumerate(raw_prefs):
        ppath = f"{path}.preferences[{k}]"
        if name == "behind":
            raise MissionFormatError(ppath, "behind is never an admissible approach")
        try:
            prefs.append(Approach(name))
        except ValueError:
            allowed = ", ".join(a.value for a in Approach)
            raise MissionFormatError(ppath, f"unknown approach {name!r}; expected one of {allowed}") from None
    kwargs = {}
    if "approach_depth" in value:
        kwargs["approach_depth"] = _number(value["approach_depth"], f"{path}.approach_depth")
    if "behind_depth" in value:
        kwargs["behind_depth"] = _number(value["behind_depth"], f"{path}.behind_depth")
    try:
        return OperatorSpec(box=box, heading_rad=heading, preferences=tuple(prefs), **kwargs)
    except ValueError as exc:
        raise MissionFormatError(path, str(exc)) from None


def parse_mission(text: str) -> Mission:
    """Parse and fully validate a mission document.

    All geometric cross-checks live here: every named region must sit
    inside the workspace, and operator/refill boxes must not overlap any
    obstacle.  Errors carry the JSON path of the offending field.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MissionFormatError("$", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MissionFormatError("$", "top level must be an object")

    workspace = _box(_require(doc, "workspace", ""), "workspace")

    obstacles = []
    raw_obstacles = doc.get("obstacles", [])
    if not isinstance(raw_obstacles, list):
        raise MissionFormatError("obstacles", "expected a list")
    for k, raw in enumerate(raw_obstacles):
        box = _box(raw, f"obstacles[{k}]")
        if not _box_inside(box, workspace):
            raise RegionOutsideWorkspace(f"obstacles[{k}]", "obstacle must sit inside the workspace")
        obstacles.append(box)

    raw_operators = _require(doc, "operators", "")
    if not isinstance(raw_operators, list) or not raw_operators:
        raise MissionFormatError("operators", "expected a nonempty list")
    operators = [_operator(raw, f"operators[{k}]", workspace) for k, raw in enumerate(raw_operators)]

    raw_refills = _require(doc, "refills", "")
    if not isinstance(raw_refills, list) or not raw_refills:
        raise MissionFormatError("refills", "expected a nonempty list")
    refills = []
    for k, raw in enumerate(raw_refills):
        box = _box(raw, f"refills[{k}]")
        if not _box_inside(box, workspace):
            raise RegionOutsideWorkspace(f"refills[{k}]", "refill box must sit inside the workspace")
        refills.append(box)

    for kind, boxes in (("operators", [op.box for op in operators]), ("refills", refills)):
        for k, box in enumerate(boxes):
            for j, obstacle in enumerate(obstacles):
                if box.overlaps(obstacle):
                    path = f"{kind}[{k}].box" if kind == "operators" else f"{kind}[{k}]"
                    raise MissionFormatError(path, f"overlaps obstacles[{j}]")

    depot = _vector3(_require(doc, "depot", ""), "depot")
    if not workspace.contains_point(depot):
        raise RegionOutsideWorkspace("depot", "depot must sit inside the workspace")

    capacity = _integer(_require(doc, "capacity", ""), "capacity")
    if capacity < 1:
        raise MissionFormatError("capacity", "payload capacity must be at least 1")

    dt = _number(_require(doc, "dt", ""), "dt")
    t_total = _number(_require(doc, "t_total", ""), "t_total")
    t_handover = _number(_require(doc, "t_handover", ""), "t_handover")
    t_refill = _number(_require(doc, "t_refill", ""), "t_refill")
    if dt <= 0:
        raise TimeInconsistent("dt", "sampling period must be positive")
    cells = round(t_total / dt)
    if cells < 1 or abs(cells * dt - t_total) > _GRID_TOL:
        raise TimeInconsistent("t_total", f"horizon must be a positive multiple of dt={dt}")
    if not 0 < t_handover < t_total:
        raise TimeInconsistent("t_handover", "handover dwell must lie strictly inside the horizon")
    if not 0 < t_refill < t_total:
        raise TimeInconsistent("t_refill", "refill dwell must lie strictly inside the horizon")

    raw_limits = _require(doc, "limits", "")
    v_max = _vector3(_require(raw_limits, "v_max", "limits"), "limits.v_max")
    a_max = _vector3(_require(raw_limits, "a_max", "limits"), "limits.a_max")
    if np.any(v_max <= 0) or np.any(a_max <= 0):
        raise MissionFormatError("limits", "velocity and acceleration limits must be positive")
    limits = KinematicLimits(v_max=v_max, a_max=a_max)

    try:
        return Mission(
            workspace=workspace,
            obstacles=tuple(obstacles),
            operators=tuple(operators),
            refills=tuple(refills),
            depot=depot,
            capacity=capacity,
            t_total=t_total,
            t_handover=t_handover,
            t_refill=t_refill,
            dt=dt,
            limits=limits,
        )
    except ValueError as exc:  # residual structural checks
        raise MissionFormatError("$", str(exc)) from None


def _box_doc(box: Box3) -> dict[str, list[float]]:
    return {"lo": list(box.lo), "hi": list(box.hi)}


def serialize_mission(mission: Mission) -> str:
    """Render a mission as JSON that parses back to an identical mission."""
    doc = {
        "workspace": _box_doc(mission.workspace),
        "obstacles": [_box_doc(b) for b in mission.obstacles],
        "operators": [
            {
                "box": _box_doc(op.box),
                "heading_rad": op.heading_rad,
                "preferences": [p.value for p in op.preferences],
                "approach_depth": op.approach_depth,
                "behind_depth": op.behind_depth,
            }
            for op in mission.operators
        ],
        "refills": [_box_doc(b) for b in mission.refills],
        "depot": mission.depot.tolist(),
        "capacity": mission.capacity,
        "t_total": mission.t_total,
        "t_handover": mission.t_handover,
        "t_refill": mission.t_refill,
        "dt": mission.dt,
        "limits": {
            "v_max": mission.limits.v_max.tolist(),
            "a_max": mission.limits.a_max.tolist(),
        },
    }
    return json.dumps(doc, indent=2) + "\n"
