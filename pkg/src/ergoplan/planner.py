"""Ergonomic-region derivation, mission-formula compilation, and planning.

The mission is compiled into one signal-logic conjunction whose parts carry
stable labels (``ws``, ``obs[i]``, ``beh[i]``, ``han[i]``, ``pr[i][name]``,
``cap``, ``rs``).  Planning is single-shooting projected gradient ascent on
the per-cell accelerations, driven by the smoothed robustness of the
formula augmented with a velocity-envelope term, while the best iterate is
tracked by exact mission robustness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import State, Trajectory, _rollout_samples, rollout
from .mission import Approach, Mission, OperatorSpec
from .routing import REFILL, Route, plan_route
from .smooth import SmoothConfig, eval_smooth, eval_smooth_grad
from .stl import (
    Always,
    And,
    Box3,
    Eventually,
    Interval,
    Or,
    StlFormula,
    TimedTrace,
    Until,
    box_avoids,
    box_contains,
    eval_robustness,
)

__all__ = [
    "DegenerateRegion",
    "HorizonTooShort",
    "GridMismatch",
    "Status",
    "OptimizerSettings",
    "PlanResult",
    "derive_regions",
    "clip_box_to_workspace",
    "compile_mission",
    "optimize",
    "validate",
]

_STEP_FLOOR = 1e-6
_STEP_CEIL = 1.0


class DegenerateRegion(ValueError):
    """A derived region collapses to nothing once clipped to the workspace."""


class HorizonTooShort(ValueError):
    """A dwell window does not fit inside the mission horizon."""


class GridMismatch(ValueError):
    """A trajectory does not live on the mission sampling grid."""


class Status(str, Enum):
    SATISFIED = "satisfied"
    UNSATISFIED = "unsatisfied"


@dataclass(frozen=True)
class OptimizerSettings:
    """Knobs for projected gradient ascent on the smoothed objective."""

    step_size: float = 0.05
    max_iters: int = 2000
    tol: float = 1e-6
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.step_size <= 0 or self.max_iters < 0 or self.tol < 0:
            raise ValueError("invalid optimizer settings")


@dataclass(frozen=True, eq=False)
class PlanResult:
    status: Status
    trajectory: Trajectory
    exact_robustness: float
    smooth_robustness: float
    per_subformula: tuple[tuple[str, float], ...]
    iterations: int
    route: Route


# --- ergonomic regions ------------------------------------------------

# Horizontal axis directions in counterclockwise order: +x, +y, -x, -y.
_AXIS_DIRS = ((0, 1), (1, 1), (0, -1), (1, -1))


def _snap_heading(heading_rad: float) -> int:
    """Quadrant index of the axis direction nearest the heading.

    Exact diagonal headings are settled by round-half-to-even on the
    quarter-turn count, which is deterministic across platforms.
    """
    return round(heading_rad / (math.pi / 2.0)) % 4


def _abutting_box(box: Box3, axis: int, sign: int, depth: float) -> Box3:
    lo = list(box.lo)
    hi = list(box.hi)
    if sign > 0:
        lo[axis] = box.hi[axis]
        hi[axis] = box.hi[axis] + depth
    else:
        hi[axis] = box.lo[axis]
        lo[axis] = box.lo[axis] - depth
    return Box3(tuple(lo), tuple(hi))


def derive_regions(
    op: OperatorSpec,
) -> tuple[Box3, tuple[tuple[Approach, Box3], ...]]:
    """Unclipped behind-region and per-preference approach boxes.

    Every region is a box sharing a full face with the handover box: the
    front/left/right directions come from the heading snapped to the
    nearest horizontal axis, above/below extend along z, and the behind
    region opposes the snapped heading.  Callers clip to the workspace.
    """
    q = _snap_heading(op.heading_rad)
    offsets = {
        Approach.FRONT: _AXIS_DIRS[q],
        Approach.LEFT: _AXIS_DIRS[(q + 1) % 4],
        Approach.RIGHT: _AXIS_DIRS[(q + 3) % 4],
        Approach.ABOVE: (2, 1),
        Approach.BELOW: (2, -1),
    }
    behind_axis, behind_sign = _AXIS_DIRS[(q + 2) % 4]
    behind = _abutting_box(op.box, behind_axis, behind_sign, op.behind_depth)
    approaches = tuple(
        (pref, _abutting_box(op.box, *offsets[pref], op.approach_depth))
        for pref in op.preferences
    )
    return behind, approaches


def clip_box_to_workspace(box: Box3, workspace: Box3, what: str = "region") -> Box3:
    lo = np.maximum(box.lo, workspace.lo)
    hi = np.minimum(box.hi, workspace.hi)
    if np.any(lo >= hi):
        raise DegenerateRegion(f"{what} lies entirely outside the workspace")
    return Box3(lo, hi)


# --- formula compilation ----------------------------------------------


def _refill_membership(mission: Mission) -> StlFormula:
    terms = tuple(
        box_contains(box, label=f"refill{j}") for j, box in enumerate(mission.refills)
    )
    return terms[0] if len(terms) == 1 else Or(terms)


def _compiled_parts(
    mission: Mission, route: Route
) -> tuple[tuple[str, StlFormula], ...]:
    t_total = mission.t_total
    if mission.t_handover > t_total or mission.t_refill > t_total:
        raise HorizonTooShort(
            "dwell times exceed the mission horizon"
        )
    horizon = Interval(0.0, t_total)
    parts: list[tuple[str, StlFormula]] = []

    parts.append(
        ("ws", Always(horizon, box_contains(mission.workspace, label="workspace")))
    )
    for i, box in enumerate(mission.obstacles):
        parts.append(
            (f"obs[{i}]", Always(horizon, box_avoids(box, label=f"obstacle{i}")))
        )

    launch = Interval(0.0, t_total - mission.t_handover)
    dwell = Interval(0.0, mission.t_handover)
    for i, op in enumerate(mission.operators):
        behind_raw, approaches = derive_regions(op)
        behind = clip_box_to_workspace(
            behind_raw, mission.workspace, f"behind-region of operator {i}"
        )
        parts.append(
            (f"beh[{i}]", Always(horizon, box_avoids(behind, label=f"behind{i}")))
        )
        parts.append(
            (
                f"han[{i}]",
                Eventually(
                    launch, Always(dwell, box_contains(op.box, label=f"handover{i}"))
                ),
            )
        )
        for pref, raw in approaches:
            clipped = clip_box_to_workspace(
                raw, mission.workspace, f"{pref.value}-approach of operator {i}"
            )
            parts.append(
                (
                    f"pr[{i}][{pref.value}]",
                    Eventually(
                        horizon,
                        box_contains(clipped, label=f"approach{i}:{pref.value}"),
                    ),
                )
            )

    # Ordering obligations for every mid-route refill stop: reach the
    # previous handover, then dwell at some refill, then reach the next one.
    refill_any = _refill_membership(mission)
    refill_dwell = Always(Interval(0.0, mission.t_refill), refill_any)
    cap_terms: list[StlFormula] = []
    for idx in range(1, len(route.stops) - 1):
        if route.kinds[idx] != REFILL:
            continue
        before = mission.operators[route.stops[idx - 1] - 1]
        after = mission.operators[route.stops[idx + 1] - 1]
        then_after = And(
            (
                refill_dwell,
                Eventually(horizon, box_contains(after.box, label="cap-next")),
            )
        )
        cap_terms.append(
            Eventually(
                horizon,
                And(
                    (
                        box_contains(before.box, label="cap-prev"),
                        Eventually(horizon, then_after),
                    )
                ),
            )
        )
    if cap_terms:
        cap = cap_terms[0] if len(cap_terms) == 1 else And(tuple(cap_terms))
        parts.append(("cap", cap))

    terminal_idx = route.stops[-1] - 1 - len(mission.operators)
    terminal = box_contains(
        mission.refills[terminal_idx], label="terminal-refill"
    )
    inside_until_parked = Until(
        horizon, box_contains(mission.workspace, label="workspace"), terminal
    )
    parked_tail = Always(Interval(t_total - mission.t_refill, t_total), terminal)
    parts.append(("rs", And((inside_until_parked, parked_tail))))
    return tuple(parts)


def compile_mission(mission: Mission, route: Route | None = None) -> StlFormula:
    """Compile the full mission conjunction (routing the mission if needed)."""
    if route is None:
        route = plan_route(mission)
    return And(tuple(f for _, f in _compiled_parts(mission, route)))


# --- planning ----------------------------------------------------------


def _check_grid(trace: TimedTrace, mission: Mission) -> None:
    if (
        abs(trace.dt - mission.dt) > 1e-12
        or abs(trace.t0) > 1e-12
        or trace.samples.shape[0] != mission.n_cells + 1
    ):
        raise GridMismatch(
            f"trajectory grid (t0={trace.t0}, dt={trace.dt}, "
            f"n={trace.samples.shape[0]}) does not match the mission grid "
            f"(t0=0, dt={mission.dt}, n={mission.n_cells + 1})"
        )


def _controls_adjoint(sample_grad: np.ndarray, dt: float) -> np.ndarray:
    """Pull a gradient on trace samples back onto the per-cell accelerations.

    Reverse pass of the double-integrator rollout: position adjoints
    accumulate backwards, feed the velocity adjoints through the ``v*dt``
    coupling, and each cell's control collects ``dt^2/2`` of the position
    adjoint plus ``dt`` of the velocity adjoint at the next sample.
    """
    gp = sample_grad[:, 0:3]
    gv = sample_grad[:, 3:6]
    ap = np.cumsum(gp[::-1], axis=0)[::-1]  # ap[k] = sum_{j >= k} gp[j]
    ap_tail = np.cumsum(ap[::-1], axis=0)[::-1] - ap  # sum_{j > k} ap[j]
    av = np.cumsum(gv[::-1], axis=0)[::-1] + dt * ap_tail
    return ap[1:] * (0.5 * dt * dt) + av[1:] * dt


def _result(
    mission: Mission,
    parts: tuple[tuple[str, StlFormula], ...],
    phi: StlFormula,
    trajectory: Trajectory,
    smoothing: SmoothConfig,
    iterations: int,
    route: Route,
) -> PlanResult:
    trace = trajectory.trace
    per = tuple((label, float(eval_robustness(f, trace, 0))) for label, f in parts)
    exact = float(eval_robustness(phi, trace, 0))
    smooth_val = float(eval_smooth(phi, trace, 0, smoothing))
    status = Status.SATISFIED if exact > 0.0 else Status.UNSATISFIED
    return PlanResult(
        status=status,
        trajectory=trajectory,
        exact_robustness=exact,
        smooth_robustness=smooth_val,
        per_subformula=per,
        iterations=iterations,
        route=route,
    )


def optimize(
    mission: Mission,
    initial: Trajectory,
    smoothing: SmoothConfig | None = None,
    settings: OptimizerSettings | None = None,
) -> PlanResult:
    """Improve a seed trajectory by smoothed-robustness gradient ascent.

    Controls are the free variables; states follow from the rollout.  Each
    iteration ascends the infinity-normalized gradient with a halving line
    search, projects onto the acceleration box, and keeps the iterate whose
    exact mission robustness is best, so the result never falls below the
    seed.  The smoothed objective conjoins the mission formula with a
    velocity-envelope term so speed limits shape the search as well.
    """
    smoothing = smoothing if smoothing is not None else SmoothConfig()
    settings = settings if settings is not None else OptimizerSettings()
    _check_grid(initial.trace, mission)

    route = plan_route(mission)
    parts = _compiled_parts(mission, route)
    phi = And(tuple(f for _, f in parts))
    v_env = Box3(-mission.limits.v_max, mission.limits.v_max)
    envelope = Always(
        Interval(0.0, mission.t_total),
        box_contains(v_env, on="velocity", label="velocity-envelope"),
    )
    objective = And((phi, envelope))

    dt = mission.dt
    n = mission.n_cells
    x0 = initial.trace.samples[0].copy()
    a_max = mission.limits.a_max

    def trace_of(u: np.ndarray) -> TimedTrace:
        return TimedTrace(0.0, dt, _rollout_samples(x0, u, dt))

    def value_and_grad(u: np.ndarray) -> tuple[float, np.ndarray, TimedTrace]:
        tr = trace_of(u)
        res = eval_smooth_grad(objective, tr, 0, smoothing)
        grad = _controls_adjoint(res.grad.reshape(n + 1, 6), dt)
        return res.value, grad, tr

    u = np.clip(initial.controls, -a_max, a_max)
    tr = trace_of(u)
    best_u = u.copy()
    best_exact = float(eval_robustness(phi, tr, 0))
    val, grad, _ = value_and_grad(u)
    # The incumbent only moves to iterates whose speeds stay inside the
    # envelope, so the returned plan is always flyable even though the
    # bound is enforced softly during the search.
    step = settings.step_size
    iterations = 0
    for _ in range(settings.max_iters):
        gmax = float(np.max(np.abs(grad))) if grad.size else 0.0
        if not math.isfinite(gmax) or gmax == 0.0:
            break
        direction = grad / gmax
        s = step
        cand = None
        cand_val = -math.inf
        while s >= _STEP_FLOOR:
            trial = np.clip(u + s * direction, -a_max, a_max)
            if np.array_equal(trial, u):
                s *= 0.5
                continue
            trial_val = float(eval_smooth(objective, trace_of(trial), 0, smoothing))
            if trial_val > val:
                cand, cand_val = trial, trial_val
                break
            s *= 0.5
        if cand is None:
            break
        gain = cand_val - val
        u = cand
        iterations += 1
        val, grad, tr = value_and_grad(u)
        exact = float(eval_robustness(phi, tr, 0))
        if exact > best_exact and float(eval_robustness(envelope, tr, 0)) >= 0.0:
            best_exact = exact
            best_u = u.copy()
        step = min(2.0 * s, _STEP_CEIL)
        # The gain threshold only ends the search once the mission is
        # actually satisfied; while violated, slow progress across a
        # constraint trade-off plateau is still progress.
        if gain < settings.tol and best_exact > 0.0:
            break

    best = rollout(State(x0[:3], x0[3:6]), best_u, 0.0, dt)
    return _result(mission, parts, phi, best, smoothing, iterations, route)


def validate(
    trajectory: Trajectory,
    mission: Mission,
    smoothing: SmoothConfig | None = None,
) -> PlanResult:
    """Score an existing trajectory against the compiled mission formula."""
    smoothing = smoothing if smoothing is not None else SmoothConfig()
    _check_grid(trajectory.trace, mission)
    route = plan_route(mission)
    parts = _compiled_parts(mission, route)
    phi = And(tuple(f for _, f in parts))
    return _result(mission, parts, phi, trajectory, smoothing, 0, route)
