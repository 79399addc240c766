"""Plan artifacts: trajectory CSV, run report, SVG sketch, and figures.

Text artifacts are written atomically (temp file, then rename) and are
byte-deterministic for a given plan: floats are rendered with ``repr`` so
values round-trip exactly, and nothing time- or host-dependent is embedded.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .mission import Mission
from .planner import OptimizerSettings, PlanResult
from .smooth import SmoothConfig
from .stl import Box3, TimedTrace

__all__ = [
    "CSV_HEADER",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "build_report",
    "write_report",
    "render_svg",
    "render_figures",
]

CSV_HEADER = ("t", "p1", "p2", "p3", "v1", "v2", "v3", "a1", "a2", "a3", "heading")

_HEADING_SPEED_FLOOR = 1e-6


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def trace_headings(samples: np.ndarray) -> np.ndarray:
    """Yaw column: atan2 of the horizontal velocity, held while hovering.

    Below a horizontal speed of 1e-6 m/s the previous heading is kept
    (initially 0), so the column stays steady through dwells.
    """
    headings = np.zeros(samples.shape[0])
    current = 0.0
    for k in range(samples.shape[0]):
        vx, vy = samples[k, 3], samples[k, 4]
        if math.hypot(vx, vy) >= _HEADING_SPEED_FLOOR:
            current = math.atan2(vy, vx)
        headings[k] = current
    return headings


def write_trajectory_csv(path: str | Path, trajectory: Trajectory) -> None:
    """Write the sampled plan; the terminal row repeats the last control."""
    path = Path(path)
    trace = trajectory.trace
    samples = trace.samples
    if len(trajectory.controls):
        accels = np.vstack([trajectory.controls, trajectory.controls[-1:]])
    else:
        accels = np.zeros((samples.shape[0], 3))
    headings = trace_headings(samples)
    lines = [",".join(CSV_HEADER)]
    for k in range(samples.shape[0]):
        t = trace.t0 + k * trace.dt
        row = [t, *samples[k], *accels[k], headings[k]]
        lines.append(",".join(repr(float(v)) for v in row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_trajectory_csv(path: str | Path) -> Trajectory:
    """Read a trajectory CSV back into a rollout-consistent trajectory."""
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"bad trajectory header: expected {','.join(CSV_HEADER)}")
    body = rows[1:]
    if len(body) < 2:
        raise ValueError("trajectory needs at least two samples")
    try:
        data = np.array([[float(x) for x in row] for row in body])
    except ValueError as exc:
        raise ValueError(f"non-numeric trajectory entry: {exc}") from None
    if data.shape[1] != len(CSV_HEADER):
        raise ValueError(f"expected {len(CSV_HEADER)} columns, got {data.shape[1]}")
    t = data[:, 0]
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if dt <= 0 or np.max(np.abs(np.diff(t) - dt)) > 1e-9:
        raise ValueError("time column must be uniformly spaced")
    samples = data[:, 1:7]
    controls = data[:-1, 7:10]
    return Trajectory(TimedTrace(float(t[0]), float(dt), samples), controls)


def build_report(
    result: PlanResult,
    smoothing: SmoothConfig,
    settings: OptimizerSettings,
) -> dict:
    """Assemble the run report document (deterministic; no wall-clock data)."""
    route = result.route
    return {
        "status": result.status.value,
        "exact_robustness": result.exact_robustness,
        "smooth_robustness": result.smooth_robustness,
        "iterations": result.iterations,
        "route": {
            "stops": list(route.stops),
            "kinds": list(route.kinds),
            "length": route.length,
        },
        "per_subformula": [[label, value] for label, value in result.per_subformula],
        "smoothing": {"mode": smoothing.mode, "beta": smoothing.beta},
        "optimizer": {
            "step_size": settings.step_size,
            "max_iters": settings.max_iters,
            "tol": settings.tol,
            "seed": settings.seed,
        },
    }


def write_report(path: str | Path, report: dict) -> None:
    _atomic_write_text(Path(path), json.dumps(report, indent=2) + "\n")


# --- SVG sketch ---------------------------------------------------------

_SVG_SCALE = 20.0  # px per meter
_SVG_PAD = 12.0


def _svg_rect(box: Box3, workspace: Box3, style: str) -> str:
    x = (box.lo[0] - workspace.lo[0]) * _SVG_SCALE + _SVG_PAD
    y = (workspace.hi[1] - box.hi[1]) * _SVG_SCALE + _SVG_PAD
    w = (box.hi[0] - box.lo[0]) * _SVG_SCALE
    h = (box.hi[1] - box.lo[1]) * _SVG_SCALE
    return (
        f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" {style}/>'
    )


def render_svg(path: str | Path, mission: Mission, trajectory: Trajectory) -> None:
    """Top-down (x-y) sketch of the workspace, regions, and flown path.

    Hand-assembled markup with fixed styling and two-decimal coordinates,
    so identical plans produce identical bytes.
    """
    ws = mission.workspace
    width = (ws.hi[0] - ws.lo[0]) * _SVG_SCALE + 2 * _SVG_PAD
    height = (ws.hi[1] - ws.lo[1]) * _SVG_SCALE + 2 * _SVG_PAD
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="#ffffff"/>',
        _svg_rect(ws, ws, 'fill="#f7f7f5" stroke="#444444" stroke-width="1.5"'),
    ]
    for box in mission.obstacles:
        parts.append(_svg_rect(box, ws, 'fill="#9a9a9a" stroke="#555555" stroke-width="1"'))
    for box in mission.refills:
        parts.append(_svg_rect(box, ws, 'fill="#8fd18f" stroke="#2f7d2f" stroke-width="1"'))
    for op in mission.operators:
        parts.append(_svg_rect(op.box, ws, 'fill="#f5b06a" stroke="#b06a1f" stroke-width="1"'))

    points = []
    for p in trajectory.trace.samples[:, :2]:
        x = (p[0] - ws.lo[0]) * _SVG_SCALE + _SVG_PAD
        y = (ws.hi[1] - p[1]) * _SVG_SCALE + _SVG_PAD
        points.append(f"{x:.2f},{y:.2f}")
    parts.append(
        f'<polyline points="{" ".join(points)}" fill="none" '
        'stroke="#1f5fbf" stroke-width="1.5"/>'
    )
    dx = (mission.depot[0] - ws.lo[0]) * _SVG_SCALE + _SVG_PAD
    dy = (ws.hi[1] - mission.depot[1]) * _SVG_SCALE + _SVG_PAD
    parts.append(f'<circle cx="{dx:.2f}" cy="{dy:.2f}" r="4" fill="#c43131"/>')
    parts.append("</svg>")
    _atomic_write_text(Path(path), "\n".join(parts) + "\n")


# --- matplotlib figures --------------------------------------------------


def render_figures(out_dir: str | Path, mission: Mission, trajectory: Trajectory) -> list[Path]:
    """Render profile and top-down PNGs next to the delimited output."""
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt
    from matplotlib.patches import Rectangle

    out_dir = Path(out_dir)
    trace = trajectory.trace
    n = trace.samples.shape[0]
    t = trace.t0 + np.arange(n) * trace.dt
    written: list[Path] = []

    fig, axes = plt.subplots(3, 1, figsize=(9, 7.5), sharex=True)
    for j, name in enumerate(("x", "y", "z")):
        axes[0].plot(t, trace.samples[:, j], label=name)
        axes[1].plot(t, trace.samples[:, 3 + j], label=name)
    if len(trajectory.controls):
        for j, name in enumerate(("x", "y", "z")):
            axes[2].step(t[:-1], trajectory.controls[:, j], where="post", label=name)
    v_cap = float(np.max(mission.limits.v_max))
    a_cap = float(np.max(mission.limits.a_max))
    for cap, ax in ((v_cap, axes[1]), (a_cap, axes[2])):
        ax.axhline(cap, color="0.4", linestyle="--", linewidth=0.8)
        ax.axhline(-cap, color="0.4", linestyle="--", linewidth=0.8)
    axes[0].set_ylabel("position [m]")
    axes[1].set_ylabel("velocity [m/s]")
    axes[2].set_ylabel("acceleration [m/s$^2$]")
    axes[2].set_xlabel("time [s]")
    for ax in axes:
        ax.grid(True, alpha=0.3)
        ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    profiles = out_dir / "profiles.png"
    tmp = profiles.with_name(profiles.name + ".tmp")
    fig.savefig(tmp, dpi=120, format="png")
    os.replace(tmp, profiles)
    plt.close(fig)
    written.append(profiles)

    fig, ax = plt.subplots(figsize=(9, 5))
    ws = mission.workspace

    def add_box(box: Box3, **kwargs) -> None:
        ax.add_patch(
            Rectangle(
                (box.lo[0], box.lo[1]),
                box.hi[0] - box.lo[0],
                box.hi[1] - box.lo[1],
                **kwargs,
            )
        )

    add_box(ws, facecolor="#f7f7f5", edgecolor="#444444")
    for box in mission.obstacles:
        add_box(box, facecolor="#9a9a9a", edgecolor="#555555")
    for box in mission.refills:
        add_box(box, facecolor="#8fd18f", edgecolor="#2f7d2f")
    for op in mission.operators:
        add_box(op.box, facecolor="#f5b06a", edgecolor="#b06a1f")
    ax.plot(trace.samples[:, 0], trace.samples[:, 1], color="#1f5fbf", linewidth=1.5)
    ax.plot(mission.depot[0], mission.depot[1], "o", color="#c43131")
    ax.set_xlim(ws.lo[0] - 1, ws.hi[0] + 1)
    ax.set_ylim(ws.lo[1] - 1, ws.hi[1] + 1)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    fig.tight_layout()
    topdown = out_dir / "topdown.png"
    tmp = topdown.with_name(topdown.name + ".tmp")
    fig.savefig(tmp, dpi=120, format="png")
    os.replace(tmp, topdown)
    plt.close(fig)
    written.append(topdown)
    return written
