"""Shared mission-building helpers for the test suite."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from ergoplan.dynamics import KinematicLimits
from ergoplan.mission import Mission, OperatorSpec
from ergoplan.stl import Box3


def box_around(center, half=0.25):
    cx, cy, cz = center
    return Box3(
        (cx - half, cy - half, cz - half),
        (cx + half, cy + half, cz + half),
    )


def make_mission(
    op_centers,
    refill_centers,
    depot=(0.0, 0.0, 1.0),
    capacity=1,
    headings=None,
    prefs=None,
    obstacles=(),
    workspace=Box3((-12.0, -12.0, 0.0), (12.0, 12.0, 6.0)),
    t_total=40.0,
    t_handover=0.4,
    t_refill=0.2,
    dt=0.1,
    half=0.25,
    v_max=1.1,
    a_max=1.1,
    approach_depth=1.0,
    behind_depth=1.0,
):
    """Small mission with operator/refill boxes around the given centers."""
    headings = headings or [0.0] * len(op_centers)
    prefs = prefs or [("front",)] * len(op_centers)
    operators = tuple(
        OperatorSpec(
            box=box_around(c, half),
            heading_rad=h,
            preferences=tuple(p),
            approach_depth=approach_depth,
            behind_depth=behind_depth,
        )
        for c, h, p in zip(op_centers, headings, prefs)
    )
    refills = tuple(box_around(c, half) for c in refill_centers)
    return Mission(
        workspace=workspace,
        obstacles=tuple(obstacles),
        operators=operators,
        refills=refills,
        depot=depot,
        capacity=capacity,
        t_total=t_total,
        t_handover=t_handover,
        t_refill=t_refill,
        dt=dt,
        limits=KinematicLimits((v_max,) * 3, (a_max,) * 3),
    )
