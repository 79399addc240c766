#!/usr/bin/env python3
"""Regenerate the bundled demo missions in ``missions/``.

Three variants of one two-operator handover scenario in a 50 x 20 x 15 m
power-line workspace: two towers 40 m apart carry a cable bundle, and the
handover area sits mid-span.  The variants differ only in the operators'
preferred approach directions.  The operators stand face to face with a
service corridor between them; the depot and the refill station sit inside
the preferred approach regions, so the stitched seed trajectory already
passes through every region it must visit and the optimizer's job is to
widen margins, not to discover the topology.

Per variant:

* ``handover_front``       — both operators served from the front: each
  operator's hold point lies inside the other's front region, so the
  handover dwells themselves satisfy the approach preferences.
* ``handover_left_right``  — lateral approaches; the depot and the refill
  station sit south of the operators, inside the preferred side regions.
* ``handover_above_below`` — vertical approaches; the refill platform hangs
  directly above one operator and the depot pad sits directly below the
  other, so the climbs and descents cross the preferred regions.
"""

from __future__ import annotations

import math
from pathlib import Path

from ergoplan.dynamics import KinematicLimits
from ergoplan.mission import Mission, OperatorSpec
from ergoplan.mission_io import serialize_mission
from ergoplan.stl import Box3

WORKSPACE = Box3((0.0, 0.0, 0.0), (50.0, 20.0, 15.0))
TOWER_WEST = Box3((4.0, 9.0, 0.0), (6.0, 11.0, 15.0))
TOWER_EAST = Box3((44.0, 9.0, 0.0), (46.0, 11.0, 15.0))
CABLE = Box3((6.0, 9.7, 13.7), (44.0, 10.3, 14.3))

OP1_BOX = Box3((26.4, 9.5, 0.9), (27.4, 10.5, 1.9))  # faces west (-x)
OP2_BOX = Box3((24.6, 9.5, 0.9), (25.6, 10.5, 1.9))  # faces east (+x)
REFILL_SOUTH = Box3((26.4, 7.9, 0.9), (27.4, 8.7, 1.9))
REFILL_ABOVE = Box3((26.4, 9.5, 2.1), (27.4, 10.5, 2.9))

TIMING = dict(t_total=23.0, t_handover=3.0, t_refill=3.0, dt=0.05)
LIMITS = KinematicLimits((1.1, 1.1, 1.1), (1.1, 1.1, 1.1))


def mission(prefs1, prefs2, refill: Box3, depot) -> Mission:
    return Mission(
        workspace=WORKSPACE,
        obstacles=(TOWER_WEST, TOWER_EAST, CABLE),
        operators=(
            OperatorSpec(box=OP1_BOX, heading_rad=math.pi, preferences=prefs1),
            OperatorSpec(box=OP2_BOX, heading_rad=0.0, preferences=prefs2),
        ),
        refills=(refill,),
        depot=depot,
        capacity=1,
        limits=LIMITS,
        **TIMING,
    )


VARIANTS = {
    "handover_front": mission(
        ("front",), ("front",), REFILL_SOUTH, (26.0, 10.0, 1.4)
    ),
    "handover_left_right": mission(
        ("left",), ("right",), REFILL_SOUTH, (25.1, 8.7, 1.4)
    ),
    "handover_above_below": mission(
        ("above",), ("below",), REFILL_ABOVE, (25.1, 10.0, 0.3)
    ),
}


def main() -> None:
    out_dir = Path(__file__).resolve().parent.parent / "missions"
    out_dir.mkdir(exist_ok=True)
    for name, m in VARIANTS.items():
        path = out_dir / f"{name}.json"
        path.write_text(serialize_mission(m))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
