"""Mission description shared by routing, compilation, and the CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dynamics import KinematicLimits
from .stl import Box3

__all__ = ["Approach", "OperatorSpec", "Mission"]

# Tolerance for requiring the horizon to sit exactly on the sampling grid.
_GRID_TOL = 1e-9


class Approach(str, Enum):
    """Admissible handover approach directions relative to operator heading."""

    FRONT = "front"
    LEFT = "left"
    RIGHT = "right"
    ABOVE = "above"
    BELOW = "below"


@dataclass(frozen=True)
class OperatorSpec:
    """One human operator: handover box, gaze heading, approach preferences."""

    box: Box3
    heading_rad: float
    preferences: tuple[Approach, ...]
    approach_depth: float = 2.0
    behind_depth: float = 2.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.heading_rad):
            raise ValueError("heading must be finite")
        if not -math.pi < self.heading_rad <= math.pi:
            raise ValueError(f"heading must lie in (-pi, pi], got {self.heading_rad}")
        prefs = tuple(Approach(p) for p in self.preferences)
        if not prefs:
            raise ValueError("operator needs at least one preferred approach")
        if len(set(prefs)) != len(prefs):
            raise ValueError(f"duplicate approach preferences: {prefs}")
        object.__setattr__(self, "preferences", prefs)
        if not (self.approach_depth > 0 and self.behind_depth > 0):
            raise ValueError("region depths must be strictly positive")


@dataclass(frozen=True, eq=False)
class Mission:
    """Workspace geometry, timing, and payload capacity of one delivery flight.

    Structural invariants (grid-aligned horizon, dwell times inside the
    horizon, depot inside the workspace) are enforced here.  Cross-region
    geometric checks — every named box inside the workspace, operators and
    refills clear of obstacles — belong to mission-file parsing, so that
    deliberately contradictory missions can still be built in code.
    """

    workspace: Box3
    obstacles: tuple[Box3, ...]
    operators: tuple[OperatorSpec, ...]
    refills: tuple[Box3, ...]
    depot: np.ndarray
    capacity: int
    t_total: float
    t_handover: float
    t_refill: float
    dt: float
    limits: KinematicLimits

    def __post_init__(self) -> None:
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "operators", tuple(self.operators))
        object.__setattr__(self, "refills", tuple(self.refills))
        depot = np.asarray(self.depot, dtype=float).reshape(-1)
        if depot.shape != (3,) or not np.all(np.isfinite(depot)):
            raise ValueError("depot must be a finite 3-vector")
        depot = depot.copy()
        depot.setflags(write=False)
        object.__setattr__(self, "depot", depot)

        if not self.operators:
            raise ValueError("mission needs at least one operator")
        if not self.refills:
            raise ValueError("mission needs at least one refill station")
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        n = round(self.t_total / self.dt)
        if n < 1 or abs(n * self.dt - self.t_total) > _GRID_TOL:
            raise ValueError(
                f"horizon {self.t_total} does not sit on the dt={self.dt} grid"
            )
        if not 0 < self.t_handover < self.t_total:
            raise ValueError("handover dwell must lie strictly inside the horizon")
        if not 0 < self.t_refill < self.t_total:
            raise ValueError("refill dwell must lie strictly inside the horizon")
        if not self.workspace.contains_point(depot):
            raise ValueError(f"depot {tuple(depot)} lies outside the workspace")

    @property
    def n_cells(self) -> int:
        """Number of control cells; the trace has ``n_cells + 1`` samples."""
        return round(self.t_total / self.dt)
