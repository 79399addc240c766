"""Per-axis double-integrator flight model and rest-to-rest motion primitives.

The vehicle is a point mass controlled by piecewise-constant acceleration on
a fixed sampling grid.  One step integrates the dynamics exactly under the
zero-order hold:

    p' = p + v * dt + a * dt^2 / 2
    v' = v + a * dt

Motion primitives move the vehicle between rest states along straight lines
using a shared trapezoidal (or triangular) speed profile, time-scaled so the
tightest axis limit binds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stl import TimedTrace

__all__ = [
    "KinematicLimits",
    "State",
    "Trajectory",
    "step",
    "rollout",
    "rest_to_rest_duration",
    "rest_to_rest_segment",
]

# Tolerance for the internal consistency check between a trajectory's stored
# trace and the rollout of its controls.  Closed-form segment constructions
# integrate the same recurrence analytically and match to rounding error.
_CONSISTENCY_TOL = 1e-6


def _vec3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {np.shape(value)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class KinematicLimits:
    """Per-axis speed and acceleration magnitude bounds."""

    v_max: np.ndarray
    a_max: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "v_max", _vec3(self.v_max, "v_max"))
        object.__setattr__(self, "a_max", _vec3(self.a_max, "a_max"))
        if not (np.all(self.v_max > 0) and np.all(self.a_max > 0)):
            raise ValueError("kinematic limits must be strictly positive")


@dataclass(frozen=True, eq=False)
class State:
    """Instantaneous position and velocity."""

    p: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", _vec3(self.p, "p"))
        object.__setattr__(self, "v", _vec3(self.v, "v"))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A sampled trace plus the control sequence that generated it.

    ``controls`` has one row per grid cell, shape ``(n_samples - 1, 3)``; a
    single-sample stationary trajectory carries an empty control array.
    """

    trace: TimedTrace
    controls: np.ndarray

    def __post_init__(self) -> None:
        ctrl = np.asarray(self.controls, dtype=float)
        if ctrl.size == 0:
            ctrl = ctrl.reshape(0, 3)
        if ctrl.ndim != 2 or ctrl.shape[1] != 3:
            raise ValueError(f"controls must have shape (n, 3), got {ctrl.shape}")
        if ctrl.shape[0] != self.trace.n_samples - 1:
            raise ValueError(
                f"{ctrl.shape[0]} controls inconsistent with "
                f"{self.trace.n_samples} samples"
            )
        if not np.all(np.isfinite(ctrl)):
            raise ValueError("controls must be finite")
        ctrl = np.ascontiguousarray(ctrl)
        ctrl.setflags(write=False)
        object.__setattr__(self, "controls", ctrl)
        if ctrl.shape[0]:
            replayed = _rollout_samples(self.trace.samples[0], ctrl, self.trace.dt)
            err = float(np.max(np.abs(replayed - self.trace.samples)))
            if err > _CONSISTENCY_TOL:
                raise ValueError(
                    f"trace deviates from the rollout of its controls by {err:.3e}"
                )

    @property
    def duration(self) -> float:
        return self.trace.dt * (self.trace.n_samples - 1)


def step(s: State, a, dt: float) -> State:
    """One exact zero-order-hold integration step."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    a = np.asarray(a, dtype=float)
    p = s.p + s.v * dt + 0.5 * a * dt * dt
    v = s.v + a * dt
    return State(p, v)


def _rollout_samples(x0: np.ndarray, controls: np.ndarray, dt: float) -> np.ndarray:
    n = controls.shape[0]
    out = np.empty((n + 1, 6))
    out[0] = x0
    p, v = x0[0:3].copy(), x0[3:6].copy()
    for k in range(n):
        a = controls[k]
        p = p + v * dt + 0.5 * a * dt * dt
        v = v + a * dt
        out[k + 1, 0:3] = p
        out[k + 1, 3:6] = v
    return out

def rollout(x0: State, controls, t0: float, dt: float) -> Trajectory:
    """Integrate a control sequence from ``x0``; the trace is exactly the rollout."""
    ctrl = np.asarray(controls, dtype=float)
    if ctrl.size == 0:
        ctrl = ctrl.reshape(0, 3)
    if ctrl.ndim != 2 or ctrl.shape[1] != 3:
        raise ValueError(f"controls must have shape (n, 3), got {ctrl.shape}")
    start = np.concatenate([x0.p, x0.v])
    samples = _rollout_samples(start, ctrl, dt)
    return Trajectory(TimedTrace(t0, dt, samples), ctrl)


def rest_to_rest_duration(dist: float, v_max: float, a_max: float) -> float:
    """Minimum time to cover ``dist`` from rest to rest on one axis.

    Trapezoidal profile when the cruise speed is reached
    (``dist >= v_max**2 / a_max``), triangular otherwise.
    """
    if dist < 0:
        raise ValueError(f"distance must be nonnegative, got {dist}")
    if v_max <= 0 or a_max <= 0:
        raise ValueError("limits must be strictly positive")
    if dist == 0.0:
        return 0.0
    if dist >= v_max * v_max / a_max:
        return dist / v_max + v_max / a_max
    return 2.0 * math.sqrt(dist / a_max)


def _discrete_profile(v_unit: float, a_unit: float, dt: float, t_min: float) -> tuple[int, int, float]:
    """Grid-aligned ramp/cruise/ramp speed profile covering unit arc length.

    Returns ``(n_cells, n_ramp, alpha)``: speed climbs by ``alpha`` per cell
    for ``n_ramp`` cells, cruises, and descends symmetrically.  Corners lie
    on sample points, so the trapezoidal integral of the sampled speeds —
    ``dt * alpha * n_ramp * (n_cells - n_ramp)`` — is made *exactly* one by
    choice of ``alpha``.  The cell count starts at the continuous minimum
    time rounded up and grows until the speed and acceleration caps admit
    such a profile.
    """
    n_cells = max(2, math.ceil(t_min / dt - 1e-9))
    while True:
        for n_ramp in range(1, n_cells // 2 + 1):
            alpha = 1.0 / (dt * n_ramp * (n_cells - n_ramp))
            if alpha > a_unit * dt * (1.0 + 1e-12):
                continue  # ramps too steep; try longer ones
            if n_ramp * alpha <= v_unit * (1.0 + 1e-12):
                return n_cells, n_ramp, alpha
            break  # peak speed only grows with longer ramps; need more cells
        n_cells += 1


def rest_to_rest_segment(p0, p1, limits: KinematicLimits, dt: float) -> Trajectory:
    """Straight-line rest-to-rest segment sampled on the ``dt`` grid.

    All axes follow one scalar speed profile scaled along ``p1 - p0``, so
    every sample lies on the segment; the profile obeys the tightest
    per-axis limit after normalization and its discrete integral covers the
    distance exactly, so the final sample sits at ``p1`` up to float
    rounding.  Identical endpoints yield a single-sample stationary segment.
    """
    p0 = _vec3(p0, "p0")
    p1 = _vec3(p1, "p1")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    delta = p1 - p0
    if np.all(delta == 0.0):
        sample = np.concatenate([p0, np.zeros(3)])
        return Trajectory(TimedTrace(0.0, dt, sample[None, :]), np.empty((0, 3)))

    moving = delta != 0.0
    v_unit = float(np.min(limits.v_max[moving] / np.abs(delta[moving])))
    a_unit = float(np.min(limits.a_max[moving] / np.abs(delta[moving])))
    t_min = rest_to_rest_duration(1.0, v_unit, a_unit)
    n_cells, n_ramp, alpha = _discrete_profile(v_unit, a_unit, dt, t_min)

    k = np.arange(n_cells + 1)
    s_dot = alpha * np.minimum(np.minimum(k, n_cells - k), n_ramp)

    # Positions by trapezoidal integration of the sampled speed: this is the
    # closed form of the rollout recurrence for cell-averaged accelerations,
    # so the trace and its derived controls agree.
    s = np.concatenate([[0.0], np.cumsum(0.5 * (s_dot[:-1] + s_dot[1:]) * dt)])
    samples = np.empty((n_cells + 1, 6))
    samples[:, 0:3] = p0[None, :] + s[:, None] * delta[None, :]
    samples[:, 3:6] = s_dot[:, None] * delta[None, :]
    controls = np.diff(samples[:, 3:6], axis=0) / dt
    return Trajectory(TimedTrace(0.0, dt, samples), controls)
