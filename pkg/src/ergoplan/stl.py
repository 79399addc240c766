"""Signal temporal logic over uniformly sampled kinematic traces.

Formulas are immutable trees of predicate and operator nodes.  Atomic
predicates are affine functions of the 6-dimensional state sample
``(p1, p2, p3, v1, v2, v3)``; their value doubles as a signed satisfaction
margin.  Quantitative robustness follows the usual max/min recursion:

* predicate          -> its affine margin,
* negation           -> sign flip,
* conjunction        -> min over children,
* disjunction        -> max over children,
* always on [a, b]   -> min over the shifted sample window,
* eventually on [a,b]-> max over the shifted sample window,
* until on [a, b]    -> max over release instants t' of
                        min(right at t', min of left over [t, t']).

Time is interpreted on the sample grid only: a window is the set of sample
indices whose timestamps fall inside the shifted interval, clipped to the
trace.  There is no interpolation, and a window that contains no sample at
all raises :class:`EmptyWindow` instead of silently collapsing.

A trace satisfies a formula iff its robustness is strictly positive;
zero counts as a violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "StlError",
    "EmptyWindow",
    "Interval",
    "TimedTrace",
    "AffinePredicate",
    "Pred",
    "Not",
    "And",
    "Or",
    "Always",
    "Eventually",
    "Until",
    "StlFormula",
    "Box3",
    "window_indices",
    "eval_robustness",
    "eval_bool",
    "box_contains",
    "box_avoids",
]

STATE_DIM = 6

# Slack, in fractional-index units, absorbed when mapping interval bounds to
# sample indices so that bounds meant to land exactly on a sample are not
# lost to floating-point division.
_GRID_SLACK = 1e-9


class StlError(Exception):
    """Base class for formula evaluation errors."""


class EmptyWindow(StlError):
    """A temporal operator's shifted interval contains no trace sample."""


@dataclass(frozen=True)
class Interval:
    """Closed relative time interval ``[lo, hi]`` with ``0 <= lo <= hi``."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval bounds must be finite, got [{self.lo}, {self.hi}]")
        if not 0.0 <= self.lo <= self.hi:
            raise ValueError(f"interval must satisfy 0 <= lo <= hi, got [{self.lo}, {self.hi}]")

    def index_offsets(self, dt: float) -> tuple[int, int]:
        """Interval bounds as sample-index offsets on a grid of spacing ``dt``."""
        off_lo = math.ceil(self.lo / dt - _GRID_SLACK)
        off_hi = math.floor(self.hi / dt + _GRID_SLACK)
        return max(off_lo, 0), off_hi


@dataclass(frozen=True, eq=False)
class TimedTrace:
    """Uniformly sampled state signal: rows are ``(p1, p2, p3, v1, v2, v3)``."""

    t0: float
    dt: float
    samples: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != STATE_DIM:
            raise ValueError(f"samples must have shape (n, {STATE_DIM}), got {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("trace needs at least one sample")
        if not np.all(np.isfinite(arr)):
            raise ValueError("trace samples must be finite")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)

    @property
    def positions(self) -> np.ndarray:
        return self.samples[:, 0:3]

    @property
    def velocities(self) -> np.ndarray:
        return self.samples[:, 3:6]


@dataclass(frozen=True)
class AffinePredicate:
    """Affine margin ``coeffs . x + offset`` over one state sample ``x``."""

    coeffs: tuple[float, float, float, float, float, float]
    offset: float
    label: str = ""

    def __post_init__(self) -> None:
        if len(self.coeffs) != STATE_DIM:
            raise ValueError(f"need {STATE_DIM} coefficients, got {len(self.coeffs)}")
        vals = [float(c) for c in self.coeffs] + [float(self.offset)]
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("predicate coefficients must be finite")
        if all(c == 0.0 for c in self.coeffs):
            raise ValueError("predicate needs at least one nonzero coefficient")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "offset", float(self.offset))

    def margins(self, samples: np.ndarray) -> np.ndarray:
        """Evaluate the affine margin for every row of ``samples``."""
        return samples @ np.asarray(self.coeffs) + self.offset


@dataclass(frozen=True)
class Pred:
    predicate: AffinePredicate


@dataclass(frozen=True)
class Not:
    child: "StlFormula"


@dataclass(frozen=True)
class And:
    children: tuple["StlFormula", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("conjunction needs at least one child")


@dataclass(frozen=True)
class Or:
    children: tuple["StlFormula", ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("disjunction needs at least one child")


@dataclass(frozen=True)
class Always:
    interval: Interval
    child: "StlFormula"


@dataclass(frozen=True)
class Eventually:
    interval: Interval
    child: "StlFormula"


@dataclass(frozen=True)
class Until:
    interval: Interval
    left: "StlFormula"
    right: "StlFormula"


StlFormula = Union[Pred, Not, And, Or, Always, Eventually, Until]


@dataclass(frozen=True)
class Box3:
    """Axis-aligned box with strictly positive extent on every axis."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self) -> None:
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3:
            raise ValueError("box corners must be 3-vectors")
        if not all(math.isfinite(v) for v in lo + hi):
            raise ValueError("box corners must be finite")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"box needs lo < hi on every axis, got lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def center(self) -> tuple[float, float, float]:
        return tuple((a + b) / 2.0 for a, b in zip(self.lo, self.hi))

    def contains_point(self, p, tol: float = 0.0) -> bool:
        return all(a - tol <= x <= b + tol for x, a, b in zip(p, self.lo, self.hi))

    def overlaps(self, other: "Box3") -> bool:
        """Open-interval overlap test; shared faces do not count."""
        return all(a < d and c < b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))


def window_indices(trace: TimedTrace, t_index: int, interval: Interval) -> range:
    """Sample indices whose timestamps lie in the interval shifted to ``t_index``.

    The window is clipped to the trace; an empty result raises
    :class:`EmptyWindow`.
    """
    n = trace.n_samples
    if not 0 <= t_index < n:
        raise IndexError(f"t_index {t_index} outside trace of {n} samples")
    off_lo, off_hi = interval.index_offsets(trace.dt)
    k_lo = t_index + off_lo
    k_hi = min(t_index + off_hi, n - 1)
    if k_lo > k_hi:
        raise EmptyWindow(
            f"interval [{interval.lo}, {interval.hi}] shifted to sample {t_index} "
            f"contains no sample of a {n}-sample trace with dt={trace.dt}"
        )
    return range(k_lo, k_hi + 1)


# ---------------------------------------------------------------------------
# Exact robustness
#
# Internally each node is evaluated as a *robustness trace*: the vector of
# robustness values over all anchor indices the parent may consume.  Windowed
# operators shrink the range of anchors at which a node stays well-defined
# (its "valid length"); consuming an anchor past a child's valid length means
# some window in the recursion came up empty.


def _exact_trace(phi: StlFormula, trace: TimedTrace, required: int) -> np.ndarray:
    n = trace.n_samples
    required = min(required, n)

    if isinstance(phi, Pred):
        return phi.predicate.margins(trace.samples)

    if isinstance(phi, Not):
        return -_exact_trace(phi.child, trace, required)

    if isinstance(phi, (And, Or)):
        traces = [_exact_trace(c, trace, required) for c in phi.children]
        length = min(tr.shape[0] for tr in traces)
        stack = np.stack([tr[:length] for tr in traces])
        return np.min(stack, axis=0) if isinstance(phi, And) else np.max(stack, axis=0)

    if isinstance(phi, (Always, Eventually)):
        off_lo, off_hi = phi.interval.index_offsets(trace.dt)
        if off_lo > off_hi:  # interval falls strictly between grid points
            return np.empty(0)
        child_req = min(required - 1 + off_hi, n - 1) + 1
        child = _exact_trace(phi.child, trace, child_req)
        length = _windowed_valid_length(child.shape[0], n, off_lo, off_hi)
        length = min(length, required)
        reduce_ = np.min if isinstance(phi, Always) else np.max
        out = np.empty(length)
        for k in range(length):
            out[k] = reduce_(child[k + off_lo : min(k + off_hi, n - 1) + 1])
        return out

    if isinstance(phi, Until):
        off_lo, off_hi = phi.interval.index_offsets(trace.dt)
        if off_lo > off_hi:
            return np.empty(0)
        child_req = min(required - 1 + off_hi, n - 1) + 1
        left = _exact_trace(phi.left, trace, child_req)
        right = _exact_trace(phi.right, trace, child_req)
        avail = min(left.shape[0], right.shape[0])
        length = _windowed_valid_length(avail, n, off_lo, off_hi)
        length = min(length, required)
        out = np.empty(length)
        for k in range(length):
            hi = min(k + off_hi, n - 1)
            prefix = np.minimum.accumulate(left[k : hi + 1])
            window = slice(k + off_lo, hi + 1)
            out[k] = np.max(np.minimum(right[window], prefix[off_lo : hi - k + 1]))
        return out

    raise TypeError(f"not an STL formula node: {phi!r}")


def _windowed_valid_length(child_len: int, n: int, off_lo: int, off_hi: int) -> int:
    """Anchors at which a window ``[k+off_lo, min(k+off_hi, n-1)]`` is fully served."""
    if child_len >= n:
        return max(0, n - off_lo)
    # The child itself lost anchors to an inner empty window: the clipped
    # window end must stay inside what the child can serve.
    return max(0, child_len - off_hi)


def eval_robustness(phi: StlFormula, trace: TimedTrace, t_index: int = 0) -> float:
    """Quantitative robustness of ``phi`` at sample ``t_index``."""
    n = trace.n_samples
    if not 0 <= t_index < n:
        raise IndexError(f"t_index {t_index} outside trace of {n} samples")
    vals = _exact_trace(phi, trace, t_index + 1)
    if vals.shape[0] <= t_index:
        raise EmptyWindow(
            f"formula has no well-defined robustness at sample {t_index}: "
            "a temporal window in the recursion contains no sample"
        )
    return float(vals[t_index])


def eval_bool(phi: StlFormula, trace: TimedTrace, t_index: int = 0) -> bool:
    """Satisfaction: strictly positive robustness.  Zero is a violation."""
    return eval_robustness(phi, trace, t_index) > 0.0


# ---------------------------------------------------------------------------
# Box membership formulas

_SIGNAL_OFFSETS = {"position": 0, "velocity": 3}


def box_contains(box: Box3, on: str = "position", label: str = "") -> And:
    """Conjunction of the six face margins of ``box`` over the chosen signal.

    Robustness equals the signed distance to the nearest face along an axis:
    positive inside, negative outside.
    """
    base = _SIGNAL_OFFSETS[on]
    tag = label or f"{on}-box"
    preds: list[Pred] = []
    for j in range(3):
        upper = [0.0] * STATE_DIM
        upper[base + j] = -1.0
        preds.append(Pred(AffinePredicate(tuple(upper), box.hi[j], f"{tag}:hi{j + 1}")))
        lower = [0.0] * STATE_DIM
        lower[base + j] = 1.0
        preds.append(Pred(AffinePredicate(tuple(lower), -box.lo[j], f"{tag}:lo{j + 1}")))
    return And(tuple(preds))


def box_avoids(box: Box3, on: str = "position", label: str = "") -> Not:
    """Negated containment; robustness is the exact negation of containment."""
    return Not(box_contains(box, on=on, label=label))
