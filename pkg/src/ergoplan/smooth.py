"""Differentiable robustness surrogates and their exact gradients.

Two smoothing families replace the min/max of the exact robustness
recursion:

* ``agm`` — arithmetic/geometric-mean smoothing.  The smooth minimum of
  ``r_1..r_m`` is ``(prod(1 + r_i))**(1/m) - 1`` when every ``r_i`` is
  strictly positive and ``mean(min(r_i, 0))`` otherwise.  The surrogate is
  sign-consistent with the exact minimum: it is positive exactly when the
  true minimum is.  Its gradient does not exist where a term sits exactly
  on the branch boundary; within ``epsilon`` of it we commit to the
  violation branch's piecewise gradient (``d min(r, 0)/dr`` taken as 0 at
  ``r = 0``), which makes the returned subgradient deterministic.

* ``lse`` — log-sum-exp softmin, ``-(1/beta) * log(sum(exp(-beta * r_i)))``
  evaluated in max-shifted form.  It underestimates the exact minimum by at
  most ``log(m)/beta``.

In both families ``smooth_max(r) = -smooth_min(-r)``.

Formulas are evaluated as whole robustness traces so that the gradient of
a deeply nested mission formula with respect to every trace entry comes out
of one reverse sweep.  Windows reuse the sample-index arithmetic of
:mod:`ergoplan.stl`; smoothing never changes window membership.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .stl import (
    STATE_DIM,
    Always,
    And,
    EmptyWindow,
    Eventually,
    Not,
    Or,
    Pred,
    StlFormula,
    TimedTrace,
    Until,
    _windowed_valid_length,
)

__all__ = [
    "SmoothConfig",
    "SmoothValueGrad",
    "smooth_min",
    "smooth_max",
    "eval_smooth",
    "eval_smooth_grad",
]


@dataclass(frozen=True)
class SmoothConfig:
    """Smoothing mode and its parameters."""

    mode: str = "agm"
    beta: float = 10.0
    epsilon: float = 1e-9

    def __post_init__(self) -> None:
        if self.mode not in ("agm", "lse"):
            raise ValueError(f"mode must be 'agm' or 'lse', got {self.mode!r}")
        if not (math.isfinite(self.beta) and self.beta > 0.0):
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0.0 < self.epsilon <= 1e-6:
            raise ValueError(f"epsilon must lie in (0, 1e-6], got {self.epsilon}")


@dataclass(frozen=True)
class SmoothValueGrad:
    """Smooth robustness and its gradient over all trace entries (row-major)."""

    value: float
    grad: np.ndarray


# ---------------------------------------------------------------------------
# Masked reductions along the last axis.
#
# `V` carries candidate values, `mask` selects window members; masked-out
# entries never influence the result.  Weights (when requested) are the
# partial derivatives of the reduced value with respect to each entry.


def _masked_smooth_min(
    V: np.ndarray, mask: np.ndarray, cfg: SmoothConfig, want_weights: bool
) -> tuple[np.ndarray, np.ndarray | None]:
    m = mask.sum(axis=-1)
    if np.any(m == 0):
        raise EmptyWindow("smooth reduction over an empty window")
    Vm = np.where(mask, V, np.inf)
    rmin = Vm.min(axis=-1)

    if cfg.mode == "lse":
        shifted = np.where(mask, V - rmin[..., None], 0.0)
        E = np.where(mask, np.exp(-cfg.beta * shifted), 0.0)
        Z = E.sum(axis=-1)
        vals = rmin - np.log(Z) / cfg.beta
        weights = E / Z[..., None] if want_weights else None
        return vals, weights

    # AGM
    pos_logs = np.log1p(np.where(mask, np.maximum(V, 0.0), 0.0))
    neg_sum = np.where(mask, np.minimum(V, 0.0), 0.0).sum(axis=-1)
    vals_prod = np.expm1(pos_logs.sum(axis=-1) / m)
    vals_viol = neg_sum / m
    satisfied = rmin > 0.0
    vals = np.where(satisfied, vals_prod, vals_viol)
    if not want_weights:
        return vals, None
    denom = np.where(mask & satisfied[..., None], 1.0 + V, 1.0)
    w_prod = (vals_prod + 1.0)[..., None] / denom / m[..., None]
    w_viol = (mask & (V < 0.0)) / m[..., None]
    # Within epsilon of the branch boundary the product-branch gradient blows
    # up / ceases to exist; commit to the violation branch's subgradient.
    use_prod = rmin > cfg.epsilon
    weights = np.where(use_prod[..., None], w_prod, w_viol) * mask
    return vals, weights


def _masked_smooth_max(
    V: np.ndarray, mask: np.ndarray, cfg: SmoothConfig, want_weights: bool
) -> tuple[np.ndarray, np.ndarray | None]:
    vals, weights = _masked_smooth_min(-V, mask, cfg, want_weights)
    return -vals, weights


def smooth_min(values: Sequence[float] | np.ndarray, cfg: SmoothConfig) -> float:
    """Smooth minimum of a nonempty list of reals."""
    arr = np.atleast_2d(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ValueError("smooth_min of an empty list")
    vals, _ = _masked_smooth_min(arr, np.ones_like(arr, dtype=bool), cfg, False)
    return float(vals[0])


def smooth_max(values: Sequence[float] | np.ndarray, cfg: SmoothConfig) -> float:
    """Smooth maximum, defined by duality as ``-smooth_min(-values)``."""
    arr = np.atleast_2d(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ValueError("smooth_max of an empty list")
    vals, _ = _masked_smooth_max(arr, np.ones_like(arr, dtype=bool), cfg, False)
    return float(vals[0])


# ---------------------------------------------------------------------------
# Trace-level evaluation with reverse accumulation.

_Vjp = Callable[[np.ndarray], None]


class _Tape:
    """Accumulates gradients with respect to every trace entry."""

    def __init__(self, n_samples: int) -> None:
        self.grad = np.zeros((n_samples, STATE_DIM))


def _smooth_trace(
    phi: StlFormula,
    trace: TimedTrace,
    required: int,
    cfg: SmoothConfig,
    tape: _Tape | None,
) -> tuple[np.ndarray, _Vjp | None]:
    n = trace.n_samples
    required = min(required, n)
    want = tape is not None

    if isinstance(phi, Pred):
        vals = phi.predicate.margins(trace.samples)
        if not want:
            return vals, None
        coeffs = np.asarray(phi.predicate.coeffs)

        def vjp_pred(g: np.ndarray) -> None:
            tape.grad[: g.shape[0]] += g[:, None] * coeffs[None, :]

        return vals, vjp_pred

    if isinstance(phi, Not):
        cvals, cvjp = _smooth_trace(phi.child, trace, required, cfg, tape)
        if not want:
            return -cvals, None
        return -cvals, lambda g: cvjp(-g)

    if isinstance(phi, (And, Or)):
        parts = [_smooth_trace(c, trace, required, cfg, tape) for c in phi.children]
        length = min(p[0].shape[0] for p in parts)
        V = np.stack([p[0][:length] for p in parts], axis=-1)
        mask = np.ones_like(V, dtype=bool)
        reduce_ = _masked_smooth_min if isinstance(phi, And) else _masked_smooth_max
        vals, W = reduce_(V, mask, cfg, want)
        if not want:
            return vals, None

        def vjp_junction(g: np.ndarray) -> None:
            L = g.shape[0]
            for i, (_, cvjp) in enumerate(parts):
                cvjp(g * W[:L, i])

        return vals, vjp_junction

    if isinstance(phi, (Always, Eventually)):
        off_lo, off_hi = phi.interval.index_offsets(trace.dt)
        if off_lo > off_hi:  # interval falls strictly between grid points
            return np.empty(0), (lambda g: None) if want else None
        child_req = min(required - 1 + off_hi, n - 1) + 1
        cvals, cvjp = _smooth_trace(phi.child, trace, child_req, cfg, tape)
        c_len = cvals.shape[0]
        length = min(required, _windowed_valid_length(c_len, n, off_lo, off_hi))
        if length <= 0:
            return np.empty(0), (lambda g: None) if want else None
        anchors = np.arange(length)
        width = min(off_hi, n - 1) - off_lo + 1
        idx = anchors[:, None] + off_lo + np.arange(width)[None, :]
        mask = idx <= np.minimum(anchors + off_hi, n - 1)[:, None]
        idx_c = np.minimum(idx, c_len - 1)
        V = cvals[idx_c]
        reduce_ = _masked_smooth_min if isinstance(phi, Always) else _masked_smooth_max
        vals, W = reduce_(V, mask, cfg, want)
        if not want:
            return vals, None

        def vjp_window(g: np.ndarray) -> None:
            L = g.shape[0]
            contrib = g[:, None] * W[:L]
            flat_idx = idx_c[:L][mask[:L]]
            flat_w = contrib[mask[:L]]
            cvjp(np.bincount(flat_idx, weights=flat_w, minlength=c_len))

        return vals, vjp_window

    if isinstance(phi, Until):
        return _smooth_until(phi, trace, required, cfg, tape)

    raise TypeError(f"not an STL formula node: {phi!r}")


def _smooth_until(
    phi: Until,
    trace: TimedTrace,
    required: int,
    cfg: SmoothConfig,
    tape: _Tape | None,
) -> tuple[np.ndarray, _Vjp | None]:
    n = trace.n_samples
    want = tape is not None
    off_lo, off_hi = phi.interval.index_offsets(trace.dt)
    if off_lo > off_hi:
        return np.empty(0), (lambda g: None) if want else None
    child_req = min(required - 1 + off_hi, n - 1) + 1
    lvals, lvjp = _smooth_trace(phi.left, trace, child_req, cfg, tape)
    rvals, rvjp = _smooth_trace(phi.right, trace, child_req, cfg, tape)
    avail = min(lvals.shape[0], rvals.shape[0])
    length = min(required, _windowed_valid_length(avail, n, off_lo, off_hi))
    if length <= 0:
        return np.empty(0), (lambda g: None) if want else None

    vals = np.empty(length)
    saved = []
    for k in range(length):
        u = min(k + off_hi, n - 1)
        lslice = lvals[k : u + 1]
        L = lslice.shape[0]
        # Smooth running minimum of the left operand over [k, t'] for every
        # release candidate t', via a lower-triangular candidate matrix.
        tri = np.tril(np.ones((L, L), dtype=bool))
        P, WP = _masked_smooth_min(np.broadcast_to(lslice, (L, L)), tri, cfg, want)
        rwin = rvals[k + off_lo : u + 1]
        pwin = P[off_lo:]
        pairs = np.stack([rwin, pwin], axis=-1)
        Q, WQ = _masked_smooth_min(pairs, np.ones_like(pairs, dtype=bool), cfg, want)
        vk, Wmax = _masked_smooth_max(Q[None, :], np.ones((1, Q.shape[0]), dtype=bool), cfg, want)
        vals[k] = vk[0]
        if want:
            saved.append((k, u, Wmax[0], WQ, WP))

    if not want:
        return vals, None

    def vjp_until(g: np.ndarray) -> None:
        dleft = np.zeros_like(lvals)
        dright = np.zeros_like(rvals)
        for k, u, wmax, wq, wp in saved:
            if k >= g.shape[0] or g[k] == 0.0:
                continue
            dQ = g[k] * wmax
            dright[k + off_lo : u + 1] += dQ * wq[:, 0]
            dP = np.zeros(u - k + 1)
            dP[off_lo:] = dQ * wq[:, 1]
            dleft[k : u + 1] += wp.T @ dP
        lvjp(dleft)
        rvjp(dright)

    return vals, vjp_until


def eval_smooth(
    phi: StlFormula, trace: TimedTrace, t_index: int = 0, cfg: SmoothConfig = SmoothConfig()
) -> float:
    """Smooth robustness of ``phi`` at sample ``t_index``."""
    n = trace.n_samples
    if not 0 <= t_index < n:
        raise IndexError(f"t_index {t_index} outside trace of {n} samples")
    vals, _ = _smooth_trace(phi, trace, t_index + 1, cfg, None)
    if vals.shape[0] <= t_index:
        raise EmptyWindow(
            f"formula has no well-defined smooth robustness at sample {t_index}"
        )
    return float(vals[t_index])


def eval_smooth_grad(
    phi: StlFormula, trace: TimedTrace, t_index: int = 0, cfg: SmoothConfig = SmoothConfig()
) -> SmoothValueGrad:
    """Smooth robustness plus its gradient over every trace entry.

    The gradient is the exact derivative of the smooth recursion, obtained by
    reverse accumulation through the evaluation graph; it has one entry per
    trace cell, flattened row-major to length ``n_samples * 6``.
    """
    n = trace.n_samples
    if not 0 <= t_index < n:
        raise IndexError(f"t_index {t_index} outside trace of {n} samples")
    tape = _Tape(n)
    vals, vjp = _smooth_trace(phi, trace, t_index + 1, cfg, tape)
    if vals.shape[0] <= t_index:
        raise EmptyWindow(
            f"formula has no well-defined smooth robustness at sample {t_index}"
        )
    seed = np.zeros(vals.shape[0])
    seed[t_index] = 1.0
    vjp(seed)
    return SmoothValueGrad(value=float(vals[t_index]), grad=tape.grad.ravel().copy())
