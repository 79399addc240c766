import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergoplan.smooth import (
    SmoothConfig,
    eval_smooth,
    eval_smooth_grad,
    smooth_max,
    smooth_min,
)
from ergoplan.stl import (
    AffinePredicate,
    Always,
    And,
    Eventually,
    Interval,
    Not,
    Pred,
    TimedTrace,
    Until,
    eval_robustness,
)

from oracles import naive_smooth_max, naive_smooth_min

AGM = SmoothConfig(mode="agm")
LSE2 = SmoothConfig(mode="lse", beta=2.0)

X = Pred(AffinePredicate((1.0, 0, 0, 0, 0, 0), 0.0, "x"))


def trace_of(values, dt=0.5):
    samples = np.zeros((len(values), 6))
    samples[:, 0] = values
    return TimedTrace(0.0, dt, samples)


class TestConfig:
    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError):
            SmoothConfig(mode="softplus")

    def test_rejects_bad_beta(self):
        with pytest.raises(ValueError):
            SmoothConfig(mode="lse", beta=0.0)

    def test_rejects_bad_epsilon(self):
        with pytest.raises(ValueError):
            SmoothConfig(epsilon=0.0)


class TestFrozenValues:
    def test_agm_product_branch(self):
        # geometric mean of (1+1, 1+3), minus one: sqrt(8) - 1
        assert smooth_min([1.0, 3.0], AGM) == pytest.approx(1.8284271247461903, abs=1e-15)

    def test_agm_violation_branch(self):
        assert smooth_min([-1.0, 2.0], AGM) == pytest.approx(-0.5, abs=0)

    def test_agm_max_is_negated_min(self):
        assert smooth_max([-1.0, -3.0], AGM) == pytest.approx(-1.8284271247461903, abs=1e-15)

    def test_lse_value(self):
        assert smooth_min([1.0, 3.0], LSE2) == pytest.approx(0.9909250360410952, abs=1e-15)

    def test_singleton_is_exact(self):
        assert smooth_min([0.7], AGM) == pytest.approx(0.7, abs=1e-15)
        assert smooth_min([0.7], LSE2) == pytest.approx(0.7, abs=1e-15)
        assert smooth_min([-0.7], AGM) == pytest.approx(-0.7, abs=0)


class TestSignAndBounds:
    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
    def test_agm_sign_matches_exact_min(self, vals):
        exact = min(vals)
        smooth = smooth_min(vals, AGM)
        if exact > 0:
            assert smooth > 0
        elif exact < 0:
            assert smooth < 0
        else:
            assert smooth <= 0

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.floats(-5, 5), min_size=1, max_size=8),
        st.floats(0.5, 50.0),
    )
    def test_lse_bracket(self, vals, beta):
        cfg = SmoothConfig(mode="lse", beta=beta)
        exact = min(vals)
        smooth = smooth_min(vals, cfg)
        slack = math.log(len(vals)) / beta
        assert exact - slack - 1e-9 <= smooth <= exact + 1e-9

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
    def test_duality_is_bitwise(self, vals):
        neg = [-v for v in vals]
        assert smooth_max(vals, AGM) == -smooth_min(neg, AGM)
        assert smooth_max(vals, LSE2) == -smooth_min(neg, LSE2)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=8), st.randoms())
    def test_permutation_invariance(self, vals, rng):
        shuffled = list(vals)
        rng.shuffle(shuffled)
        assert smooth_min(vals, AGM) == pytest.approx(smooth_min(shuffled, AGM), abs=1e-12)
        assert smooth_min(vals, LSE2) == pytest.approx(smooth_min(shuffled, LSE2), abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
    def test_matches_naive_formulas(self, vals):
        assert smooth_min(vals, AGM) == pytest.approx(naive_smooth_min(vals), abs=1e-12)
        assert smooth_min(vals, LSE2) == pytest.approx(naive_smooth_min(vals, 2.0), abs=1e-12)
        assert smooth_max(vals, AGM) == pytest.approx(naive_smooth_max(vals), abs=1e-12)


class TestFormulaEvaluation:
    def test_smooth_always_uses_smooth_min(self):
        tr = trace_of([1.0, 3.0], dt=1.0)
        phi = Always(Interval(0.0, 1.0), X)
        assert eval_smooth(phi, tr, 0, AGM) == pytest.approx(1.8284271247461903, abs=1e-12)

    def test_smooth_matches_exact_on_single_sample_window(self):
        tr = trace_of([2.0, -1.0], dt=1.0)
        phi = Eventually(Interval(1.0, 1.0), X)
        assert eval_smooth(phi, tr, 0, AGM) == eval_robustness(phi, tr, 0)

    def test_negation_is_sign_flip(self):
        tr = trace_of([1.0, 3.0], dt=1.0)
        phi = Always(Interval(0.0, 1.0), X)
        assert eval_smooth(Not(phi), tr, 0, AGM) == -eval_smooth(phi, tr, 0, AGM)

    def test_lse_tracks_exact_within_bound(self):
        tr = trace_of([3.0, 1.0, 4.0, 1.0, 5.0])
        phi = Until(
            Interval(0.0, 2.0),
            X,
            Pred(AffinePredicate((-1.0, 0, 0, 0, 0, 0), 2.0, "2-x")),
        )
        cfg = SmoothConfig(mode="lse", beta=200.0)
        exact = eval_robustness(phi, tr, 0)
        assert eval_smooth(phi, tr, 0, cfg) == pytest.approx(exact, abs=0.05)


# --- gradients -------------------------------------------------------------


def fd_gradient(phi, trace, cfg, h=1e-6):
    base = trace.samples.copy()
    g = np.zeros(base.size)
    for i in range(base.size):
        for sign in (+1, -1):
            bumped = base.copy().reshape(-1)
            bumped[i] += sign * h
            tr = TimedTrace(trace.t0, trace.dt, bumped.reshape(base.shape))
            g[i] += sign * eval_smooth(phi, tr, 0, cfg)
    return g / (2 * h)


def test_lse_gradient_is_softmax_on_flat_window():
    tr = trace_of([1.0, 3.0, 2.0], dt=1.0)
    phi = Always(Interval(0.0, 2.0), X)
    res = eval_smooth_grad(phi, tr, 0, SmoothConfig(mode="lse", beta=1.0))
    assert res.value == pytest.approx(0.5923940355556196, abs=1e-12)
    got = res.grad.reshape(3, 6)[:, 0]
    expect = [0.6652409557748218, 0.09003057317038046, 0.24472847105479764]
    assert got == pytest.approx(expect, abs=1e-12)


def test_agm_gradient_is_product_weighting():
    tr = trace_of([1.0, 3.0], dt=1.0)
    phi = Always(Interval(0.0, 1.0), X)
    res = eval_smooth_grad(phi, tr, 0, AGM)
    got = res.grad.reshape(2, 6)[:, 0]
    assert got == pytest.approx([0.7071067811865476, 0.3535533905932738], abs=1e-12)


def test_agm_violation_gradient_marks_violating_samples():
    tr = trace_of([-1.0, 2.0], dt=1.0)
    phi = Always(Interval(0.0, 1.0), X)
    res = eval_smooth_grad(phi, tr, 0, AGM)
    got = res.grad.reshape(2, 6)[:, 0]
    assert got == pytest.approx([0.5, 0.0], abs=0)


@pytest.mark.parametrize("mode,beta", [("agm", 10.0), ("lse", 3.0)])
def test_gradient_matches_finite_differences(mode, beta):
    cfg = SmoothConfig(mode=mode, beta=beta)
    rng = np.random.default_rng(7)
    vals = rng.uniform(0.5, 3.0, size=6)  # stay clear of the AGM branch point
    tr = trace_of(vals)
    phi = And(
        (
            Always(Interval(0.0, 1.0), X),
            Eventually(Interval(0.5, 2.0), X),
            Until(Interval(0.0, 1.5), X, X),
        )
    )
    res = eval_smooth_grad(phi, tr, 0, cfg)
    fd = fd_gradient(phi, tr, cfg)
    assert res.grad == pytest.approx(fd, rel=1e-5, abs=1e-7)
    assert res.value == pytest.approx(eval_smooth(phi, tr, 0, cfg), abs=0)


def test_gradient_of_deep_negation():
    cfg = SmoothConfig(mode="lse", beta=5.0)
    tr = trace_of([0.3, -0.8, 1.2, 0.1])
    phi = Not(Eventually(Interval(0.0, 1.5), Not(X)))
    res = eval_smooth_grad(phi, tr, 0, cfg)
    fd = fd_gradient(phi, tr, cfg)
    assert res.grad == pytest.approx(fd, rel=1e-5, abs=1e-7)
