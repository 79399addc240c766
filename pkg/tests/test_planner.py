import math

import numpy as np
import pytest

from ergoplan.dynamics import KinematicLimits, State, rollout
from ergoplan.planner import (
    DegenerateRegion,
    GridMismatch,
    OptimizerSettings,
    Status,
    _controls_adjoint,
    _snap_heading,
    clip_box_to_workspace,
    compile_mission,
    derive_regions,
    optimize,
    validate,
)
from ergoplan.mission import Approach, OperatorSpec
from ergoplan.routing import plan_route, route_to_trajectory
from ergoplan.smooth import SmoothConfig, eval_smooth
from ergoplan.stl import Box3, TimedTrace, eval_robustness

from conftest import box_around, make_mission


def simple_layout(**overrides):
    """One operator approached from its right side; legs skirt the behind-region.

    The operator faces +x, so its behind-region hangs off the west face and
    the right-approach region lies to the south; flying in from the south
    and out to the north keeps the seed clear of every avoid-region while
    passing straight through the preferred one.
    """
    kwargs = dict(
        op_centers=[(1.2, 0, 1)],
        refill_centers=[(1.2, 2, 1)],
        depot=(1.2, -2, 1),
        prefs=[("right",)],
        t_total=12.0,
        dt=0.1,
    )
    kwargs.update(overrides)
    return make_mission(**kwargs)


class TestHeadingSnap:
    def test_cardinal_directions(self):
        assert _snap_heading(0.0) == 0
        assert _snap_heading(math.pi / 2) == 1
        assert _snap_heading(math.pi) == 2
        assert _snap_heading(-math.pi / 2) == 3

    def test_nearest_axis_wins(self):
        assert _snap_heading(0.2) == 0
        assert _snap_heading(math.pi / 2 - 0.2) == 1
        assert _snap_heading(-math.pi + 0.3) == 2

    def test_exact_diagonals_round_half_even(self):
        # quarter-turn counts 0.5, 1.5 round to 0 and 2
        assert _snap_heading(math.pi / 4) == 0
        assert _snap_heading(3 * math.pi / 4) == 2


class TestDeriveRegions:
    op_box = Box3((2.0, 2.0, 1.0), (3.0, 3.0, 2.0))

    def operator(self, heading, prefs):
        return OperatorSpec(
            box=self.op_box,
            heading_rad=heading,
            preferences=prefs,
            approach_depth=1.5,
            behind_depth=0.5,
        )

    def test_front_faces_heading_and_behind_opposes(self):
        behind, approaches = derive_regions(self.operator(0.0, (Approach.FRONT,)))
        (pref, front), = approaches
        assert pref is Approach.FRONT
        # heading +x: front abuts the +x face, behind abuts the -x face
        assert front.lo == (3.0, 2.0, 1.0) and front.hi == (4.5, 3.0, 2.0)
        assert behind.lo == (1.5, 2.0, 1.0) and behind.hi == (2.0, 3.0, 2.0)

    def test_left_right_of_west_heading(self):
        _, approaches = derive_regions(
            self.operator(math.pi, (Approach.LEFT, Approach.RIGHT))
        )
        regions = dict(approaches)
        # facing -x: left is -y (south), right is +y (north)
        assert regions[Approach.LEFT].hi[1] == 2.0
        assert regions[Approach.LEFT].lo[1] == 0.5
        assert regions[Approach.RIGHT].lo[1] == 3.0
        assert regions[Approach.RIGHT].hi[1] == 4.5

    def test_above_below_are_vertical(self):
        _, approaches = derive_regions(
            self.operator(1.0, (Approach.ABOVE, Approach.BELOW))
        )
        regions = dict(approaches)
        assert regions[Approach.ABOVE].lo[2] == 2.0
        assert regions[Approach.ABOVE].hi[2] == 3.5
        assert regions[Approach.BELOW].hi[2] == 1.0
        assert regions[Approach.BELOW].lo[2] == -0.5

    def test_regions_share_full_faces(self):
        behind, approaches = derive_regions(self.operator(0.0, (Approach.FRONT,)))
        for _, region in approaches:
            # unshifted axes keep the operator box extents
            assert region.lo[1:] == self.op_box.lo[1:]
            assert region.hi[1:] == self.op_box.hi[1:]


class TestClip:
    ws = Box3((0.0, 0.0, 0.0), (10.0, 10.0, 3.0))

    def test_clips_protruding_region(self):
        raw = Box3((-1.0, 2.0, 1.0), (1.0, 3.0, 4.0))
        clipped = clip_box_to_workspace(raw, self.ws)
        assert clipped.lo == (0.0, 2.0, 1.0)
        assert clipped.hi == (1.0, 3.0, 3.0)

    def test_fully_outside_raises(self):
        raw = Box3((-2.0, 2.0, 1.0), (-1.0, 3.0, 2.0))
        with pytest.raises(DegenerateRegion):
            clip_box_to_workspace(raw, self.ws, "front-approach")


class TestCompile:
    def test_part_labels_cover_mission_structure(self):
        m = make_mission(
            [(3, 0, 1), (6, 0, 1)],
            [(4.5, 2, 1)],
            depot=(0, 0, 1),
            obstacles=(box_around((5, 5, 3), 0.5),),
            prefs=[("front",), ("left", "above")],
            headings=[0.0, math.pi],
        )
        from ergoplan.planner import _compiled_parts

        route = plan_route(m)
        labels = [label for label, _ in _compiled_parts(m, route)]
        assert labels == [
            "ws",
            "obs[0]",
            "beh[0]",
            "han[0]",
            "pr[0][front]",
            "beh[1]",
            "han[1]",
            "pr[1][left]",
            "pr[1][above]",
            "cap",
            "rs",
        ]

    def test_compile_returns_conjunction(self):
        m = simple_layout()
        phi = compile_mission(m)
        traj = route_to_trajectory(plan_route(m), m)
        assert eval_robustness(phi, traj.trace, 0) > 0.0


class TestControlsAdjoint:
    @staticmethod
    def finite_difference(objective, u, dt, h=1e-6):
        g = np.zeros_like(u)
        for idx in np.ndindex(u.shape):
            for sign in (+1, -1):
                bumped = u.copy()
                bumped[idx] += sign * h
                g[idx] += sign * objective(bumped)
        return g / (2 * h)

    def test_matches_finite_differences_through_rollout(self):
        rng = np.random.default_rng(11)
        dt = 0.2
        u = rng.normal(scale=0.5, size=(6, 3))
        weights = rng.normal(size=(7, 6))

        def objective(ctrl):
            traj = rollout(State((0, 0, 1), (0, 0, 0)), ctrl, 0.0, dt)
            return float(np.sum(weights * traj.trace.samples))

        got = _controls_adjoint(weights, dt)
        expected = self.finite_difference(objective, u, dt)
        assert got == pytest.approx(expected, rel=1e-6, abs=1e-9)

    def test_matches_loop_reference(self):
        rng = np.random.default_rng(5)
        dt = 0.3
        weights = rng.normal(size=(5, 6))
        got = _controls_adjoint(weights, dt)
        # literal reverse-mode sweep over the rollout recurrence
        n = weights.shape[0] - 1
        ap = np.zeros((n + 1, 3))
        av = np.zeros((n + 1, 3))
        ga = np.zeros((n, 3))
        for k in range(n, 0, -1):
            ap[k] += weights[k, :3]
            av[k] += weights[k, 3:]
            ga[k - 1] = ap[k] * 0.5 * dt * dt + av[k] * dt
            ap[k - 1] = ap[k]
            av[k - 1] = av[k] + ap[k] * dt
        assert got == pytest.approx(ga, abs=1e-12)


class TestOptimize:
    def small_mission(self):
        return simple_layout()

    def test_keeps_satisfied_seed(self):
        m = self.small_mission()
        seed = route_to_trajectory(plan_route(m), m)
        result = optimize(m, seed, settings=OptimizerSettings(max_iters=40))
        assert result.status is Status.SATISFIED
        seed_exact = validate(seed, m).exact_robustness
        assert result.exact_robustness >= seed_exact - 1e-12

    def test_improves_perturbed_seed(self):
        m = self.small_mission()
        seed = route_to_trajectory(plan_route(m), m)
        rng = np.random.default_rng(2)
        noisy = rollout(
            State(seed.trace.samples[0, :3], seed.trace.samples[0, 3:]),
            np.clip(
                seed.controls + rng.normal(scale=0.12, size=seed.controls.shape),
                -1.1,
                1.1,
            ),
            0.0,
            m.dt,
        )
        start = validate(noisy, m).exact_robustness
        result = optimize(m, noisy, settings=OptimizerSettings(max_iters=150))
        assert result.exact_robustness > start
        # optimizer never hands back a speed-limit violation
        assert np.max(np.abs(result.trajectory.trace.samples[:, 3:])) <= 1.1 + 1e-9

    def test_iterations_and_route_are_reported(self):
        m = self.small_mission()
        seed = route_to_trajectory(plan_route(m), m)
        result = optimize(m, seed, settings=OptimizerSettings(max_iters=5))
        assert result.iterations <= 5
        assert result.route.kinds[0] == "depot"
        assert dict(result.per_subformula)  # labels resolve uniquely

    def test_unreachable_mission_reports_unsatisfied(self):
        # operator fully wrapped by an obstacle: avoidance and handover
        # cannot both hold, the planner must say so rather than fail
        m = make_mission(
            [(2.0, 0, 1)],
            [(4.0, 0, 1)],
            depot=(0, 0, 1),
            obstacles=(box_around((2.0, 0, 1), 0.6),),
            t_total=16.0,
        )
        seed = route_to_trajectory(plan_route(m), m)
        result = optimize(m, seed, settings=OptimizerSettings(max_iters=10))
        assert result.status is Status.UNSATISFIED
        assert result.exact_robustness <= 0.0

    def test_grid_mismatch_rejected(self):
        m = self.small_mission()
        wrong = rollout(State((0, 0, 1), (0, 0, 0)), np.zeros((7, 3)), 0.0, m.dt)
        with pytest.raises(GridMismatch):
            optimize(m, wrong)
        with pytest.raises(GridMismatch):
            validate(wrong, m)


class TestValidate:
    def test_scores_without_iterating(self):
        m = simple_layout()
        traj = route_to_trajectory(plan_route(m), m)
        result = validate(traj, m)
        assert result.iterations == 0
        assert result.status is Status.SATISFIED
        assert result.trajectory is traj
        # the reported exact value matches a direct evaluation
        phi = compile_mission(m, result.route)
        assert result.exact_robustness == pytest.approx(
            eval_robustness(phi, traj.trace, 0), abs=0
        )
        # smooth surrogate agrees with a direct call under the same config
        assert result.smooth_robustness == pytest.approx(
            eval_smooth(phi, traj.trace, 0, SmoothConfig()), abs=0
        )

    def test_per_subformula_minimum_is_total(self):
        m = simple_layout()
        traj = route_to_trajectory(plan_route(m), m)
        result = validate(traj, m)
        worst = min(v for _, v in result.per_subformula)
        assert result.exact_robustness == pytest.approx(worst, abs=1e-12)
