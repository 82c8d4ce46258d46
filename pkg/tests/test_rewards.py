import numpy as np
import pytest

from legmap import rewards as rw


def flat_lookup(height=0.0):
    return lambda x, y: height


def snapshot_perfect_tracking():
    s = rw.RobotSnapshot()
    s.command_vel = np.array([0.5, 0.0, 0.0])
    s.lin_vel = np.array([0.5, 0.0, 0.0])
    s.command_yaw_rate = 0.3
    s.ang_vel = np.array([0.0, 0.0, 0.3])
    return s


def no_drop_cls():
    return [rw.FootPointClassification(0, 0, 0)] * 4


class TestClassify:
    def test_flat_terrain(self):
        cls = rw.classify_foot_points(np.zeros(3), flat_lookup(0.0))
        assert (cls.n1, cls.n2, cls.n3) == (0, 0, 0)

    def test_oblique_edge_two_and_two(self):
        # straight edge, normal tilted 22.5 deg, far half dropped 0.5 m;
        # exactly 2 axis and 2 diagonal stencil points sit over the drop
        n = np.array([np.cos(np.deg2rad(22.5)), np.sin(np.deg2rad(22.5))])

        def lookup(x, y):
            return -0.5 if x * n[0] + y * n[1] > 0.01 else 0.0

        cls = rw.classify_foot_points(np.zeros(3), lookup)
        assert (cls.n1, cls.n2, cls.n3) == (0, 2, 2)

    def test_narrow_support_all_above_drop(self):
        # foot centered on a 4 cm wide support, deep gap all around
        def lookup(x, y):
            return 0.0 if max(abs(x), abs(y)) <= 0.02 else -1.0

        cls = rw.classify_foot_points(np.zeros(3), lookup)
        assert (cls.n1, cls.n2, cls.n3) == (0, 4, 4)

    def test_reference_is_foot_height(self):
        # foot hovering 0.3 above a deep gap: even the center is a drop
        cls = rw.classify_foot_points(np.array([0, 0, 0.3]), flat_lookup(-1.0))
        assert cls.n1 == 1


class TestFeetCenter:
    def test_all_clear(self):
        assert rw.reward_feet_center([True] * 4, no_drop_cls()) == 0.0

    def test_one_contact_foot(self):
        cls = [rw.FootPointClassification(0, 2, 2)] + no_drop_cls()[1:]
        assert rw.reward_feet_center([True, False, False, False], cls) == 6.0

    def test_contact_gating(self):
        cls = [rw.FootPointClassification(0, 4, 0)] + no_drop_cls()[1:]
        assert rw.reward_feet_center([False, True, True, True], cls) == 0.0


class TestFeetAirTime:
    def test_neutral_at_half_second(self):
        assert rw.reward_feet_air_time([0.5] * 4, [True] * 4) == pytest.approx(0.0)

    def test_long_step_credit(self):
        v = rw.reward_feet_air_time([0.7, 0, 0, 0], [True, False, False, False])
        assert v == pytest.approx(0.2)

    def test_no_touchdown(self):
        assert rw.reward_feet_air_time([0.9] * 4, [False] * 4) == 0.0


class TestFeetStumble:
    def test_vertical_load_ok(self):
        f = np.tile([0.0, 0.0, 50.0], (4, 1))
        assert rw.reward_feet_stumble(f) == 0.0

    def test_lateral_hit_detected(self):
        f = np.zeros((4, 3))
        f[1] = [10.0, 0.0, 2.0]
        assert rw.reward_feet_stumble(f) == 1.0

    def test_boundary_is_strict(self):
        f = np.zeros((4, 3))
        f[0] = [8.0, 0.0, 2.0]
        assert rw.reward_feet_stumble(f) == 0.0


class TestRewardTotal:
    def test_perfect_tracking_totals_1_5(self):
        total, breakdown = rw.reward_total(snapshot_perfect_tracking(), no_drop_cls())
        assert total == pytest.approx(1.5, abs=1e-12)
        assert breakdown["tracking_lin_vel"] == pytest.approx(1.0)
        assert breakdown["tracking_ang_vel"] == pytest.approx(0.5)

    def test_lin_tracking_decay(self):
        s = snapshot_perfect_tracking()
        s.lin_vel = s.command_vel + np.array([0.5, 0.0, 0.0])
        _, breakdown = rw.reward_total(s, no_drop_cls())
        assert breakdown["tracking_lin_vel"] == pytest.approx(np.exp(-1.0), rel=1e-9)

    def test_stumble_costs_one(self):
        s = snapshot_perfect_tracking()
        base, _ = rw.reward_total(s, no_drop_cls())
        s.foot_force[0] = [10.0, 0.0, 2.0]
        hit, _ = rw.reward_total(s, no_drop_cls())
        assert base - hit == pytest.approx(1.0, abs=1e-12)

    def test_breakdown_sums_to_total(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            s = rw.RobotSnapshot()
            s.command_vel = rng.normal(size=3)
            s.lin_vel = rng.normal(size=3)
            s.ang_vel = rng.normal(size=3)
            s.joint_torque = rng.normal(size=12)
            s.joint_acc = rng.normal(size=12) * 100
            s.action = rng.normal(size=12)
            s.joint_pos = rng.normal(size=12)
            s.foot_force = rng.normal(size=(4, 3)) * 20
            s.foot_air_time = rng.uniform(0, 1, size=4)
            s.foot_touchdown = rng.random(4) < 0.5
            s.foot_contact = rng.random(4) < 0.5
            s.n_collisions = int(rng.integers(0, 3))
            cls = [
                rw.FootPointClassification(0, int(rng.integers(0, 5)), int(rng.integers(0, 5)))
                for _ in range(4)
            ]
            total, breakdown = rw.reward_total(s, cls)
            assert abs(total - sum(breakdown.values())) < 1e-12
            assert len(breakdown) == 13

    def test_tracking_terms_bounded(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            s = rw.RobotSnapshot()
            s.command_vel = rng.normal(size=3) * 2
            s.lin_vel = rng.normal(size=3) * 2
            s.command_yaw_rate = rng.normal() * 2
            s.ang_vel = rng.normal(size=3)
            raw = rw.reward_terms(s, no_drop_cls())
            assert 0.0 < raw["tracking_lin_vel"] <= 1.0
            assert 0.0 < raw["tracking_ang_vel"] <= 1.0

    def test_foot_permutation_invariance(self):
        rng = np.random.default_rng(4)
        s = rw.RobotSnapshot()
        s.foot_force = rng.normal(size=(4, 3)) * 10
        s.foot_air_time = rng.uniform(0, 1, 4)
        s.foot_touchdown = np.array([True, False, True, False])
        s.foot_contact = np.array([True, True, False, False])
        cls = [rw.FootPointClassification(0, i, 4 - i) for i in range(4)]
        total, _ = rw.reward_total(s, cls)
        perm = [2, 0, 3, 1]
        s2 = rw.RobotSnapshot()
        s2.foot_force = s.foot_force[perm]
        s2.foot_air_time = s.foot_air_time[perm]
        s2.foot_touchdown = s.foot_touchdown[perm]
        s2.foot_contact = s.foot_contact[perm]
        cls2 = [cls[i] for i in perm]
        total2, _ = rw.reward_total(s2, cls2)
        assert total == pytest.approx(total2, abs=1e-12)

    def test_deterministic(self):
        s = snapshot_perfect_tracking()
        a = rw.reward_total(s, no_drop_cls())
        b = rw.reward_total(s, no_drop_cls())
        assert a[0] == b[0] and a[1] == b[1]


class TestObservation:
    def test_zeroed_snapshot(self):
        s = rw.RobotSnapshot()
        o = rw.observation_vector(s)
        assert o.shape == (45,)
        assert np.allclose(o[rw.OBS_GRAV], [0, 0, -1])
        mask = np.ones(45, dtype=bool)
        mask[rw.OBS_GRAV] = False
        assert np.all(o[mask] == 0.0)

    def test_episode_start_padding(self):
        asm = rw.ObservationAssembler()
        s = snapshot_perfect_tracking()
        o_t, stacked, _ = asm.step(s, rw.PrivilegedState())
        assert stacked.shape == (270,)
        for k in range(6):
            assert np.array_equal(stacked[45 * k : 45 * (k + 1)], o_t)

    def test_history_newest_first(self):
        asm = rw.ObservationAssembler()
        frames = []
        for i in range(8):
            s = rw.RobotSnapshot()
            s.command_vel = np.array([float(i), 0.0, 0.0])
            o_t, stacked, _ = asm.step(s, rw.PrivilegedState())
            frames.append(o_t)
        for k in range(6):
            assert np.array_equal(stacked[45 * k : 45 * (k + 1)], frames[7 - k])

    def test_field_slices_recoverable(self):
        rng = np.random.default_rng(3)
        s = rw.RobotSnapshot()
        s.ang_vel = rng.normal(size=3)
        s.gravity_proj = rng.normal(size=3)
        s.command_vel = rng.normal(size=3)
        s.joint_pos = rng.normal(size=12)
        s.joint_vel = rng.normal(size=12)
        s.prev_action = rng.normal(size=12)
        o = rw.observation_vector(s)
        assert np.array_equal(o[rw.OBS_ANG], s.ang_vel)
        assert np.array_equal(o[rw.OBS_GRAV], s.gravity_proj)
        assert np.array_equal(o[rw.OBS_CMD], s.command_vel)
        assert np.array_equal(o[rw.OBS_JOINT_POS], s.joint_pos)
        assert np.array_equal(o[rw.OBS_JOINT_VEL], s.joint_vel)
        assert np.array_equal(o[rw.OBS_PREV_ACTION], s.prev_action)

    def test_privileged_vector_width(self):
        assert rw.PrivilegedState().to_vector().shape == (42,)


class TestTermination:
    def test_nominal_walking(self):
        s = snapshot_perfect_tracking()
        s.foot_pos = np.zeros((4, 3))
        done, reason = rw.termination_check(s, 0.0)
        assert not done and reason is None

    def test_foot_below_threshold(self):
        s = rw.RobotSnapshot()
        s.foot_pos[2, 2] = -0.25
        done, reason = rw.termination_check(s, 0.0)
        assert done and reason == "foot_below_threshold"

    def test_trapped_timeout(self):
        done, reason = rw.termination_check(rw.RobotSnapshot(), 20.0)
        assert done and reason == "trapped_timeout"

    def test_collision(self):
        s = rw.RobotSnapshot()
        s.n_collisions = 1
        done, reason = rw.termination_check(s, 0.0)
        assert done and reason == "collision"

    def test_trapped_tracker_accumulates(self):
        tr = rw.TrappedTracker()
        d = 0.0
        for i in range(1001):
            d = tr.update(i * 0.02, 0.0, True)
        assert d == pytest.approx(20.0)
        d = tr.update(1001 * 0.02, 1.0, True)
        # one fast sample barely moves a 20 s mean
        assert d > 0.0
        tr2 = rw.TrappedTracker()
        for i in range(100):
            d = tr2.update(i * 0.02, 1.0, True)
        assert d == 0.0
