import numpy as np
import pytest

from legmap import evalkit as ev
from legmap import manifold as mf
from legmap.elevmap import HeightGrid


def make_traj(n=50, dt=0.1, vel=(0.5, 0.0, 0.0), yaw_rate=0.0, seed=None):
    t = np.arange(n) * dt
    pos = np.outer(t, np.asarray(vel, dtype=float))
    rot = np.array([mf.so3_exp(np.array([0.0, 0.0, yaw_rate * tk])) for tk in t])
    if seed is not None:
        rng = np.random.default_rng(seed)
        pos = pos + rng.normal(0, 0.01, pos.shape)
    return ev.Trajectory(t, pos, rot)


def transformed(traj, R, tvec):
    pos = traj.pos @ R.T + tvec
    rot = np.einsum("ij,njk->nik", R, traj.rot)
    return ev.Trajectory(traj.t.copy(), pos, rot)


class TestApe:
    def test_identical_is_zero(self):
        a = make_traj()
        assert ev.ape(a, a) == 0.0

    def test_constant_offset_no_align(self):
        gt = make_traj()
        est = ev.Trajectory(gt.t, gt.pos + [0.3, 0.0, 0.0], gt.rot)
        assert ev.ape(est, gt, align=False) == pytest.approx(0.3, abs=1e-12)

    def test_alignment_removes_rigid_offset(self):
        gt = make_traj(yaw_rate=0.3)
        R = mf.so3_exp(np.array([0.1, -0.2, 0.5]))
        est = transformed(gt, R, np.array([1.0, -2.0, 0.5]))
        assert ev.ape(est, gt, align=True) < 1e-9
        assert ev.ape(est, gt, align=False) > 0.5

    def test_invariant_under_common_rigid_transform(self):
        gt = make_traj(yaw_rate=0.2)
        est = make_traj(yaw_rate=0.2, seed=3)
        base = ev.ape(est, gt)
        R = mf.so3_exp(np.array([0.3, 0.1, -0.4]))
        tv = np.array([5.0, -1.0, 2.0])
        moved = ev.ape(transformed(est, R, tv), transformed(gt, R, tv))
        assert moved == pytest.approx(base, abs=1e-12)


class TestRpe:
    def test_identical_is_zero(self):
        a = make_traj()
        assert ev.rpe(a, a, 1.0) == 0.0

    def test_constant_offset_invariant(self):
        gt = make_traj(yaw_rate=0.1)
        est = transformed(gt, mf.so3_exp(np.array([0.0, 0.0, 0.7])), np.array([2.0, 1.0, -0.3]))
        assert ev.rpe(est, gt, 1.0) < 1e-9

    def test_scale_drift_matches_bruteforce(self):
        # est drifts 1% per meter along x
        n, dt = 60, 0.1
        t = np.arange(n) * dt
        gt_pos = np.column_stack([0.5 * t, np.zeros(n), np.zeros(n)])
        est_pos = gt_pos * 1.01
        eye = np.tile(np.eye(3), (n, 1, 1))
        gt = ev.Trajectory(t, gt_pos, eye)
        est = ev.Trajectory(t, est_pos, eye)
        delta = 1.0
        got = ev.rpe(est, gt, delta)
        # brute force over the same pairs
        errs = []
        for tk in t[t + delta <= t[-1] + 1e-9]:
            pg0 = np.array([0.5 * tk, 0, 0])
            pg1 = np.array([0.5 * (tk + delta), 0, 0])
            pe0, pe1 = pg0 * 1.01, pg1 * 1.01
            errs.append(np.linalg.norm((pg1 - pg0) - (pe1 - pe0)))
        assert got == pytest.approx(np.sqrt(np.mean(np.square(errs))), abs=1e-12)

    def test_bad_delta(self):
        a = make_traj()
        with pytest.raises(ValueError):
            ev.rpe(a, a, 0.0)


class TestZError:
    def test_identical_zeros(self):
        a = make_traj()
        _, err, mae = ev.z_error_series(a, a)
        assert np.all(err == 0.0) and mae == 0.0

    def test_constant_bias(self):
        gt = make_traj()
        est = ev.Trajectory(gt.t, gt.pos + [0.0, 0.0, 0.02], gt.rot)
        _, err, mae = ev.z_error_series(est, gt)
        assert mae == pytest.approx(0.02, abs=1e-12)

    def test_series_length_covers_overlap(self):
        gt = make_traj(n=50)
        est = make_traj(n=40)
        times, err, _ = ev.z_error_series(est, gt)
        assert len(times) == len(err)
        assert len(times) == np.sum(gt.t <= est.t[-1] + 1e-9)


class TestMapRmse:
    @staticmethod
    def grid(vals, known):
        return HeightGrid(
            heights=np.asarray(vals, dtype=float),
            known=np.asarray(known, dtype=bool),
            origin_ix=0,
            origin_iy=0,
            res=0.1,
        )

    def test_perfect_map(self):
        hg = self.grid(np.zeros((10, 10)), np.ones((10, 10)))
        rmse, cov = ev.map_rmse(hg, lambda x, y: 0.0)
        assert rmse == 0.0 and cov == 1.0

    def test_all_unknown_flagged(self):
        hg = self.grid(np.zeros((5, 5)), np.zeros((5, 5)))
        rmse, cov = ev.map_rmse(hg, lambda x, y: 0.0)
        assert np.isnan(rmse) and cov == 0.0

    def test_single_column_error(self):
        vals = np.zeros((10, 10))
        vals[3, 4] = 0.1
        hg = self.grid(vals, np.ones((10, 10)))
        rmse, cov = ev.map_rmse(hg, lambda x, y: 0.0)
        assert rmse == pytest.approx(0.01, abs=1e-12)

    def test_sign_symmetric(self):
        vals = np.zeros((10, 10))
        vals[3, 4] = 0.1
        plus, _ = ev.map_rmse(self.grid(vals, np.ones((10, 10))), lambda x, y: 0.0)
        minus, _ = ev.map_rmse(self.grid(-vals, np.ones((10, 10))), lambda x, y: 0.0)
        assert plus == pytest.approx(minus, abs=1e-15)


class TestTimingReport:
    def test_constant_samples(self):
        rep = ev.timing_report({"update": [0.001] * 20})
        assert rep["update"]["p50_ms"] == pytest.approx(1.0)
        assert rep["update"]["p99_ms"] == pytest.approx(1.0)

    def test_two_value_distribution(self):
        rep = ev.timing_report({"s": [0.001] * 50 + [0.003] * 50})
        ms = np.array([1.0] * 50 + [3.0] * 50)
        assert rep["s"]["p50_ms"] == pytest.approx(np.percentile(ms, 50))
        assert rep["s"]["p90_ms"] == pytest.approx(np.percentile(ms, 90))

    def test_empty_stage_omitted(self, caplog):
        import logging

        with caplog.at_level(logging.WARNING, logger="legmap.evalkit"):
            rep = ev.timing_report({"empty": [], "ok": [0.002]})
        assert "empty" not in rep and "ok" in rep
        assert any("no timing samples" in r.message for r in caplog.records)


class TestTrajectoryType:
    def test_rejects_nonmonotonic_time(self):
        with pytest.raises(ValueError):
            ev.Trajectory(np.array([0.0, 0.0]), np.zeros((2, 3)), np.tile(np.eye(3), (2, 1, 1)))

    def test_rotation_resampling_geodesic(self):
        t = np.array([0.0, 1.0])
        rot = np.array([np.eye(3), mf.so3_exp(np.array([0.0, 0.0, 1.0]))])
        traj = ev.Trajectory(t, np.zeros((2, 3)), rot)
        mid = traj.sample(np.array([0.5]))
        assert np.allclose(mf.so3_log(mid.rot[0]), [0, 0, 0.5], atol=1e-12)

    def test_metrics_report_json(self):
        rep = ev.MetricsReport(ape_rmse_m=0.1, timing={"update": {"p50_ms": 1.0}})
        import json

        payload = json.loads(rep.to_json())
        assert payload["ape_rmse_m"] == 0.1
        assert payload["map_rmse_m"] is None
