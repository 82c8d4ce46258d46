import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from legmap.cli import main


def sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


SHORT_RUN = """
run:
  duration_s: 3.0
sensors:
  rays_per_scan: 200
"""


@pytest.fixture(scope="module")
def short_config(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "short.yaml"
    p.write_text(SHORT_RUN)
    return str(p)


@pytest.fixture(scope="module")
def run_dir(short_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("run") / "out"
    code = main(["run", "--config", short_config, "--out", str(out)])
    assert code == 0
    return out


class TestSimulate:
    def test_creates_log_layout(self, short_config, tmp_path):
        out = tmp_path / "log"
        assert main(["simulate", "--config", short_config, "--out", str(out)]) == 0
        for name in ("imu.csv", "feet.csv", "gt.tum", "terrain.csv", "manifest.json"):
            assert (out / name).exists()
        assert sorted(os.listdir(out / "scans"))
        manifest = json.loads((out / "manifest.json").read_text())
        for rel, digest in manifest["digests"].items():
            assert sha(out / rel) == digest

    def test_same_seed_identical_digests(self, short_config, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", short_config, "--out", str(a)]) == 0
        assert main(["simulate", "--config", short_config, "--out", str(b)]) == 0
        da = json.loads((a / "manifest.json").read_text())["digests"]
        db = json.loads((b / "manifest.json").read_text())["digests"]
        assert da == db

    def test_malformed_config_names_key(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("sensors:\n  rays_per_scam: 100\n")
        code = main(["simulate", "--config", str(bad), "--out", str(tmp_path / "x")])
        assert code == 2
        assert "rays_per_scam" in capsys.readouterr().err

    def test_seed_flag_changes_output(self, tmp_path):
        noisy = tmp_path / "noisy.yaml"
        noisy.write_text(
            SHORT_RUN + "  gyro_noise_density: 1.0e-3\n  accel_noise_density: 1.0e-2\n"
        )
        a, b = tmp_path / "a", tmp_path / "b"
        main(["simulate", "--config", str(noisy), "--seed", "1", "--out", str(a)])
        main(["simulate", "--config", str(noisy), "--seed", "2", "--out", str(b)])
        da = json.loads((a / "manifest.json").read_text())["digests"]["imu.csv"]
        db = json.loads((b / "manifest.json").read_text())["digests"]["imu.csv"]
        assert da != db


class TestRun:
    def test_artifacts_exist(self, run_dir):
        expected = [
            "est.tum", "gt.tum", "heightmap.csv", "voxels.csv", "rewards.jsonl",
            "z_error.csv", "metrics.json", "timing.json", "manifest.json",
            "fig_trajectory.png", "fig_z_error.png", "fig_height_map.png",
            "fig_timing.png",
        ]
        for name in expected:
            assert (run_dir / name).exists(), name

    def test_manifest_digests_match_files(self, run_dir):
        manifest = json.loads((run_dir / "manifest.json").read_text())
        assert manifest["digests"]
        for rel, digest in manifest["digests"].items():
            assert sha(run_dir / rel) == digest, rel

    def test_metrics_reasonable(self, run_dir):
        m = json.loads((run_dir / "metrics.json").read_text())
        assert m["ape_rmse_m"] < 0.05
        assert 0.0 < m["map_coverage"] <= 1.0

    def test_rewards_log_rows(self, run_dir):
        rows = [json.loads(l) for l in (run_dir / "rewards.jsonl").read_text().splitlines()]
        assert len(rows) == 151  # 3 s at 50 Hz plus the initial tick
        for row in rows[:5]:
            assert len(row["terms"]) == 13
            assert abs(sum(row["terms"].values()) - row["total"]) < 1e-12

    def test_timing_has_all_stages(self, run_dir):
        timing = json.loads((run_dir / "timing.json").read_text())
        for stage in ("propagate", "residuals", "update", "integrate_scan", "extract_interpolate"):
            assert stage in timing
            assert timing[stage]["p50_ms"] >= 0.0

    def test_ablation_flags_produce_runs(self, short_config, tmp_path):
        out = tmp_path / "nokin"
        code = main(["run", "--config", short_config, "--out", str(out), "--no-kinematics", "--no-sor", "--no-interp"])
        assert code == 0
        m = json.loads((out / "metrics.json").read_text())
        assert "z_mae_m" in m
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["estimator"]["use_kinematics"] is False

    def test_noise_free_walk_ape_below_millimeter(self, tmp_path):
        cfg = tmp_path / "clean.yaml"
        cfg.write_text(
            "run:\n  duration_s: 6.0\n"
            "command:\n  vx_mps: 0.4\n"
            "motion:\n  bob_amplitude_m: 0.0\n"
            "sensors:\n  imu_rate_hz: 800.0\n  rays_per_scan: 250\n"
            "  elevation_max_deg: 10.0\n"
            "estimator:\n  noise:\n    kin_vel_std_mps: 0.002\n    kin_pos_std_m: 0.002\n"
        )
        out = tmp_path / "clean_run"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        m = json.loads((out / "metrics.json").read_text())
        assert m["ape_rmse_m"] < 1e-3

    def test_deterministic_outputs_repeat(self, short_config, run_dir, tmp_path):
        out2 = tmp_path / "again"
        assert main(["run", "--config", short_config, "--out", str(out2)]) == 0
        m1 = json.loads((run_dir / "manifest.json").read_text())
        m2 = json.loads((out2 / "manifest.json").read_text())
        assert m1["deterministic_outputs"] == m2["deterministic_outputs"]
        for rel in m1["deterministic_outputs"]:
            assert m1["digests"][rel] == m2["digests"][rel], rel


class TestEvaluate:
    def test_identical_files_zero(self, run_dir, capsys):
        gt = str(run_dir / "gt.tum")
        assert main(["evaluate", gt, gt]) == 0
        m = json.loads(capsys.readouterr().out)
        assert m["ape_rmse_m"] == 0.0
        assert m["rpe_rmse_m"] == 0.0

    def test_offset_known_ape(self, run_dir, tmp_path, capsys):
        src = (run_dir / "gt.tum").read_text().splitlines()
        shifted = []
        for line in src:
            f = line.split()
            f[1] = repr(float(f[1]) + 0.3)
            shifted.append(" ".join(f))
        p = tmp_path / "shifted.tum"
        p.write_text("\n".join(shifted) + "\n")
        assert main(["evaluate", str(p), str(run_dir / "gt.tum")]) == 0
        m = json.loads(capsys.readouterr().out)
        assert m["ape_rmse_m"] == pytest.approx(0.3, abs=1e-6)
        assert m["rpe_rmse_m"] == pytest.approx(0.0, abs=1e-9)

    def test_align_flag_removes_offset(self, run_dir, tmp_path, capsys):
        src = (run_dir / "gt.tum").read_text().splitlines()
        shifted = []
        for line in src:
            f = line.split()
            f[2] = repr(float(f[2]) - 1.25)
            shifted.append(" ".join(f))
        p = tmp_path / "shifted.tum"
        p.write_text("\n".join(shifted) + "\n")
        assert main(["evaluate", str(p), str(run_dir / "gt.tum"), "--align"]) == 0
        m = json.loads(capsys.readouterr().out)
        assert m["ape_rmse_m"] < 1e-9

    def test_truncated_file_errors_with_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.tum"
        bad.write_text("0 0 0 0 0 0 0 1\n0.1 0 0 0\n")
        code = main(["evaluate", str(bad), str(bad)])
        assert code == 3
        assert "line 2" in capsys.readouterr().err

    def test_out_dir_artifacts(self, run_dir, tmp_path):
        out = tmp_path / "evalout"
        code = main(["evaluate", str(run_dir / "est.tum"), str(run_dir / "gt.tum"), "--out", str(out)])
        assert code == 0
        assert (out / "metrics.json").exists()
        assert (out / "z_error.csv").exists()
        assert (out / "fig_z_error.png").exists()


class TestBench:
    def test_bench_outputs(self, tmp_path, capsys):
        out = tmp_path / "bench"
        code = main(["bench", "--scans", "5", "--points", "2000", "--out", str(out)])
        assert code == 0
        timing = json.loads((out / "timing.json").read_text())
        assert "map_update_total" in timing
        assert timing["integrate_scan"]["count"] == 5


class TestEntryPoint:
    def test_module_version(self):
        out = subprocess.run(
            [sys.executable, "-m", "legmap.cli", "--version"],
            capture_output=True, text=True,
        )
        assert out.returncode == 0
        assert out.stdout.strip()


class TestHeightNoiseHelper:
    def test_bounds(self):
        from legmap.simkit import perturb_height_vector

        rng = np.random.default_rng(0)
        v = np.zeros(187)
        out = perturb_height_vector(v, rng, amplitude_m=0.05)
        assert out.shape == (187,)
        assert np.all(np.abs(out) <= 0.05)
        assert np.std(out) > 0.01
