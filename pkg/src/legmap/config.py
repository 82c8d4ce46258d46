"""Config loading: one published defaults tree, strict validation, and
builders that turn the merged tree into module parameter objects."""

from __future__ import annotations

import copy
from importlib import resources

import numpy as np
import yaml

from . import elevmap as em
from . import estimator as est
from .errors import ConfigError
from .manifold import so3_exp
from .runner import EstimationOptions, MappingOptions
from .simkit import GaitParams, RobotParams, ScenarioSpec, SensorModel
from .simkit.terrain import make_named_terrain

SCHEMA_VERSION = 1


def defaults() -> dict:
    with resources.files("legmap.data").joinpath("defaults.yaml").open() as f:
        return yaml.safe_load(f)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {here}")
        cur = base[key]
        if isinstance(cur, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{here}: expected a mapping")
            out[key] = _merge(cur, val, here)
        else:
            if isinstance(cur, bool) != isinstance(val, bool):
                raise ConfigError(f"{here}: expected {type(cur).__name__}")
            if isinstance(cur, (int, float)) and not isinstance(val, (int, float)):
                raise ConfigError(f"{here}: expected a number")
            if isinstance(cur, str) and not isinstance(val, str):
                raise ConfigError(f"{here}: expected a string")
            if isinstance(cur, list) and not isinstance(val, list):
                raise ConfigError(f"{here}: expected a list")
            out[key] = copy.deepcopy(val)
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Merge a YAML config file and programmatic overrides over the
    defaults; unknown keys or a schema mismatch raise ConfigError."""
    cfg = defaults()
    if path is not None:
        try:
            with open(path) as f:
                user = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from None
        except yaml.YAMLError as e:
            raise ConfigError(f"malformed YAML: {e}") from None
        if not isinstance(user, dict):
            raise ConfigError("config root must be a mapping")
        version = user.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version}")
        cfg = _merge(cfg, user)
    if overrides:
        cfg = _merge(cfg, overrides)
    return cfg


def build_scenario_spec(cfg: dict) -> ScenarioSpec:
    t = cfg["terrain"]
    terrain_spec = make_named_terrain(t["kind"], t)
    sens = cfg["sensors"]
    sensors = SensorModel(
        imu_rate_hz=float(sens["imu_rate_hz"]),
        lidar_rate_hz=float(sens["lidar_rate_hz"]),
        kin_rate_hz=float(sens["kin_rate_hz"]),
        rays_per_scan=int(sens["rays_per_scan"]),
        elevation_min_deg=float(sens["elevation_min_deg"]),
        elevation_max_deg=float(sens["elevation_max_deg"]),
        max_range_m=float(sens["max_range_m"]),
        min_range_m=float(sens["min_range_m"]),
        march_step_m=float(sens["march_step_m"]),
        lidar_sigma_m=float(sens["lidar_sigma_m"]),
        gyro_noise_density=float(sens["gyro_noise_density"]),
        accel_noise_density=float(sens["accel_noise_density"]),
        gyro_bias=np.asarray(sens["gyro_bias_rps"], dtype=float),
        accel_bias=np.asarray(sens["accel_bias_mps2"], dtype=float),
        kin_pos_sigma_m=float(sens["kin_pos_sigma_m"]),
        kin_vel_sigma_mps=float(sens["kin_vel_sigma_mps"]),
    )
    r = cfg["robot"]
    robot = RobotParams(
        mass_kg=float(r["mass_kg"]),
        shoulder_half_length_m=float(r["shoulder_half_length_m"]),
        shoulder_half_width_m=float(r["shoulder_half_width_m"]),
        friction=float(r["friction"]),
        kp=float(r["kp"]),
        kd=float(r["kd"]),
    )
    g = cfg["gait"]
    gait = GaitParams(
        frequency_hz=float(g["frequency_hz"]),
        duty_factor=float(g["duty_factor"]),
        step_length_m=float(g["step_length_m"]),
        base_height_m=float(g["base_height_m"]),
    )
    e = cfg["extrinsics"]
    rpy = np.asarray(e["rotation_rpy_rad"], dtype=float)
    rot = (
        so3_exp(np.array([0.0, 0.0, rpy[2]]))
        @ so3_exp(np.array([0.0, rpy[1], 0.0]))
        @ so3_exp(np.array([rpy[0], 0.0, 0.0]))
    )
    extr = est.Extrinsics(rot=rot, trans=np.asarray(e["translation_m"], dtype=float))
    run = cfg["run"]
    cmd = cfg["command"]
    mot = cfg["motion"]
    return ScenarioSpec(
        terrain_spec=terrain_spec,
        gait=gait,
        sensors=sensors,
        robot=robot,
        extrinsics=extr,
        duration_s=float(run["duration_s"]),
        control_rate_hz=float(run["control_rate_hz"]),
        prelude_s=float(run["prelude_s"]),
        ramp_s=float(run["ramp_s"]),
        command_vel_xy=(float(cmd["vx_mps"]), float(cmd["vy_mps"])),
        command_yaw_rate=float(cmd["yaw_rate_rps"]),
        walk_plane_z=float(mot["walk_plane_z_m"]),
        bob_amplitude_m=float(mot["bob_amplitude_m"]),
        swing_height_m=float(mot["swing_height_m"]),
        seed=int(cfg["seed"]),
    )


def build_estimation_options(cfg: dict) -> EstimationOptions:
    e = cfg["estimator"]
    n = e["noise"]
    noise = est.NoiseConfig(
        sigma_gyro=float(n["gyro"]),
        sigma_accel=float(n["accel"]),
        sigma_bias_gyro=float(n["bias_gyro"]),
        sigma_bias_accel=float(n["bias_accel"]),
        sigma_foot_stance=float(n["foot_stance"]),
        sigma_foot_swing=float(n["foot_swing"]),
        lidar_point_var=float(n["lidar_point_std_m"]) ** 2,
        kin_vel_var=float(n["kin_vel_std_mps"]) ** 2,
        kin_pos_var=float(n["kin_pos_std_m"]) ** 2,
    )
    p = e["plane"]
    plane = est.PlaneParams(
        neighbors=int(p["neighbors"]),
        planarity_tol_m=float(p["planarity_tol_m"]),
        search_radius_m=float(p["search_radius_m"]),
        min_map_points=int(p["min_map_points"]),
    )
    s = e["sor"]
    sor = est.SorParams(neighbors=int(s["neighbors"]), sigma_mult=float(s["sigma_mult"]))
    max_pts = int(e["max_scan_points"])
    return EstimationOptions(
        noise=noise,
        plane=plane,
        sor=sor,
        use_kinematics=bool(e["use_kinematics"]),
        use_sor=bool(e["use_sor"]),
        map_voxel_m=float(e["map_downsample_m"]),
        max_scan_points=None if max_pts <= 0 else max_pts,
    )


def build_mapping_options(cfg: dict) -> MappingOptions:
    m = cfg["map"]
    occupancy = em.OccupancyParams(
        p_hit=float(m["p_hit"]),
        p_miss=float(m["p_miss"]),
        logodds_min=float(m["logodds_min"]),
        logodds_max=float(m["logodds_max"]),
        occupied_threshold=float(m["occupied_threshold"]),
    )
    pg = cfg["policy_grid"]
    policy = em.PolicyGridParams(
        spacing_m=float(pg["spacing_m"]),
        count_x=int(pg["count_x"]),
        count_y=int(pg["count_y"]),
        unknown_depth_m=float(pg["unknown_depth_m"]),
    )
    return MappingOptions(
        window_m=tuple(float(v) for v in m["window_m"]),
        resolution_m=float(m["resolution_m"]),
        occupancy=occupancy,
        interpolate=bool(m["interpolate"]),
        policy=policy,
    )
