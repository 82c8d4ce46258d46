"""Sensor synthesis: IMU, dome-pattern LiDAR ray cast against the terrain,
and leg-kinematic foot measurements, all seeded and reproducible."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..estimator import Extrinsics, FootMeasurement, ImuSample
from .motion import BaseTrajectory, FootPlan
from .terrain import Terrain

GRAVITY_W = np.array([0.0, 0.0, -9.81])


@dataclass
class SensorModel:
    """Rates, LiDAR pattern, and noise levels of the synthetic rig.

    IMU noise fields are continuous-time densities (matching the filter's
    noise configuration); per-sample standard deviations follow from the
    rate.  LiDAR noise is additive along the ray.
    """

    imu_rate_hz: float = 200.0
    lidar_rate_hz: float = 10.0
    kin_rate_hz: float = 100.0
    rays_per_scan: int = 600
    elevation_min_deg: float = -75.0
    elevation_max_deg: float = 15.0
    max_range_m: float = 8.0
    min_range_m: float = 0.1
    lidar_sigma_m: float = 0.0
    gyro_noise_density: float = 0.0      # rad/s/sqrt(Hz)
    accel_noise_density: float = 0.0     # m/s^2/sqrt(Hz)
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    kin_pos_sigma_m: float = 0.0
    kin_vel_sigma_mps: float = 0.0
    march_step_m: float = 0.02

    def __post_init__(self):
        self.gyro_bias = np.asarray(self.gyro_bias, dtype=float)
        self.accel_bias = np.asarray(self.accel_bias, dtype=float)
        if min(self.imu_rate_hz, self.lidar_rate_hz, self.kin_rate_hz) <= 0:
            raise ValueError("sensor rates must be positive")
        if self.lidar_rate_hz > self.imu_rate_hz:
            raise ValueError("LiDAR rate must not exceed the IMU rate")


def synth_imu(base: BaseTrajectory, sm: SensorModel, rng: np.random.Generator):
    """IMU stream over the trajectory: specific force rotated into the body
    frame plus bias and white noise; rates likewise."""
    n = int(np.floor(base.duration_s * sm.imu_rate_hz))
    dt = 1.0 / sm.imu_rate_hz
    gyro_std = sm.gyro_noise_density * np.sqrt(sm.imu_rate_hz)
    accel_std = sm.accel_noise_density * np.sqrt(sm.imu_rate_hz)
    samples = []
    for k in range(n + 1):
        t = k * dt
        rot, _ = base.pose(t)
        a_world = base.acc(t)
        accel = rot.T @ (a_world - GRAVITY_W) + sm.accel_bias
        gyro = base.omega_body(t) + sm.gyro_bias
        if accel_std > 0.0:
            accel = accel + rng.normal(0.0, accel_std, 3)
        if gyro_std > 0.0:
            gyro = gyro + rng.normal(0.0, gyro_std, 3)
        samples.append(ImuSample(t=t, gyro=gyro, accel=accel))
    return samples


def scan_directions(sm: SensorModel, frame_idx: int) -> np.ndarray:
    """Deterministic non-repeating dome pattern in the sensor frame; the
    whole pattern precesses a golden angle per frame."""
    j = np.arange(sm.rays_per_scan)
    golden = np.pi * (3.0 - np.sqrt(5.0))
    az = j * golden + frame_idx * 0.61803398875
    frac = (j * 0.7548776662466927) % 1.0
    el = np.deg2rad(sm.elevation_min_deg + (sm.elevation_max_deg - sm.elevation_min_deg) * frac)
    ce = np.cos(el)
    return np.column_stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)])


def raycast_heightfield(
    origins: np.ndarray,
    dirs: np.ndarray,
    terrain: Terrain,
    max_range: float,
    min_range: float = 0.0,
    march_step: float = 0.02,
    refine_iters: int = 50,
) -> tuple[np.ndarray, np.ndarray]:
    """March rays until they pierce the terrain surface, then bisect.

    Returns (ranges, hit mask); ranges are np.inf where the ray misses
    within max_range.  Vertical faces are caught by the sign change of
    (ray z - terrain height) across the crossing.
    """
    n = len(dirs)
    p = origins + dirs * min_range
    above_prev = p[:, 2] > terrain.height_many(p[:, 0], p[:, 1])
    t_hit_lo = np.full(n, np.inf)
    t_hit_hi = np.full(n, np.inf)
    found = np.zeros(n, dtype=bool)
    steps = int(np.ceil((max_range - min_range) / march_step))
    t_prev = min_range
    for k in range(1, steps + 1):
        t_cur = min(min_range + k * march_step, max_range)
        p = origins + dirs * t_cur
        above = p[:, 2] > terrain.height_many(p[:, 0], p[:, 1])
        crossed = ~found & above_prev & ~above
        t_hit_lo[crossed] = t_prev
        t_hit_hi[crossed] = t_cur
        found |= crossed
        above_prev = above
        t_prev = t_cur
        if np.all(found):
            break
    # bisect the bracketing interval on the hit subset
    idx = np.flatnonzero(found)
    if len(idx):
        lo = t_hit_lo[idx]
        hi = t_hit_hi[idx]
        o = origins[idx]
        d = dirs[idx]
        for _ in range(refine_iters):
            mid = 0.5 * (lo + hi)
            p = o + d * mid[:, None]
            above = p[:, 2] > terrain.height_many(p[:, 0], p[:, 1])
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        t_hit_lo[idx] = 0.5 * (lo + hi)
    ranges = np.where(found, t_hit_lo, np.inf)
    return ranges, found


def synth_lidar(
    rot: np.ndarray,
    pos: np.ndarray,
    terrain: Terrain,
    sm: SensorModel,
    ext: Extrinsics,
    frame_idx: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """One scan: sensor-frame points of rays that hit the terrain."""
    dirs_s = scan_directions(sm, frame_idx)
    rot_ws = rot @ ext.rot                      # sensor to world
    origin_w = pos + rot @ ext.trans
    dirs_w = dirs_s @ rot_ws.T
    origins = np.broadcast_to(origin_w, dirs_w.shape)
    ranges, hit = raycast_heightfield(
        origins, dirs_w, terrain, sm.max_range_m, sm.min_range_m, sm.march_step_m
    )
    r = ranges[hit]
    if sm.lidar_sigma_m > 0.0:
        r = r + rng.normal(0.0, sm.lidar_sigma_m, r.shape)
    return dirs_s[hit] * r[:, None]


def perturb_height_vector(
    heights: np.ndarray, rng: np.random.Generator, amplitude_m: float = 0.05
) -> np.ndarray:
    """Uniform per-entry noise in [-amplitude, amplitude), as injected on
    policy elevation inputs during robustness checks."""
    h = np.asarray(heights, dtype=float)
    return h + rng.uniform(-amplitude_m, amplitude_m, size=h.shape)


def synth_kinematics(
    base: BaseTrajectory,
    plan: FootPlan,
    sm: SensorModel,
    rng: np.random.Generator,
):
    """FootMeasurement stream.

    rel_pos follows the filter's convention rot^T (base - foot); rel_vel is
    generated so the stance no-slip velocity residual evaluates to the
    foot's world slip velocity, hence exactly zero during clean stance.
    """
    n = int(np.floor(base.duration_s * sm.kin_rate_hz))
    dt = 1.0 / sm.kin_rate_hz
    out = []
    for k in range(n + 1):
        t = k * dt
        rot, pos = base.pose(t)
        v = base.vel(t)
        omega = base.omega_body(t)
        fpos, fvel, contact = plan.all_feet(t)
        rel_pos = (pos[None, :] - fpos) @ rot
        rel_vel = -(v[None, :] - fvel) @ rot - np.cross(
            np.broadcast_to(omega, (4, 3)), rel_pos
        )
        if sm.kin_pos_sigma_m > 0.0:
            rel_pos = rel_pos + rng.normal(0.0, sm.kin_pos_sigma_m, (4, 3))
        if sm.kin_vel_sigma_mps > 0.0:
            rel_vel = rel_vel + rng.normal(0.0, sm.kin_vel_sigma_mps, (4, 3))
        out.append(FootMeasurement(t=t, rel_pos=rel_pos, rel_vel=rel_vel, contact=contact))
    return out
