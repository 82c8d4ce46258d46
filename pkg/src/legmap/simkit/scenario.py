"""Scenario orchestration: build terrain and trajectories, synthesize all
sensor streams and per-tick robot snapshots, and (de)serialize sensor logs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..estimator import Extrinsics, FootMeasurement, ImuSample
from ..manifold import quat_to_rot, rot_to_quat
from ..rewards import PrivilegedState, RobotSnapshot
from .gait import GaitParams, default_shoulder_offsets
from .motion import FootPlan, synth_trajectory
from .sensors import SensorModel, synth_imu, synth_kinematics, synth_lidar
from .terrain import Terrain, TerrainSpec, build_terrain

TUM_FMT = "{:.9g}"


@dataclass
class RobotParams:
    mass_kg: float = 12.0
    shoulder_half_length_m: float = 0.19
    shoulder_half_width_m: float = 0.15
    default_joint_pos: np.ndarray = field(default_factory=lambda: np.zeros(12))
    joint_sway_rad: float = 0.2
    link_masses: np.ndarray = field(default_factory=lambda: np.array([6.0, 1.0, 1.5, 0.3]))
    friction: float = 0.8
    com_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))
    kp: float = 30.0
    kd: float = 0.8

    def shoulder_offsets(self):
        return default_shoulder_offsets(
            self.shoulder_half_length_m, self.shoulder_half_width_m
        )


@dataclass
class ScenarioSpec:
    terrain_spec: TerrainSpec = field(default_factory=TerrainSpec)
    gait: GaitParams = field(default_factory=GaitParams)
    sensors: SensorModel = field(default_factory=SensorModel)
    robot: RobotParams = field(default_factory=RobotParams)
    extrinsics: Extrinsics = field(default_factory=Extrinsics)
    duration_s: float = 10.0
    control_rate_hz: float = 50.0
    prelude_s: float = 1.0
    ramp_s: float = 0.5
    command_vel_xy: tuple = (0.5, 0.0)
    command_yaw_rate: float = 0.0
    walk_plane_z: float = 0.0
    bob_amplitude_m: float = 0.01
    swing_height_m: float = 0.08
    seed: int = 0


@dataclass
class ScanFrame:
    t: float
    points: np.ndarray  # (n, 3) sensor frame


@dataclass
class GroundTruthPose:
    t: float
    rot: np.ndarray
    pos: np.ndarray


@dataclass
class SensorLog:
    """Time-ordered synthetic sensor streams plus ground truth."""

    imu: list
    scans: list
    feet: list
    gt: list
    terrain_grid: np.ndarray  # rows (x, y, height)

    def save(self, out_dir) -> list:
        """Write the directory layout; returns the file paths written."""
        os.makedirs(out_dir, exist_ok=True)
        os.makedirs(os.path.join(out_dir, "scans"), exist_ok=True)
        paths = []

        p = os.path.join(out_dir, "imu.csv")
        with open(p, "w") as f:
            f.write("t,wx,wy,wz,ax,ay,az\n")
            for s in self.imu:
                vals = [s.t, *s.gyro, *s.accel]
                f.write(",".join(TUM_FMT.format(v) for v in vals) + "\n")
        paths.append(p)

        for k, frame in enumerate(self.scans):
            p = os.path.join(out_dir, "scans", f"{k:04d}.csv")
            with open(p, "w") as f:
                f.write(f"# t={frame.t:.9f}\n")
                f.write("x,y,z\n")
                for row in frame.points:
                    f.write(",".join(TUM_FMT.format(v) for v in row) + "\n")
            paths.append(p)

        p = os.path.join(out_dir, "feet.csv")
        with open(p, "w") as f:
            cols = ["t"]
            for i in range(4):
                cols += [f"c{i}", f"p{i}x", f"p{i}y", f"p{i}z", f"v{i}x", f"v{i}y", f"v{i}z"]
            f.write(",".join(cols) + "\n")
            for fm in self.feet:
                vals = [TUM_FMT.format(fm.t)]
                for i in range(4):
                    vals.append(str(int(fm.contact[i])))
                    vals += [TUM_FMT.format(v) for v in fm.rel_pos[i]]
                    vals += [TUM_FMT.format(v) for v in fm.rel_vel[i]]
                f.write(",".join(vals) + "\n")
        paths.append(p)

        p = os.path.join(out_dir, "gt.tum")
        write_tum(p, [(g.t, g.rot, g.pos) for g in self.gt])
        paths.append(p)

        p = os.path.join(out_dir, "terrain.csv")
        with open(p, "w") as f:
            f.write("x_m,y_m,height_m\n")
            for row in self.terrain_grid:
                f.write(",".join(f"{v:.6f}" for v in row) + "\n")
        paths.append(p)
        return paths

    @classmethod
    def load(cls, in_dir) -> "SensorLog":
        imu = []
        with open(os.path.join(in_dir, "imu.csv")) as f:
            next(f)
            for line in f:
                v = [float(x) for x in line.split(",")]
                imu.append(ImuSample(v[0], np.array(v[1:4]), np.array(v[4:7])))
        scans = []
        scan_dir = os.path.join(in_dir, "scans")
        for name in sorted(os.listdir(scan_dir)):
            with open(os.path.join(scan_dir, name)) as f:
                header = next(f).strip()
                t = float(header.split("=", 1)[1])
                next(f)
                pts = [[float(x) for x in line.split(",")] for line in f if line.strip()]
                scans.append(ScanFrame(t, np.array(pts).reshape(-1, 3)))
        feet = []
        with open(os.path.join(in_dir, "feet.csv")) as f:
            next(f)
            for line in f:
                v = line.split(",")
                t = float(v[0])
                contact = np.zeros(4, dtype=bool)
                rel_pos = np.zeros((4, 3))
                rel_vel = np.zeros((4, 3))
                for i in range(4):
                    base = 1 + 7 * i
                    contact[i] = bool(int(v[base]))
                    rel_pos[i] = [float(x) for x in v[base + 1 : base + 4]]
                    rel_vel[i] = [float(x) for x in v[base + 4 : base + 7]]
                feet.append(FootMeasurement(t, rel_pos, rel_vel, contact))
        gt = [
            GroundTruthPose(t, rot, pos)
            for t, rot, pos in read_tum(os.path.join(in_dir, "gt.tum"))
        ]
        grid = np.loadtxt(os.path.join(in_dir, "terrain.csv"), delimiter=",", skiprows=1)
        return cls(imu, scans, feet, gt, grid.reshape(-1, 3))


def write_tum(path, poses) -> None:
    """TUM pose lines `t tx ty tz qx qy qz qw`, 9 significant digits."""
    with open(path, "w") as f:
        for t, rot, pos in poses:
            q = rot_to_quat(rot)
            vals = [t, pos[0], pos[1], pos[2], q[0], q[1], q[2], q[3]]
            f.write(" ".join(TUM_FMT.format(v) for v in vals) + "\n")


def read_tum(path):
    """Parse TUM pose lines; raises ValueError naming the offending line."""
    out = []
    with open(path) as f:
        for ln, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 8:
                raise ValueError(f"{path}: line {ln}: expected 8 fields, got {len(parts)}")
            try:
                v = [float(x) for x in parts]
            except ValueError as e:
                raise ValueError(f"{path}: line {ln}: {e}") from None
            out.append((v[0], quat_to_rot(np.array(v[4:8])), np.array(v[1:4])))
    return out


@dataclass
class ScenarioData:
    """Everything a run needs: the log, ground truth accessors, snapshots."""

    spec: ScenarioSpec
    terrain: Terrain
    log: SensorLog
    snapshots: list
    privileged: list
    base_traj: object
    foot_plan: FootPlan

    def gt_trajectory(self):
        t = np.array([g.t for g in self.log.gt])
        pos = np.array([g.pos for g in self.log.gt])
        rot = np.array([g.rot for g in self.log.gt])
        return t, rot, pos


def _joint_motion(spec: ScenarioSpec, sigma: float, sigma_dot: float):
    """Smooth synthetic joint curves (position, velocity, acceleration,
    torque): enough structure for the smoothness penalties to act on."""
    amp = spec.robot.joint_sway_rad
    w = 2.0 * np.pi * spec.gait.frequency_hz
    phases = np.tile([0.0, np.pi, np.pi, 0.0], 3)[:12] + np.repeat([0.0, 0.4, 0.8], 4)
    q = spec.robot.default_joint_pos + amp * np.sin(w * sigma + phases)
    qd = amp * w * np.cos(w * sigma + phases) * sigma_dot
    qdd = -amp * w * w * np.sin(w * sigma + phases) * sigma_dot ** 2
    tau = spec.robot.kp * (spec.robot.default_joint_pos - q) * 0.1 - spec.robot.kd * qd * 0.1
    return q, qd, qdd, tau


def _snapshots(spec: ScenarioSpec, base, plan: FootPlan, terrain: Terrain):
    """RobotSnapshot / PrivilegedState pair per control tick."""
    dt = 1.0 / spec.control_rate_hz
    n = int(np.floor(spec.duration_s * spec.control_rate_hz))
    g_w = np.array([0.0, 0.0, -1.0])
    snaps = []
    privs = []
    prev_contact = np.ones(4, dtype=bool)
    air_time = np.zeros(4)
    prev_action = np.zeros(12)
    for k in range(n + 1):
        t = k * dt
        rot, pos = base.pose(t)
        sigma, sigma_dot = base.sigma(t)
        vel_b = rot.T @ base.vel(t)
        omega_b = base.omega_body(t)
        fpos, _, contact = plan.all_feet(t)
        touchdown = contact & ~prev_contact
        landed_air = air_time.copy()
        air_time = np.where(contact, 0.0, air_time + dt)
        q, qd, qdd, tau = _joint_motion(spec, sigma, sigma_dot)
        action = q - spec.robot.default_joint_pos
        n_stance = max(int(np.sum(contact)), 1)
        forces = np.zeros((4, 3))
        forces[contact, 2] = spec.robot.mass_kg * 9.81 / n_stance
        moving = sigma_dot > 1e-3
        s = RobotSnapshot(
            command_vel=np.array(
                [spec.command_vel_xy[0], spec.command_vel_xy[1], 0.0]
            ) * (1.0 if moving else 0.0),
            command_yaw_rate=spec.command_yaw_rate * (1.0 if moving else 0.0),
            lin_vel=vel_b,
            ang_vel=omega_b,
            gravity_proj=rot.T @ g_w,
            joint_pos=q,
            joint_vel=qd,
            joint_acc=qdd,
            joint_torque=tau,
            action=action,
            prev_action=prev_action,
            default_joint_pos=spec.robot.default_joint_pos.copy(),
            foot_force=forces,
            foot_contact=contact,
            foot_air_time=np.where(touchdown, landed_air, air_time),
            foot_touchdown=touchdown,
            n_collisions=0,
            orientation_xy=(rot.T @ g_w)[:2],
            base_height=pos[2],
            foot_pos=fpos,
        )
        p = PrivilegedState(
            lin_vel=vel_b,
            contacts=contact.astype(float),
            link_masses=spec.robot.link_masses.copy(),
            friction=spec.robot.friction,
            com_offset=spec.robot.com_offset.copy(),
            disturbance_xy=np.zeros(2),
            kp=spec.robot.kp,
            kd=spec.robot.kd,
        )
        snaps.append(s)
        privs.append(p)
        prev_contact = contact
        prev_action = action
    return snaps, privs


def run_scenario(spec: ScenarioSpec) -> ScenarioData:
    """Synthesize the complete scenario deterministically from its seed."""
    terrain = build_terrain(spec.terrain_spec)
    base, plan = synth_trajectory(
        terrain,
        spec.gait,
        command_vel_xy=spec.command_vel_xy,
        yaw_rate=spec.command_yaw_rate,
        duration_s=spec.duration_s,
        prelude_s=spec.prelude_s,
        ramp_s=spec.ramp_s,
        walk_plane_z=spec.walk_plane_z,
        bob_amplitude=spec.bob_amplitude_m,
        swing_height=spec.swing_height_m,
        shoulder_offsets=spec.robot.shoulder_offsets(),
    )
    seeds = np.random.SeedSequence(spec.seed).spawn(3)
    rng_imu = np.random.default_rng(seeds[0])
    rng_lidar = np.random.default_rng(seeds[1])
    rng_kin = np.random.default_rng(seeds[2])

    imu = synth_imu(base, spec.sensors, rng_imu)
    feet = synth_kinematics(base, plan, spec.sensors, rng_kin)

    scans = []
    n_scans = int(np.floor((spec.duration_s - spec.prelude_s) * spec.sensors.lidar_rate_hz))
    for k in range(n_scans):
        t = spec.prelude_s + (k + 1) / spec.sensors.lidar_rate_hz
        rot, pos = base.pose(t)
        pts = synth_lidar(rot, pos, terrain, spec.sensors, spec.extrinsics, k, rng_lidar)
        scans.append(ScanFrame(t, pts))

    gt = []
    gt_dt = 1.0 / spec.sensors.imu_rate_hz
    for k in range(int(np.floor(spec.duration_s / gt_dt)) + 1):
        t = k * gt_dt
        rot, pos = base.pose(t)
        gt.append(GroundTruthPose(t, rot, pos))

    xs = np.arange(-2.0, max(8.0, spec.duration_s * abs(spec.command_vel_xy[0]) + 4.0), 0.1)
    ys = np.arange(-3.0, 3.0, 0.1)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    gh = terrain.height_many(gx, gy)
    grid = np.column_stack([gx.ravel(), gy.ravel(), gh.ravel()])

    snaps, privs = _snapshots(spec, base, plan, terrain)
    log = SensorLog(imu=imu, scans=scans, feet=feet, gt=gt, terrain_grid=grid)
    return ScenarioData(
        spec=spec,
        terrain=terrain,
        log=log,
        snapshots=snaps,
        privileged=privs,
        base_traj=base,
        foot_plan=plan,
    )
