"""End-to-end drivers tying the simulator, filter, and map together.

These are library entry points; the CLI wraps them with config parsing
and artifact writing.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import elevmap as em
from . import estimator as est
from . import manifold as mf
from .simkit.scenario import ScenarioData

logger = logging.getLogger(__name__)


@dataclass
class EstimationOptions:
    noise: est.NoiseConfig = field(default_factory=est.NoiseConfig)
    plane: est.PlaneParams = field(default_factory=est.PlaneParams)
    sor: est.SorParams = field(default_factory=est.SorParams)
    use_kinematics: bool = True
    use_sor: bool = True
    map_voxel_m: float = 0.1
    max_scan_points: int | None = None


@dataclass
class EstimationTrace:
    t: np.ndarray          # (n,) frame times
    rot: np.ndarray        # (n, 3, 3)
    pos: np.ndarray        # (n, 3)
    incr_rot: np.ndarray   # (n, 3, 3) body-frame increments between frames
    incr_trans: np.ndarray
    timings: dict          # stage -> list of seconds


def run_estimation(data: ScenarioData, opts: EstimationOptions | None = None) -> EstimationTrace:
    """Replay a sensor log through the filter, frame by frame."""
    opts = opts or EstimationOptions()
    spec = data.spec
    prelude = [s for s in data.log.imu if s.t <= spec.prelude_s]
    ginit = est.init_gravity(prelude)

    x0 = mf.NominalState()
    first = data.log.gt[0]
    x0.rot = first.rot.copy()
    x0.pos = first.pos.copy()
    x0.gravity = ginit.gravity
    x0.bias_gyro = ginit.gyro_bias
    pipe = est.EstimatorPipeline(
        noise=opts.noise,
        extrinsics=spec.extrinsics,
        init_state=x0,
        plane_params=opts.plane,
        sor_params=opts.sor,
        use_kinematics=opts.use_kinematics,
        use_sor=opts.use_sor,
        map_voxel_m=opts.map_voxel_m,
        max_scan_points=opts.max_scan_points,
    )

    imu = data.log.imu
    feet = data.log.feet
    kin_halfstep = 0.51 / spec.sensors.kin_rate_hz
    ii = fi = 0
    frames = []
    timings = {"propagate": [], "residuals": [], "update": []}
    for frame in data.log.scans:
        imu_win = []
        while ii < len(imu) and imu[ii].t <= frame.t:
            imu_win.append(imu[ii])
            ii += 1
        feet_win = []
        while fi < len(feet) and feet[fi].t <= frame.t + kin_halfstep:
            feet_win.append(feet[fi])
            fi += 1
        r = pipe.process_frame(frame.t, frame.points, imu_win, feet_win)
        frames.append(r)
        for k in timings:
            timings[k].append(r.timings[k])
    return EstimationTrace(
        t=np.array([r.t for r in frames]),
        rot=np.array([r.rot for r in frames]),
        pos=np.array([r.pos for r in frames]),
        incr_rot=np.array([r.incr_rot for r in frames]),
        incr_trans=np.array([r.incr_trans for r in frames]),
        timings=timings,
    )


@dataclass
class MappingOptions:
    window_m: tuple = (3.0, 3.0, 2.0)
    resolution_m: float = 0.05
    occupancy: em.OccupancyParams = field(default_factory=em.OccupancyParams)
    interpolate: bool = True
    policy: em.PolicyGridParams = field(default_factory=em.PolicyGridParams)


@dataclass
class MappingTrace:
    grid: em.VoxelGrid
    height_raw: em.HeightGrid
    height_filled: em.HeightGrid
    policy_vector: np.ndarray
    timings: dict


def run_mapping(
    data: ScenarioData, trace: EstimationTrace, opts: MappingOptions | None = None
) -> MappingTrace:
    """Feed estimated increments and scans into the local elevation map."""
    opts = opts or MappingOptions()
    spec = data.spec
    first = data.log.gt[0]
    grid = em.VoxelGrid(opts.window_m, opts.resolution_m, center=first.pos)
    timings = {"integrate_scan": [], "extract_interpolate": []}
    hg_raw = hg_filled = None
    for k, frame in enumerate(data.log.scans):
        rot, pos = trace.rot[k], trace.pos[k]
        em.slide(grid, trace.incr_rot[k], trace.incr_trans[k])
        pts_world = (
            frame.points @ spec.extrinsics.rot.T + spec.extrinsics.trans
        ) @ rot.T + pos
        origin = pos + rot @ spec.extrinsics.trans
        t0 = time.perf_counter()
        em.integrate_scan(grid, pts_world, origin, opts.occupancy)
        timings["integrate_scan"].append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        hg_raw = em.extract_heights(grid, opts.occupancy)
        if opts.interpolate:
            here = (
                int(np.floor(pos[0] / grid.res)) - hg_raw.origin_ix,
                int(np.floor(pos[1] / grid.res)) - hg_raw.origin_iy,
            )
            hg_filled = em.interpolate(hg_raw, here)
        else:
            hg_filled = hg_raw
        timings["extract_interpolate"].append(time.perf_counter() - t0)
    if hg_raw is None:
        hg_raw = hg_filled = em.extract_heights(grid, opts.occupancy)
    rot_last, pos_last = trace.rot[-1], trace.pos[-1]
    yaw = np.arctan2(rot_last[1, 0], rot_last[0, 0])
    policy_vec = em.policy_grid_sample(hg_filled, pos_last, yaw, opts.policy)
    return MappingTrace(
        grid=grid,
        height_raw=hg_raw,
        height_filled=hg_filled,
        policy_vector=policy_vec,
        timings=timings,
    )
