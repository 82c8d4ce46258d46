"""Deterministic synthetic data source: parametric terrains, trot
trajectories, and IMU/LiDAR/leg-kinematic sensor synthesis with ground
truth, for desk-scale verification without hardware or a physics engine."""

from .gait import GaitParams, gait_schedule
from .motion import BaseTrajectory, FootPlan, synth_trajectory
from .scenario import (
    RobotParams,
    ScenarioData,
    ScenarioSpec,
    SensorLog,
    run_scenario,
)
from .sensors import (
    SensorModel,
    perturb_height_vector,
    synth_imu,
    synth_kinematics,
    synth_lidar,
)
from .terrain import (
    Beam,
    Gap,
    PlankBridge,
    Slab,
    SteppingStones,
    Terrain,
    TerrainSpec,
    build_terrain,
)

__all__ = [
    "GaitParams",
    "gait_schedule",
    "BaseTrajectory",
    "FootPlan",
    "synth_trajectory",
    "RobotParams",
    "ScenarioData",
    "ScenarioSpec",
    "SensorLog",
    "run_scenario",
    "SensorModel",
    "perturb_height_vector",
    "synth_imu",
    "synth_kinematics",
    "synth_lidar",
    "Beam",
    "Gap",
    "PlankBridge",
    "Slab",
    "SteppingStones",
    "Terrain",
    "TerrainSpec",
    "build_terrain",
]
