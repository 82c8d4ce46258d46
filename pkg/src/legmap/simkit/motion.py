"""Analytic base and foot trajectories for a commanded trot.

The base follows a constant-command path (straight line or arc) through a
"path time" variable that stands still during the stationary prelude and
ramps up smoothly, so world position is twice differentiable everywhere
and IMU synthesis can use exact derivatives.  Feet alternate between
fixed stance placements on the terrain surface and smooth swing arcs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ScenarioInfeasibleError
from .gait import GaitParams, default_shoulder_offsets
from .terrain import Terrain

MIN_FOOTHOLD_Z = -0.2  # terrain lower than this is not a support
FOOTHOLD_SEARCH_STEP = 0.01


def smoothstep(u):
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def smoothstep_d(u):
    return 30.0 * u * u * (1.0 + u * (-2.0 + u))


def smoothstep_int(u):
    # integral of smoothstep from 0 to u
    return u ** 4 * (2.5 + u * (-3.0 + u))


@dataclass
class PathProfile:
    """Maps wall time to path time: zero during the prelude, then a
    quintic-smooth ramp to unit rate."""

    prelude_s: float = 1.0
    ramp_s: float = 0.5

    def eval(self, t: float) -> tuple[float, float, float]:
        """(sigma, d sigma/dt, d2 sigma/dt2) at wall time t."""
        tp = t - self.prelude_s
        if tp <= 0.0:
            return 0.0, 0.0, 0.0
        if tp >= self.ramp_s:
            return 0.5 * self.ramp_s + (tp - self.ramp_s), 1.0, 0.0
        u = tp / self.ramp_s
        return (
            self.ramp_s * smoothstep_int(u),
            smoothstep(u),
            smoothstep_d(u) / self.ramp_s,
        )


def _rotz(psi: float) -> np.ndarray:
    c, s = np.cos(psi), np.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


class BaseTrajectory:
    """Closed-form body motion under a constant planar velocity command."""

    def __init__(
        self,
        command_vel_xy=(0.5, 0.0),
        yaw_rate: float = 0.0,
        start_xy=(0.0, 0.0),
        start_yaw: float = 0.0,
        base_height: float = 0.32,
        walk_plane_z: float = 0.0,
        bob_amplitude: float = 0.01,
        bob_freq_hz: float = 3.0,
        profile: PathProfile | None = None,
        duration_s: float = 10.0,
    ):
        self.v_cmd = np.asarray(command_vel_xy, dtype=float)
        self.yaw_rate = float(yaw_rate)
        self.start_xy = np.asarray(start_xy, dtype=float)
        self.start_yaw = float(start_yaw)
        self.base_height = float(base_height)
        self.walk_plane_z = float(walk_plane_z)
        self.bob_amp = float(bob_amplitude)
        self.bob_w = 2.0 * np.pi * float(bob_freq_hz)
        self.profile = profile or PathProfile()
        self.duration_s = float(duration_s)

    # planar path and its first two derivatives in path time
    def _xy_path(self, sigma: float):
        vx, vy = self.v_cmd
        w = self.yaw_rate
        psi0 = self.start_yaw
        psi = psi0 + w * sigma
        if abs(w) < 1e-9:
            c0, s0 = np.cos(psi0), np.sin(psi0)
            xy = self.start_xy + sigma * np.array([vx * c0 - vy * s0, vx * s0 + vy * c0])
        else:
            xy = self.start_xy + np.array(
                [
                    (vx * (np.sin(psi) - np.sin(psi0)) + vy * (np.cos(psi) - np.cos(psi0))) / w,
                    (-vx * (np.cos(psi) - np.cos(psi0)) + vy * (np.sin(psi) - np.sin(psi0))) / w,
                ]
            )
        c, s = np.cos(psi), np.sin(psi)
        d1 = np.array([vx * c - vy * s, vx * s + vy * c])
        d2 = w * np.array([-d1[1], d1[0]])
        return xy, d1, d2, psi

    def _z_path(self, sigma: float):
        z = self.walk_plane_z + self.base_height + self.bob_amp * np.sin(self.bob_w * sigma)
        d1 = self.bob_amp * self.bob_w * np.cos(self.bob_w * sigma)
        d2 = -self.bob_amp * self.bob_w ** 2 * np.sin(self.bob_w * sigma)
        return z, d1, d2

    def yaw(self, t: float) -> float:
        sigma, _, _ = self.profile.eval(t)
        return self.start_yaw + self.yaw_rate * sigma

    def pose(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        sigma, _, _ = self.profile.eval(t)
        xy, _, _, psi = self._xy_path(sigma)
        z, _, _ = self._z_path(sigma)
        return _rotz(psi), np.array([xy[0], xy[1], z])

    def vel(self, t: float) -> np.ndarray:
        sigma, sd, _ = self.profile.eval(t)
        _, d1, _, _ = self._xy_path(sigma)
        _, zd1, _ = self._z_path(sigma)
        return np.array([d1[0] * sd, d1[1] * sd, zd1 * sd])

    def acc(self, t: float) -> np.ndarray:
        sigma, sd, sdd = self.profile.eval(t)
        _, d1, d2, _ = self._xy_path(sigma)
        _, zd1, zd2 = self._z_path(sigma)
        axy = d2 * sd * sd + d1 * sdd
        az = zd2 * sd * sd + zd1 * sdd
        return np.array([axy[0], axy[1], az])

    def omega_body(self, t: float) -> np.ndarray:
        _, sd, _ = self.profile.eval(t)
        return np.array([0.0, 0.0, self.yaw_rate * sd])

    def sigma(self, t: float) -> tuple[float, float]:
        s, sd, _ = self.profile.eval(t)
        return s, sd


class FootPlan:
    """Stance placements and swing arcs for the four feet, parameterized
    by the same path time as the base so the two stay consistent."""

    def __init__(
        self,
        base: BaseTrajectory,
        gp: GaitParams,
        terrain: Terrain,
        shoulder_offsets=None,
        swing_height: float = 0.08,
    ):
        self.base = base
        self.gp = gp
        self.terrain = terrain
        self.offsets = (
            default_shoulder_offsets() if shoulder_offsets is None else np.asarray(shoulder_offsets)
        )
        self.swing_height = float(swing_height)
        sigma_end, _, _ = base.profile.eval(base.duration_s)
        n_cycles = int(np.ceil(sigma_end * gp.frequency_hz)) + 2
        self.placements = np.zeros((4, n_cycles + 1, 3))
        for i in range(4):
            for k in range(n_cycles + 1):
                self.placements[i, k] = self._place(i, k)

    def _shoulder_world(self, i: int, sigma: float) -> np.ndarray:
        xy, _, _, psi = self.base._xy_path(sigma)
        off = self.offsets[i]
        c, s = np.cos(psi), np.sin(psi)
        return xy + np.array([c * off[0] - s * off[1], s * off[0] + c * off[1]])

    def _place(self, i: int, k: int) -> np.ndarray:
        """Foothold for stance cycle k of foot i: the under-shoulder point
        at mid-stance, pushed along the travel direction to the nearest
        spot that is not a drop."""
        f = self.gp.frequency_hz
        off = self.gp.phase_offsets[i]
        mid = max(((k - off) + 0.5 * self.gp.duty_factor) / f, 0.0)
        anchor = self._shoulder_world(i, mid)
        psi = self.base.start_yaw + self.base.yaw_rate * mid
        direction = np.array([np.cos(psi), np.sin(psi)])
        reach = self.gp.step_length_m
        deltas = [0.0]
        for d in np.arange(FOOTHOLD_SEARCH_STEP, reach + 1e-9, FOOTHOLD_SEARCH_STEP):
            deltas.extend((d, -d))
        for d in deltas:
            xy = anchor + direction * d
            z = self.terrain.height(xy[0], xy[1])
            if z >= MIN_FOOTHOLD_Z:
                return np.array([xy[0], xy[1], z])
        raise ScenarioInfeasibleError(
            f"no foothold within {reach} m of ({anchor[0]:.2f}, {anchor[1]:.2f}) for foot {i}"
        )

    def foot_state(self, i: int, t: float) -> tuple[np.ndarray, np.ndarray, bool]:
        """(world position, world velocity, contact flag) of foot i."""
        sigma, sd = self.base.sigma(t)
        p = sigma * self.gp.frequency_hz + self.gp.phase_offsets[i]
        k = int(np.floor(p))
        fr = p - k
        if fr < self.gp.duty_factor:
            return self.placements[i, k].copy(), np.zeros(3), True
        u = (fr - self.gp.duty_factor) / (1.0 - self.gp.duty_factor)
        a = self.placements[i, k]
        b = self.placements[i, k + 1]
        s = smoothstep(u)
        ds = smoothstep_d(u)
        du_dt = self.gp.frequency_hz * sd / (1.0 - self.gp.duty_factor)
        pos = a + (b - a) * s
        pos[2] += self.swing_height * np.sin(np.pi * u) ** 2
        vel = (b - a) * ds * du_dt
        vel[2] += self.swing_height * np.pi * np.sin(2.0 * np.pi * u) * du_dt
        return pos, vel, False

    def all_feet(self, t: float):
        out = [self.foot_state(i, t) for i in range(4)]
        pos = np.array([o[0] for o in out])
        vel = np.array([o[1] for o in out])
        contact = np.array([o[2] for o in out])
        return pos, vel, contact


def synth_trajectory(
    terrain: Terrain,
    gp: GaitParams,
    command_vel_xy=(0.5, 0.0),
    yaw_rate: float = 0.0,
    duration_s: float = 10.0,
    prelude_s: float = 1.0,
    ramp_s: float = 0.5,
    start_xy=(0.0, 0.0),
    start_yaw: float = 0.0,
    walk_plane_z: float = 0.0,
    bob_amplitude: float = 0.01,
    swing_height: float = 0.08,
    shoulder_offsets=None,
) -> tuple[BaseTrajectory, FootPlan]:
    """Ground-truth base trajectory plus terrain-aware foot placements.

    Raises ScenarioInfeasibleError when some stance cycle has no valid
    foothold within step reach.
    """
    base = BaseTrajectory(
        command_vel_xy=command_vel_xy,
        yaw_rate=yaw_rate,
        start_xy=start_xy,
        start_yaw=start_yaw,
        base_height=gp.base_height_m,
        walk_plane_z=walk_plane_z,
        bob_amplitude=bob_amplitude,
        bob_freq_hz=2.0 * gp.frequency_hz,
        profile=PathProfile(prelude_s=prelude_s, ramp_s=ramp_s),
        duration_s=duration_s,
    )
    plan = FootPlan(base, gp, terrain, shoulder_offsets, swing_height)
    return base, plan
