"""Per-tick locomotion reward terms, foot-point classification, observation
assembly, and the episode termination predicate.

Everything here is a pure function of a snapshot; the run loop owns state
like observation history and the trapped timer.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

NUM_FEET = 4
NUM_JOINTS = 12

# stencil radii around the foot center: 4 axis points, 4 diagonal points
STENCIL_D1 = 0.05
STENCIL_D2 = np.sqrt(2.0) * STENCIL_D1
DROP_THRESHOLD = -0.2          # point counts as "over a drop" below this
FOOT_BELOW_LIMIT = -0.2        # termination: any foot under this height
TRAPPED_LIMIT_S = 20.0
AIR_TIME_TARGET_S = 0.5
STUMBLE_RATIO = 4.0

OBS_SIZE = 45
HISTORY_DEPTH = 6              # current frame plus 5 past frames
OBS_ANG = slice(0, 3)
OBS_GRAV = slice(3, 6)
OBS_CMD = slice(6, 9)
OBS_JOINT_POS = slice(9, 21)
OBS_JOINT_VEL = slice(21, 33)
OBS_PREV_ACTION = slice(33, 45)


@dataclass
class RobotSnapshot:
    """One control tick of every quantity the rewards and observations read.

    Velocities are body-frame; foot positions are world-frame.
    """

    command_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    command_yaw_rate: float = 0.0
    lin_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ang_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gravity_proj: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -1.0]))
    joint_pos: np.ndarray = field(default_factory=lambda: np.zeros(NUM_JOINTS))
    joint_vel: np.ndarray = field(default_factory=lambda: np.zeros(NUM_JOINTS))
    joint_acc: np.ndarray = field(default_factory=lambda: np.zeros(NUM_JOINTS))
    joint_torque: np.ndarray = field(default_factory=lambda: np.zeros(NUM_JOINTS))
    action: np.ndarray = field(default_factory=lambda: np.zeros(NUM_JOINTS))
    prev_action: np.ndarray = field(default_factory=lambda: np.zeros(NUM_JOINTS))
    default_joint_pos: np.ndarray = field(default_factory=lambda: np.zeros(NUM_JOINTS))
    foot_force: np.ndarray = field(default_factory=lambda: np.zeros((NUM_FEET, 3)))
    foot_contact: np.ndarray = field(default_factory=lambda: np.zeros(NUM_FEET, dtype=bool))
    foot_air_time: np.ndarray = field(default_factory=lambda: np.zeros(NUM_FEET))
    foot_touchdown: np.ndarray = field(default_factory=lambda: np.zeros(NUM_FEET, dtype=bool))
    n_collisions: int = 0
    orientation_xy: np.ndarray = field(default_factory=lambda: np.zeros(2))
    base_height: float = 0.0
    foot_pos: np.ndarray = field(default_factory=lambda: np.zeros((NUM_FEET, 3)))


@dataclass
class PrivilegedState:
    """Simulation-only ground truth handed to a critic: true velocity,
    contacts, inertial/friction parameters, and the actuator bundle."""

    lin_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    contacts: np.ndarray = field(default_factory=lambda: np.zeros(NUM_FEET))
    link_masses: np.ndarray = field(default_factory=lambda: np.zeros(4))
    friction: float = 0.0
    com_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))
    disturbance_xy: np.ndarray = field(default_factory=lambda: np.zeros(2))
    kp: float = 0.0
    kd: float = 0.0
    motor_strength: np.ndarray = field(default_factory=lambda: np.ones(NUM_JOINTS))
    motor_offset: np.ndarray = field(default_factory=lambda: np.zeros(NUM_JOINTS))

    def to_vector(self) -> np.ndarray:
        v = np.concatenate(
            [
                self.lin_vel,
                np.asarray(self.contacts, dtype=float),
                self.link_masses,
                [self.friction],
                self.com_offset,
                self.disturbance_xy,
                [self.kp, self.kd],
                self.motor_strength,
                self.motor_offset,
            ]
        )
        assert v.shape == (42,)
        return v


@dataclass(frozen=True)
class FootPointClassification:
    """Counts of stencil points hanging over a drop, by point type."""

    n1: int  # center point (the contact itself)
    n2: int  # of the 4 axis-aligned points
    n3: int  # of the 4 diagonal points


def classify_foot_points(foot_pos, terrain_height_fn) -> FootPointClassification:
    """Classify the 3x3 stencil around a foot against the terrain.

    A point counts when the terrain under it sits more than 0.2 m below
    the foot's own height.  The stencil is world-axis aligned: the center,
    four axis points at 5 cm, four diagonal points at ~7.07 cm.
    """
    fx, fy, fz = float(foot_pos[0]), float(foot_pos[1]), float(foot_pos[2])

    def below(dx, dy):
        return (terrain_height_fn(fx + dx, fy + dy) - fz) < DROP_THRESHOLD

    d = STENCIL_D1
    n1 = int(below(0.0, 0.0))
    n2 = sum(below(*o) for o in ((d, 0.0), (-d, 0.0), (0.0, d), (0.0, -d)))
    n3 = sum(below(*o) for o in ((d, d), (d, -d), (-d, d), (-d, -d)))
    return FootPointClassification(n1, n2, n3)


def reward_feet_center(contacts, classifications) -> float:
    """Edge-proximity count of feet in contact: n2 + 2*n3 per contact foot."""
    total = 0.0
    for c, cls in zip(contacts, classifications):
        if c:
            total += cls.n2 + 2.0 * cls.n3
    return total


def reward_feet_air_time(air_time, touchdown) -> float:
    """Swing-duration credit, granted at the touchdown tick only."""
    total = 0.0
    for t, td in zip(air_time, touchdown):
        if td:
            total += t - AIR_TIME_TARGET_S
    return total


def reward_feet_stumble(foot_force) -> float:
    """1 when any foot pushes sideways harder than 4x its vertical load."""
    f = np.asarray(foot_force, dtype=float).reshape(NUM_FEET, 3)
    lateral = np.hypot(f[:, 0], f[:, 1])
    return 1.0 if np.any(lateral > STUMBLE_RATIO * np.abs(f[:, 2])) else 0.0


# (term name, weight) in the order the totals are accumulated
REWARD_WEIGHTS = (
    ("tracking_lin_vel", 1.0),
    ("tracking_ang_vel", 0.5),
    ("lin_vel_z", -2.0),
    ("ang_vel_xy", -0.05),
    ("joint_torque", -1.0e-5),
    ("action_rate", -0.01),
    ("joint_accel", -2.5e-7),
    ("collisions", 1.0),
    ("orientation", -0.2),
    ("joint_motion_limit", -0.02),
    ("feet_air_time", 1.0),
    ("feet_stumble", -1.0),
    ("feet_center", -0.01),
)


def reward_terms(s: RobotSnapshot, classifications) -> dict[str, float]:
    """Raw (unweighted) value of every reward term."""
    v_err = s.command_vel[:2] - s.lin_vel[:2]
    w_err = s.command_yaw_rate - s.ang_vel[2]
    return {
        "tracking_lin_vel": float(np.exp(-4.0 * float(v_err @ v_err))),
        "tracking_ang_vel": float(np.exp(-4.0 * w_err * w_err)),
        "lin_vel_z": float(s.lin_vel[2] ** 2),
        "ang_vel_xy": float(s.ang_vel[0] ** 2 + s.ang_vel[1] ** 2),
        "joint_torque": float(s.joint_torque @ s.joint_torque),
        "action_rate": float(np.sum((s.action - s.prev_action) ** 2)),
        "joint_accel": float(s.joint_acc @ s.joint_acc),
        "collisions": -float(s.n_collisions),
        "orientation": float(s.orientation_xy @ s.orientation_xy),
        "joint_motion_limit": float(
            np.sum(np.abs(s.joint_pos - s.default_joint_pos))
        ),
        "feet_air_time": reward_feet_air_time(s.foot_air_time, s.foot_touchdown),
        "feet_stumble": reward_feet_stumble(s.foot_force),
        "feet_center": reward_feet_center(s.foot_contact, classifications),
    }


def reward_total(
    s: RobotSnapshot, classifications
) -> tuple[float, dict[str, float]]:
    """Weighted reward total and the per-term weighted breakdown."""
    raw = reward_terms(s, classifications)
    breakdown = {name: w * raw[name] for name, w in REWARD_WEIGHTS}
    return sum(breakdown.values()), breakdown


def observation_vector(s: RobotSnapshot) -> np.ndarray:
    """The 45-dim proprioceptive observation for one tick."""
    o = np.concatenate(
        [
            s.ang_vel,
            s.gravity_proj,
            s.command_vel,
            s.joint_pos,
            s.joint_vel,
            s.prev_action,
        ]
    )
    assert o.shape == (OBS_SIZE,)
    return o


def assemble_observation(
    s: RobotSnapshot, history, priv: PrivilegedState
) -> tuple[np.ndarray, np.ndarray, PrivilegedState]:
    """Build (current obs, stacked history newest-first, privileged state).

    ``history`` holds previous observation vectors, newest last.  Fewer
    than 5 past frames are padded by repeating the current frame, so an
    episode's first stack is 6 copies of frame 0.
    """
    o_t = observation_vector(s)
    past = list(history)[::-1]  # newest first
    frames = [o_t]
    for k in range(HISTORY_DEPTH - 1):
        frames.append(past[k] if k < len(past) else o_t)
    stacked = np.concatenate(frames)
    assert stacked.shape == (OBS_SIZE * HISTORY_DEPTH,)
    return o_t, stacked, priv


class ObservationAssembler:
    """Stateful wrapper that owns the observation history buffer."""

    def __init__(self):
        self._history: deque = deque(maxlen=HISTORY_DEPTH - 1)

    def reset(self) -> None:
        self._history.clear()

    def step(self, s: RobotSnapshot, priv: PrivilegedState):
        out = assemble_observation(s, self._history, priv)
        self._history.append(out[0])
        return out


class TrappedTracker:
    """Accumulates how long the windowed mean planar speed has stayed
    below the stall threshold while a nonzero command is active."""

    def __init__(self, window_s: float = 20.0, speed_threshold: float = 0.05):
        self.window_s = window_s
        self.speed_threshold = speed_threshold
        self._samples: deque = deque()
        self._trapped_s = 0.0
        self._last_t = None

    def update(self, t: float, planar_speed: float, command_active: bool) -> float:
        dt = 0.0 if self._last_t is None else max(0.0, t - self._last_t)
        self._last_t = t
        self._samples.append((t, planar_speed))
        while self._samples and self._samples[0][0] < t - self.window_s:
            self._samples.popleft()
        mean_speed = float(np.mean([v for _, v in self._samples]))
        if command_active and mean_speed < self.speed_threshold:
            self._trapped_s += dt
        else:
            self._trapped_s = 0.0
        return self._trapped_s


def termination_check(
    s: RobotSnapshot, trapped_duration_s: float
) -> tuple[bool, str | None]:
    """Episode end test: trunk/hip collision, a foot fallen below the
    height floor, or a stall that lasted the full trapped window."""
    if s.n_collisions > 0:
        return True, "collision"
    if np.any(s.foot_pos[:, 2] < FOOT_BELOW_LIMIT):
        return True, "foot_below_threshold"
    if trapped_duration_s >= TRAPPED_LIMIT_S:
        return True, "trapped_timeout"
    return False, None
