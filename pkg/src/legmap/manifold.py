"""Rotation algebra and the retraction pair used by the error-state filter.

The filter state lives on SO(3) x R^27; perturbations live in a 30-dim
tangent space ordered (rot, pos, vel, accel bias, gyro bias, feet 1..4,
gravity).  Rotations are perturbed on the body side: R_perturbed =
R @ exp(delta_theta).  All printed measurement Jacobians in this package
assume that convention.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

# Tangent-space block layout (total dimension 30).
ROT = slice(0, 3)
POS = slice(3, 6)
VEL = slice(6, 9)
BIAS_ACC = slice(9, 12)
BIAS_GYRO = slice(12, 15)
FEET = slice(15, 27)
GRAV = slice(27, 30)
STATE_DIM = 30
NUM_FEET = 4


def foot_slice(i: int) -> slice:
    """Tangent-space columns of foot i (0..3)."""
    if not 0 <= i < NUM_FEET:
        raise ValueError(f"foot index {i} out of range")
    return slice(15 + 3 * i, 18 + 3 * i)


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that hat(v) @ w == cross(v, w)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def so3_exp(axis_angle: np.ndarray) -> np.ndarray:
    """Rodrigues exponential map.  Angles >= pi are accepted and wrap."""
    w = np.asarray(axis_angle, dtype=float)
    theta = np.linalg.norm(w)
    K = hat(w)
    if theta < 1e-8:
        # second-order series, exact to machine precision at this scale
        return np.eye(3) + K + 0.5 * (K @ K)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / (theta * theta)
    return np.eye(3) + a * K + b * (K @ K)


def so3_log(rot: np.ndarray) -> np.ndarray:
    """Inverse of so3_exp, returning an axis-angle vector with norm <= pi.

    At exactly pi the axis sign is ambiguous; the branch returned has its
    first nonzero component positive so results are reproducible.
    """
    trace = np.clip((np.trace(rot) - 1.0) * 0.5, -1.0, 1.0)
    theta = np.arccos(trace)
    if theta < 1e-8:
        # first order: vee of the antisymmetric part
        return 0.5 * np.array(
            [rot[2, 1] - rot[1, 2], rot[0, 2] - rot[2, 0], rot[1, 0] - rot[0, 1]]
        )
    if np.pi - theta < 1e-6:
        # R ~ I + 2*axis*axis^T - 2I near pi; recover axis from the largest pivot
        B = 0.5 * (rot + np.eye(3))
        k = int(np.argmax(np.diag(B)))
        axis = B[:, k] / np.sqrt(max(B[k, k], 1e-18))
        axis = axis / np.linalg.norm(axis)
        for c in axis:
            if abs(c) > 1e-12:
                if c < 0.0:
                    axis = -axis
                break
        return axis * theta
    scale = theta / (2.0 * np.sin(theta))
    return scale * np.array(
        [rot[2, 1] - rot[1, 2], rot[0, 2] - rot[2, 0], rot[1, 0] - rot[0, 1]]
    )


def so3_right_jacobian(axis_angle: np.ndarray) -> np.ndarray:
    """Right Jacobian of SO(3): exp(w + dw) ~= exp(w) exp(Jr(w) dw)."""
    w = np.asarray(axis_angle, dtype=float)
    theta = np.linalg.norm(w)
    K = hat(w)
    if theta < 1e-5:
        t2 = theta * theta
        c1 = 0.5 - t2 / 24.0
        c2 = 1.0 / 6.0 - t2 / 120.0
    else:
        c1 = (1.0 - np.cos(theta)) / (theta * theta)
        c2 = (theta - np.sin(theta)) / (theta ** 3)
    return np.eye(3) - c1 * K + c2 * (K @ K)


def is_rotation(rot: np.ndarray, tol: float = 1e-9) -> bool:
    """Orthonormal with determinant +1, entrywise within tol."""
    return (
        np.max(np.abs(rot.T @ rot - np.eye(3))) < tol
        and abs(np.linalg.det(rot) - 1.0) < tol
    )


def rot_to_quat(rot: np.ndarray) -> np.ndarray:
    """Rotation matrix to unit quaternion (x, y, z, w), w >= 0."""
    t = np.trace(rot)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array(
            [
                (rot[2, 1] - rot[1, 2]) / s,
                (rot[0, 2] - rot[2, 0]) / s,
                (rot[1, 0] - rot[0, 1]) / s,
                0.25 * s,
            ]
        )
    else:
        k = int(np.argmax(np.diag(rot)))
        i, j = (k + 1) % 3, (k + 2) % 3
        s = np.sqrt(rot[k, k] - rot[i, i] - rot[j, j] + 1.0) * 2.0
        q = np.empty(4)
        q[k] = 0.25 * s
        q[i] = (rot[i, k] + rot[k, i]) / s
        q[j] = (rot[j, k] + rot[k, j]) / s
        q[3] = (rot[j, i] - rot[i, j]) / s
    if q[3] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def quat_to_rot(q: np.ndarray) -> np.ndarray:
    """Unit quaternion (x, y, z, w) to rotation matrix."""
    x, y, z, w = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


@dataclass
class NominalState:
    """Full estimator state: body pose/velocity, IMU biases, the four
    foot contact positions in the world frame, and the gravity vector."""

    rot: np.ndarray = field(default_factory=lambda: np.eye(3))
    pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    bias_acc: np.ndarray = field(default_factory=lambda: np.zeros(3))
    bias_gyro: np.ndarray = field(default_factory=lambda: np.zeros(3))
    feet: np.ndarray = field(default_factory=lambda: np.zeros((4, 3)))
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def copy(self) -> "NominalState":
        return NominalState(
            self.rot.copy(),
            self.pos.copy(),
            self.vel.copy(),
            self.bias_acc.copy(),
            self.bias_gyro.copy(),
            self.feet.copy(),
            self.gravity.copy(),
        )

    def is_finite(self) -> bool:
        return all(
            np.all(np.isfinite(a))
            for a in (
                self.rot,
                self.pos,
                self.vel,
                self.bias_acc,
                self.bias_gyro,
                self.feet,
                self.gravity,
            )
        )


def boxplus(x: NominalState, delta: np.ndarray) -> NominalState:
    """Retract a 30-dim tangent perturbation onto the state."""
    d = np.asarray(delta, dtype=float)
    if d.shape != (STATE_DIM,):
        raise ValueError(f"perturbation must have shape ({STATE_DIM},)")
    out = x.copy()
    out.rot = x.rot @ so3_exp(d[ROT])
    out.pos = x.pos + d[POS]
    out.vel = x.vel + d[VEL]
    out.bias_acc = x.bias_acc + d[BIAS_ACC]
    out.bias_gyro = x.bias_gyro + d[BIAS_GYRO]
    out.feet = x.feet + d[FEET].reshape(4, 3)
    out.gravity = x.gravity + d[GRAV]
    return out


def boxminus(x: NominalState, y: NominalState) -> np.ndarray:
    """Tangent difference such that boxminus(boxplus(y, d), y) == d."""
    d = np.empty(STATE_DIM)
    d[ROT] = so3_log(y.rot.T @ x.rot)
    d[POS] = x.pos - y.pos
    d[VEL] = x.vel - y.vel
    d[BIAS_ACC] = x.bias_acc - y.bias_acc
    d[BIAS_GYRO] = x.bias_gyro - y.bias_gyro
    d[FEET] = (x.feet - y.feet).reshape(-1)
    d[GRAV] = x.gravity - y.gravity
    return d
