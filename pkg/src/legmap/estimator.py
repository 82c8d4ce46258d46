"""Contact-aware iterated error-state Kalman filter.

IMU samples drive forward propagation of a 30-dim state (pose, velocity,
IMU biases, four world-frame foot contact points, gravity).  Each LiDAR
frame then fuses point-to-plane residuals against an accumulated map and,
for feet in stance, no-slip velocity and relative-position residuals, in
one iterated MAP update.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError
from scipy.spatial import cKDTree

from . import manifold as mf
from .elevmap import sor_filter
from .errors import InitializationError, OrderingError
from .manifold import (
    BIAS_ACC,
    BIAS_GYRO,
    FEET,
    GRAV,
    NUM_FEET,
    POS,
    ROT,
    STATE_DIM,
    VEL,
    NominalState,
    boxminus,
    boxplus,
    foot_slice,
    hat,
    so3_exp,
    so3_right_jacobian,
)

logger = logging.getLogger(__name__)

NOISE_DIM = 24
N_GYRO = slice(0, 3)
N_ACC = slice(3, 6)
N_BIAS_ACC = slice(6, 9)
N_BIAS_GYRO = slice(9, 12)
N_FEET = slice(12, 24)

MAX_IMU_DT = 0.1
GRAVITY_NORM_TOL = 0.05  # relative drift of |g| that triggers a warning


@dataclass
class ImuSample:
    t: float
    gyro: np.ndarray   # rad/s, body frame
    accel: np.ndarray  # m/s^2, specific force in body frame


@dataclass
class FootMeasurement:
    """Leg-kinematic output for all four feet at one timestamp.

    ``rel_pos[i]`` is the body-frame vector rot^T (pos - foot_i); ``rel_vel``
    is its velocity counterpart, chosen so the stance velocity residual
    vanishes for a non-slipping foot.
    """

    t: float
    rel_pos: np.ndarray            # (4, 3)
    rel_vel: np.ndarray            # (4, 3)
    contact: np.ndarray            # (4,) bool

    def __post_init__(self):
        self.rel_pos = np.asarray(self.rel_pos, dtype=float).reshape(NUM_FEET, 3)
        self.rel_vel = np.asarray(self.rel_vel, dtype=float).reshape(NUM_FEET, 3)
        self.contact = np.asarray(self.contact, dtype=bool).reshape(NUM_FEET)
        if not np.all(np.isfinite(self.rel_pos)):
            raise ValueError("foot measurement contains non-finite positions")


@dataclass
class PlaneTarget:
    normal: np.ndarray
    anchor: np.ndarray
    valid: bool


@dataclass
class Extrinsics:
    """LiDAR-to-body transform."""

    rot: np.ndarray = field(default_factory=lambda: np.eye(3))
    trans: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class NoiseConfig:
    """Continuous-time noise densities and measurement variances."""

    sigma_gyro: float = 1e-3          # rad/s/sqrt(Hz)
    sigma_accel: float = 1e-2         # m/s^2/sqrt(Hz)
    sigma_bias_gyro: float = 1e-5     # rad/s^2/sqrt(Hz)
    sigma_bias_accel: float = 1e-4    # m/s^3/sqrt(Hz)
    sigma_foot_stance: float = 1e-4   # m/sqrt(s)
    sigma_foot_swing: float = 1.0     # m/sqrt(s)
    lidar_point_var: float = 0.02 ** 2   # m^2 per point
    kin_vel_var: float = 0.05 ** 2       # (m/s)^2, isotropic
    kin_pos_var: float = 0.01 ** 2       # m^2, isotropic

    def __post_init__(self):
        vals = [
            self.sigma_gyro, self.sigma_accel, self.sigma_bias_gyro,
            self.sigma_bias_accel, self.sigma_foot_stance, self.sigma_foot_swing,
            self.lidar_point_var, self.kin_vel_var, self.kin_pos_var,
        ]
        if any(v <= 0 for v in vals):
            raise ValueError("all noise parameters must be positive")
        if self.sigma_foot_swing / self.sigma_foot_stance < 100.0:
            raise ValueError("swing foot noise must dominate stance noise (>= 100x)")


@dataclass
class GravityInit:
    gravity: np.ndarray
    gyro_bias: np.ndarray
    norm_ok: bool


def init_gravity(
    samples,
    min_samples: int = 50,
    gyro_std_limit: float = 0.05,
    accel_std_limit: float = 0.5,
) -> GravityInit:
    """Estimate gravity and gyro bias from stationary IMU data.

    With the initial body frame taken as the world frame, gravity is the
    negated mean specific force and the gyro bias the mean angular rate.
    Raises when too few samples were collected or the stream shows motion.
    """
    samples = list(samples)
    if len(samples) < min_samples:
        raise InitializationError(
            f"need at least {min_samples} stationary samples, got {len(samples)}"
        )
    acc = np.array([s.accel for s in samples], dtype=float)
    gyr = np.array([s.gyro for s in samples], dtype=float)
    if np.max(gyr.std(axis=0)) > gyro_std_limit or np.max(acc.std(axis=0)) > accel_std_limit:
        raise InitializationError("IMU stream shows motion; keep the robot still")
    gravity = -acc.mean(axis=0)
    gyro_bias = gyr.mean(axis=0)
    norm_ok = abs(np.linalg.norm(gravity) - 9.81) <= 0.02 * 9.81
    if not norm_ok:
        logger.warning(
            "initialized gravity norm %.3f deviates more than 2%% from 9.81",
            np.linalg.norm(gravity),
        )
    return GravityInit(gravity, gyro_bias, norm_ok)


def discrete_step(
    x: NominalState, u: ImuSample, dt: float, noise: np.ndarray | None = None
) -> NominalState:
    """One propagation step; ``noise`` is the 24-dim discrete noise vector
    (zero when omitted).  Exposed so the noise Jacobian can be probed."""
    w = np.zeros(NOISE_DIM) if noise is None else np.asarray(noise, dtype=float)
    out = x.copy()
    psi = (u.gyro - x.bias_gyro) * dt - w[N_GYRO]
    out.rot = x.rot @ so3_exp(psi)
    out.pos = x.pos + x.vel * dt
    out.vel = x.vel + (x.rot @ (u.accel - x.bias_acc) + x.gravity) * dt - x.rot @ w[N_ACC]
    out.bias_acc = x.bias_acc + w[N_BIAS_ACC]
    out.bias_gyro = x.bias_gyro + w[N_BIAS_GYRO]
    out.feet = x.feet + w[N_FEET].reshape(4, 3)
    # gravity carries no dynamics; it moves only through measurement updates
    return out


def propagation_jacobians(
    x: NominalState, u: ImuSample, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """Error-state transition F (30x30) and noise Jacobian G (30x24) of the
    discrete step, linearized at the current state."""
    psi = (u.gyro - x.bias_gyro) * dt
    Jr = so3_right_jacobian(psi)
    F = np.eye(STATE_DIM)
    F[ROT, ROT] = so3_exp(psi).T
    F[ROT, BIAS_GYRO] = -Jr * dt
    F[POS, VEL] = np.eye(3) * dt
    F[VEL, ROT] = -x.rot @ hat(u.accel - x.bias_acc) * dt
    F[VEL, BIAS_ACC] = -x.rot * dt
    F[VEL, GRAV] = np.eye(3) * dt
    G = np.zeros((STATE_DIM, NOISE_DIM))
    G[ROT, N_GYRO] = -Jr
    G[VEL, N_ACC] = -x.rot
    G[BIAS_ACC, N_BIAS_ACC] = np.eye(3)
    G[BIAS_GYRO, N_BIAS_GYRO] = np.eye(3)
    G[FEET, N_FEET] = np.eye(12)
    return F, G


def process_noise(nc: NoiseConfig, dt: float, contacts) -> np.ndarray:
    """Discrete covariance of the 24-dim noise vector; swing feet draw the
    large foot process noise, stance feet the small one."""
    q = np.empty(NOISE_DIM)
    q[N_GYRO] = nc.sigma_gyro ** 2 * dt
    q[N_ACC] = nc.sigma_accel ** 2 * dt
    q[N_BIAS_ACC] = nc.sigma_bias_accel ** 2 * dt
    q[N_BIAS_GYRO] = nc.sigma_bias_gyro ** 2 * dt
    for i in range(NUM_FEET):
        sig = nc.sigma_foot_stance if contacts[i] else nc.sigma_foot_swing
        q[12 + 3 * i : 15 + 3 * i] = sig ** 2 * dt
    return np.diag(q)


def propagate(
    x: NominalState,
    P: np.ndarray,
    u: ImuSample,
    dt: float,
    contacts,
    nc: NoiseConfig,
) -> tuple[NominalState, np.ndarray]:
    """IMU forward propagation of state and covariance."""
    if not (0.0 < dt <= MAX_IMU_DT):
        raise ValueError(f"dt must lie in (0, {MAX_IMU_DT}], got {dt}")
    if not x.is_finite():
        raise ValueError("state contains non-finite values")
    x_next = discrete_step(x, u, dt)
    F, G = propagation_jacobians(x, u, dt)
    Q = process_noise(nc, dt, contacts)
    P_next = F @ P @ F.T + G @ Q @ G.T
    P_next = 0.5 * (P_next + P_next.T)
    return x_next, P_next


@dataclass
class PlaneParams:
    neighbors: int = 5
    planarity_tol_m: float = 0.05
    search_radius_m: float = 1.0
    min_map_points: int = 100


def fit_plane(neighbors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares plane through points: (unit normal, centroid)."""
    centroid = neighbors.mean(axis=0)
    centered = neighbors - centroid
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    normal = vt[-1]
    return normal / np.linalg.norm(normal), centroid


class PlaneMap:
    """World-frame registration map: voxel-deduplicated points with a
    KD-tree rebuilt on demand for neighbor queries."""

    def __init__(self, voxel_m: float = 0.1):
        self.voxel = float(voxel_m)
        self._cells: dict[tuple, np.ndarray] = {}
        self._tree: cKDTree | None = None
        self._pts: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self._cells)

    def add_points(self, points: np.ndarray) -> None:
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        keys = np.floor(pts / self.voxel).astype(np.int64)
        for k, p in zip(map(tuple, keys), pts):
            if k not in self._cells:  # first point per voxel wins
                self._cells[k] = p
        self._tree = None

    def _ensure_tree(self):
        if self._tree is None and self._cells:
            self._pts = np.array(list(self._cells.values()))
            self._tree = cKDTree(self._pts)

    def find_plane(self, query: np.ndarray, params: PlaneParams) -> PlaneTarget:
        """Plane fit to the k nearest map points around the query; invalid
        when neighbors are missing, too far, or not coplanar enough."""
        self._ensure_tree()
        invalid = PlaneTarget(np.zeros(3), np.zeros(3), False)
        if self._tree is None or len(self._cells) < params.neighbors:
            return invalid
        dist, idx = self._tree.query(np.asarray(query, dtype=float), k=params.neighbors)
        dist = np.atleast_1d(dist)
        idx = np.atleast_1d(idx)
        if dist[-1] > params.search_radius_m:
            return invalid
        neigh = self._pts[idx]
        normal, anchor = fit_plane(neigh)
        if np.max(np.abs((neigh - anchor) @ normal)) >= params.planarity_tol_m:
            return invalid
        return PlaneTarget(normal, anchor, True)

    def find_planes(self, queries: np.ndarray, params: PlaneParams) -> list[PlaneTarget]:
        return [self.find_plane(q, params) for q in np.asarray(queries, dtype=float)]


def lidar_residual(
    x: NominalState, ext: Extrinsics, point_lidar: np.ndarray, plane: PlaneTarget
) -> tuple[float, np.ndarray] | None:
    """Point-to-plane residual and its 1x30 Jacobian row; None when the
    plane target is invalid and the point should be skipped."""
    if not plane.valid:
        return None
    r = ext.rot @ np.asarray(point_lidar, dtype=float) + ext.trans  # body frame
    world = x.rot @ r + x.pos
    h = float(plane.normal @ (world - plane.anchor))
    H = np.zeros(STATE_DIM)
    H[ROT] = -np.cross(x.rot.T @ plane.normal, r)
    H[POS] = plane.normal
    return h, H


def lidar_residual_rows(
    x: NominalState, ext: Extrinsics, points_lidar: np.ndarray, planes
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized residual stack over valid plane targets."""
    valid = [i for i, pl in enumerate(planes) if pl.valid]
    if not valid:
        return np.zeros(0), np.zeros((0, STATE_DIM))
    pts = np.asarray(points_lidar, dtype=float)[valid]
    normals = np.array([planes[i].normal for i in valid])
    anchors = np.array([planes[i].anchor for i in valid])
    r = pts @ ext.rot.T + ext.trans
    world = r @ x.rot.T + x.pos
    h = np.sum(normals * (world - anchors), axis=1)
    H = np.zeros((len(valid), STATE_DIM))
    H[:, ROT] = -np.cross(normals @ x.rot, r)
    H[:, POS] = normals
    return h, H


def kinematic_residuals(
    x: NominalState, fm: FootMeasurement, gyro: np.ndarray
) -> list[tuple[int, np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Per contact foot: (index, h_cv, H_cv, h_cp, H_cp).

    h_cv is the world-frame slip velocity implied by the no-slip model;
    h_cp compares the measured body-frame relative position against the
    one predicted from the state.
    """
    out = []
    omega = np.asarray(gyro, dtype=float) - x.bias_gyro
    for i in range(NUM_FEET):
        if not fm.contact[i]:
            continue
        p_rel = fm.rel_pos[i]
        v_rel = fm.rel_vel[i]
        w = v_rel + np.cross(omega, p_rel)
        h_cv = x.vel + x.rot @ w
        H_cv = np.zeros((3, STATE_DIM))
        H_cv[:, ROT] = -x.rot @ hat(w)
        H_cv[:, VEL] = np.eye(3)
        H_cv[:, BIAS_GYRO] = x.rot @ hat(p_rel)
        d = x.pos - x.feet[i]
        pred_rel = x.rot.T @ d
        h_cp = p_rel - pred_rel
        H_cp = np.zeros((3, STATE_DIM))
        H_cp[:, ROT] = -hat(pred_rel)
        H_cp[:, POS] = -x.rot.T
        H_cp[:, foot_slice(i)] = x.rot.T
        out.append((i, h_cv, H_cv, h_cp, H_cp))
    return out


@dataclass
class UpdateInfo:
    iterations: int = 0
    rows: int = 0
    skipped: bool = False


def iekf_update(
    x_bar: NominalState,
    P_bar: np.ndarray,
    residuals,
    max_iterations: int = 5,
    convergence_tol: float = 1e-6,
) -> tuple[NominalState, np.ndarray, UpdateInfo]:
    """Iterated MAP update.

    ``residuals`` is either a static list of (h, H, var_diag) blocks, taken
    as a linear measurement model at ``x_bar``, or a callable mapping a
    candidate state to such blocks, in which case the linearization point
    is re-evaluated each Gauss-Newton iteration.  On a numerically singular
    system the propagated state is returned unchanged and the event logged.
    """
    builder = residuals if callable(residuals) else None
    static_blocks = None if builder else list(residuals)
    if static_blocks is not None and not static_blocks:
        raise ValueError("need at least one residual block")

    try:
        P_chol = cho_factor(P_bar)
    except LinAlgError:
        logger.warning("prior covariance not positive definite; update skipped")
        return x_bar, P_bar, UpdateInfo(skipped=True)
    P_inv = cho_solve(P_chol, np.eye(STATE_DIM))

    info = UpdateInfo()
    u = np.zeros(STATE_DIM)
    A_chol = None
    for it in range(max_iterations):
        x_k = boxplus(x_bar, u)
        blocks = builder(x_k) if builder else static_blocks
        if not blocks:
            raise ValueError("need at least one residual block")
        h = np.concatenate([np.atleast_1d(b[0]) for b in blocks])
        H = np.vstack([np.atleast_2d(b[1]) for b in blocks])
        var = np.concatenate(
            [np.broadcast_to(b[2], np.atleast_1d(b[0]).shape) for b in blocks]
        )
        info.rows = len(h)
        Hw = H / var[:, None]
        A = P_inv + H.T @ Hw
        # for a static stack the model is linear in u: h(u) = h0 + H u
        rhs = Hw.T @ (H @ u - h) if builder else Hw.T @ (-h)
        try:
            A_chol = cho_factor(0.5 * (A + A.T))
        except LinAlgError:
            logger.warning("innovation information singular; update skipped")
            return x_bar, P_bar, UpdateInfo(iterations=it, skipped=True)
        u_new = cho_solve(A_chol, rhs)
        step = np.linalg.norm(u_new - u)
        u = u_new
        info.iterations = it + 1
        if step < convergence_tol or not builder:
            break

    x_post = boxplus(x_bar, u)
    P_post = cho_solve(A_chol, np.eye(STATE_DIM))
    P_post = 0.5 * (P_post + P_post.T)
    return x_post, P_post, info


def default_initial_covariance() -> np.ndarray:
    P = np.zeros(STATE_DIM)
    P[ROT] = 1e-4
    P[POS] = 1e-6
    P[VEL] = 1e-4
    P[BIAS_ACC] = 1e-4
    P[BIAS_GYRO] = 1e-6
    P[FEET] = 1e-2
    P[GRAV] = 1e-6
    return np.diag(P)


@dataclass
class FrameResult:
    t: float
    rot: np.ndarray
    pos: np.ndarray
    incr_rot: np.ndarray
    incr_trans: np.ndarray
    n_lidar_rows: int
    n_kin_rows: int
    iterations: int
    timings: dict


@dataclass
class SorParams:
    neighbors: int = 10
    sigma_mult: float = 1.0


class EstimatorPipeline:
    """Frame-by-frame odometry: consume IMU up to each scan, fuse LiDAR and
    kinematic residuals, emit the updated pose and its body-frame increment."""

    def __init__(
        self,
        noise: NoiseConfig,
        extrinsics: Extrinsics,
        init_state: NominalState,
        init_cov: np.ndarray | None = None,
        plane_params: PlaneParams | None = None,
        sor_params: SorParams | None = None,
        use_kinematics: bool = True,
        use_sor: bool = True,
        map_voxel_m: float = 0.1,
        max_scan_points: int | None = None,
    ):
        self.noise = noise
        self.ext = extrinsics
        self.x = init_state.copy()
        self.P = default_initial_covariance() if init_cov is None else init_cov.copy()
        self.plane_params = plane_params or PlaneParams()
        self.sor_params = sor_params or SorParams()
        self.use_kinematics = use_kinematics
        self.use_sor = use_sor
        self.map = PlaneMap(map_voxel_m)
        self.max_scan_points = max_scan_points
        self.gravity_ref_norm = float(np.linalg.norm(self.x.gravity))
        self._contacts = np.ones(NUM_FEET, dtype=bool)
        self._feet_initialized = False
        self._last_imu_t: float | None = None
        self._last_scan_t: float | None = None
        self._last_gyro = np.zeros(3)
        self._last_accel = -self.x.gravity.copy()
        self._prev_rot = self.x.rot.copy()
        self._prev_pos = self.x.pos.copy()

    def _absorb_foot_measurement(self, fm: FootMeasurement) -> None:
        self._contacts = fm.contact.copy()
        if not self._feet_initialized:
            for i in range(NUM_FEET):
                self.x.feet[i] = self.x.pos - self.x.rot @ fm.rel_pos[i]
            self._feet_initialized = True

    def _propagate_to(self, imu_samples) -> None:
        for u in imu_samples:
            if self._last_imu_t is not None:
                dt = u.t - self._last_imu_t
                if dt < -1e-9:
                    raise OrderingError(f"IMU sample at t={u.t} not after previous")
                if dt > 1e-9:
                    self.x, self.P = propagate(
                        self.x, self.P, u, min(dt, MAX_IMU_DT), self._contacts, self.noise
                    )
            self._last_imu_t = max(u.t, self._last_imu_t or u.t)
            self._last_gyro = np.asarray(u.gyro, dtype=float)
            self._last_accel = np.asarray(u.accel, dtype=float)

    def _propagate_sliver_to(self, t: float) -> None:
        """Bridge the remainder to the frame time by holding the last IMU
        reading, so updates never fuse against a stale state."""
        if self._last_imu_t is None:
            self._last_imu_t = t
            return
        dt = t - self._last_imu_t
        if dt > 1e-9:
            hold = ImuSample(t=t, gyro=self._last_gyro, accel=self._last_accel)
            self.x, self.P = propagate(
                self.x, self.P, hold, min(dt, MAX_IMU_DT), self._contacts, self.noise
            )
            self._last_imu_t = t

    def process_frame(
        self,
        scan_t: float,
        scan_points: np.ndarray,
        imu_samples,
        foot_measurements,
    ) -> FrameResult:
        if self._last_scan_t is not None and scan_t < self._last_scan_t:
            raise OrderingError(f"scan at t={scan_t} precedes previous frame")
        timings = {}

        # interleave IMU propagation with contact-flag updates, time ordered
        t0 = time.perf_counter()
        imu = sorted(imu_samples, key=lambda s: s.t)
        feet = sorted(foot_measurements, key=lambda f: f.t)
        fi = 0
        for u in imu:
            while fi < len(feet) and feet[fi].t <= u.t:
                self._absorb_foot_measurement(feet[fi])
                fi += 1
            self._propagate_to([u])
        while fi < len(feet) and feet[fi].t <= scan_t:
            self._absorb_foot_measurement(feet[fi])
            fi += 1
        self._propagate_sliver_to(scan_t)
        # residuals use whichever foot measurement lies closest to the scan
        latest_fm = min(feet, key=lambda f: abs(f.t - scan_t)) if feet else None
        timings["propagate"] = time.perf_counter() - t0

        # residual construction
        t0 = time.perf_counter()
        pts = np.asarray(scan_points, dtype=float).reshape(-1, 3)
        if self.use_sor and len(pts):
            pts = sor_filter(pts, self.sor_params.neighbors, self.sor_params.sigma_mult)
        if self.max_scan_points is not None and len(pts) > self.max_scan_points:
            stride = int(np.ceil(len(pts) / self.max_scan_points))
            pts = pts[::stride]
        planes = None
        if len(self.map) >= self.plane_params.min_map_points and len(pts):
            world = (pts @ self.ext.rot.T + self.ext.trans) @ self.x.rot.T + self.x.pos
            planes = self.map.find_planes(world, self.plane_params)
        kin_fm = latest_fm if (self.use_kinematics and latest_fm is not None) else None
        timings["residuals"] = time.perf_counter() - t0

        def build(x_k: NominalState):
            blocks = []
            if planes is not None:
                h, H = lidar_residual_rows(x_k, self.ext, pts, planes)
                if len(h):
                    blocks.append((h, H, self.noise.lidar_point_var))
            if kin_fm is not None:
                for _, h_cv, H_cv, h_cp, H_cp in kinematic_residuals(
                    x_k, kin_fm, self._last_gyro
                ):
                    blocks.append((h_cv, H_cv, self.noise.kin_vel_var))
                    blocks.append((h_cp, H_cp, self.noise.kin_pos_var))
            return blocks

        t0 = time.perf_counter()
        n_lidar = n_kin = 0
        iterations = 0
        if build(self.x):
            self.x, self.P, info = iekf_update(self.x, self.P, build)
            iterations = info.iterations
            if planes is not None:
                n_lidar = sum(1 for pl in planes if pl.valid)
            if kin_fm is not None:
                n_kin = 6 * int(np.sum(kin_fm.contact))
            g_norm = np.linalg.norm(self.x.gravity)
            if abs(g_norm - self.gravity_ref_norm) > GRAVITY_NORM_TOL * self.gravity_ref_norm:
                logger.warning(
                    "gravity norm drifted to %.3f (initialized %.3f)",
                    g_norm,
                    self.gravity_ref_norm,
                )
        timings["update"] = time.perf_counter() - t0

        # map insertion with the updated pose
        if len(pts):
            world = (pts @ self.ext.rot.T + self.ext.trans) @ self.x.rot.T + self.x.pos
            self.map.add_points(world)

        incr_rot = self._prev_rot.T @ self.x.rot
        incr_trans = self._prev_rot.T @ (self.x.pos - self._prev_pos)
        self._prev_rot = self.x.rot.copy()
        self._prev_pos = self.x.pos.copy()
        self._last_scan_t = scan_t
        return FrameResult(
            t=scan_t,
            rot=self.x.rot.copy(),
            pos=self.x.pos.copy(),
            incr_rot=incr_rot,
            incr_trans=incr_trans,
            n_lidar_rows=n_lidar,
            n_kin_rows=n_kin,
            iterations=iterations,
            timings=timings,
        )
