"""Trajectory and map accuracy metrics plus stage timing summaries."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .elevmap import HeightGrid
from .manifold import so3_exp, so3_log

logger = logging.getLogger(__name__)


@dataclass
class Trajectory:
    """Time-ordered poses; timestamps strictly increasing."""

    t: np.ndarray            # (n,)
    pos: np.ndarray          # (n, 3)
    rot: np.ndarray          # (n, 3, 3)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.pos = np.asarray(self.pos, dtype=float).reshape(-1, 3)
        self.rot = np.asarray(self.rot, dtype=float).reshape(-1, 3, 3)
        if len(self.t) != len(self.pos) or len(self.t) != len(self.rot):
            raise ValueError("trajectory arrays disagree in length")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("timestamps must be strictly increasing")

    @classmethod
    def from_poses(cls, poses) -> "Trajectory":
        t = np.array([p[0] for p in poses])
        rot = np.array([p[1] for p in poses])
        pos = np.array([p[2] for p in poses])
        return cls(t, pos, rot)

    def sample(self, times: np.ndarray) -> "Trajectory":
        """Resample at the given times: positions by linear interpolation,
        rotations by geodesic interpolation between bracketing poses."""
        times = np.asarray(times, dtype=float)
        if np.any(times < self.t[0] - 1e-9) or np.any(times > self.t[-1] + 1e-9):
            raise ValueError("requested times outside the trajectory range")
        pos = np.column_stack(
            [np.interp(times, self.t, self.pos[:, k]) for k in range(3)]
        )
        idx = np.clip(np.searchsorted(self.t, times, side="right") - 1, 0, len(self.t) - 2)
        rot = np.empty((len(times), 3, 3))
        for i, (k, tq) in enumerate(zip(idx, times)):
            span = self.t[k + 1] - self.t[k]
            alpha = np.clip((tq - self.t[k]) / span, 0.0, 1.0)
            delta = so3_log(self.rot[k].T @ self.rot[k + 1])
            rot[i] = self.rot[k] @ so3_exp(alpha * delta)
        return Trajectory(times, pos, rot)


def _overlap_times(est: Trajectory, gt: Trajectory) -> np.ndarray:
    lo = max(est.t[0], gt.t[0])
    hi = min(est.t[-1], gt.t[-1])
    times = gt.t[(gt.t >= lo - 1e-9) & (gt.t <= hi + 1e-9)]
    if len(times) == 0:
        raise ValueError("trajectories do not overlap in time")
    return times


def rigid_align(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares rotation and translation mapping src onto dst."""
    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    H = (src - mu_s).T @ (dst - mu_d)
    U, _, Vt = np.linalg.svd(H)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(Vt.T @ U.T))])
    R = Vt.T @ D @ U.T
    t = mu_d - R @ mu_s
    return R, t


def ape(est: Trajectory, gt: Trajectory, align: bool = False) -> float:
    """Absolute pose error: RMSE of position differences over the overlap,
    optionally after closed-form rigid alignment of est onto gt."""
    times = _overlap_times(est, gt)
    pe = est.sample(times).pos
    pg = gt.sample(times).pos
    if align:
        R, t = rigid_align(pe, pg)
        pe = pe @ R.T + t
    err = np.linalg.norm(pe - pg, axis=1)
    return float(np.sqrt(np.mean(err ** 2)))


def rpe(est: Trajectory, gt: Trajectory, delta_s: float = 1.0) -> float:
    """Relative pose error: RMSE of the translation of the relative-motion
    discrepancy over all pairs delta_s apart."""
    if delta_s <= 0:
        raise ValueError("delta must be positive")
    times = _overlap_times(est, gt)
    keep = times[times + delta_s <= times[-1] + 1e-9]
    if len(keep) == 0:
        raise ValueError("trajectory shorter than the requested delta")
    e0 = est.sample(keep)
    e1 = est.sample(keep + delta_s)
    g0 = gt.sample(keep)
    g1 = gt.sample(keep + delta_s)
    errs = np.empty(len(keep))
    for i in range(len(keep)):
        # relative transforms in the respective start frames
        de = g0.rot[i].T @ (g1.pos[i] - g0.pos[i]) - e0.rot[i].T @ (e1.pos[i] - e0.pos[i])
        errs[i] = np.linalg.norm(de)
    return float(np.sqrt(np.mean(errs ** 2)))


def z_error_series(est: Trajectory, gt: Trajectory) -> tuple[np.ndarray, np.ndarray, float]:
    """(times, |z_est - z_gt|, mean absolute error) over the overlap."""
    times = _overlap_times(est, gt)
    ze = est.sample(times).pos[:, 2]
    zg = gt.sample(times).pos[:, 2]
    err = np.abs(ze - zg)
    return times, err, float(err.mean())


def map_rmse(hg: HeightGrid, terrain_height_fn) -> tuple[float, float]:
    """(RMSE over known columns, known-column fraction) against the true
    terrain; RMSE is NaN when nothing is known."""
    xs, ys = hg.column_centers()
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    truth = np.vectorize(terrain_height_fn)(gx, gy)
    coverage = float(hg.known.mean())
    if not hg.known.any():
        logger.warning("map RMSE undefined: no known columns")
        return float("nan"), 0.0
    err = hg.heights[hg.known] - truth[hg.known]
    return float(np.sqrt(np.mean(err ** 2))), coverage


def timing_report(stage_durations: dict) -> dict:
    """p50/p90/p99 per stage, in milliseconds; empty stages are omitted."""
    out = {}
    for stage, samples in stage_durations.items():
        samples = np.asarray(list(samples), dtype=float)
        if samples.size == 0:
            logger.warning("stage %r has no timing samples; omitted", stage)
            continue
        ms = samples * 1e3
        out[stage] = {
            "count": int(samples.size),
            "p50_ms": float(np.percentile(ms, 50)),
            "p90_ms": float(np.percentile(ms, 90)),
            "p99_ms": float(np.percentile(ms, 99)),
        }
    return out


@dataclass
class MetricsReport:
    ape_rmse_m: float = float("nan")
    rpe_rmse_m: float = float("nan")
    z_mae_m: float = float("nan")
    map_rmse_m: float = float("nan")
    map_coverage: float = 0.0
    timing: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def clean(v):
            if isinstance(v, float) and np.isnan(v):
                return None
            return v

        payload = {
            "ape_rmse_m": clean(self.ape_rmse_m),
            "rpe_rmse_m": clean(self.rpe_rmse_m),
            "z_mae_m": clean(self.z_mae_m),
            "map_rmse_m": clean(self.map_rmse_m),
            "map_coverage": self.map_coverage,
            "timing": self.timing,
        }
        return json.dumps(payload, indent=2, sort_keys=True)
