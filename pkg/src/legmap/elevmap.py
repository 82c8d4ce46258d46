"""Robot-centric occupancy voxel map and the elevation products derived
from it.

The local map is a fixed-size window that follows the body.  Cells are
keyed by their global integer index; storage is a toroidal ring buffer
where the slot of a cell is the non-negative remainder of its global
index by the per-axis cell counts.  Within any window the slot-to-cell
mapping is a bijection, so sliding the window never moves stored data:
cells that leave the window are invalidated in place and their slots are
reused by the cells entering on the far side.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

logger = logging.getLogger(__name__)


@dataclass
class OccupancyParams:
    p_hit: float = 0.7
    p_miss: float = 0.4
    logodds_min: float = -2.0   # T_low
    logodds_max: float = 3.5    # T_high
    occupied_threshold: float = 0.85

    def __post_init__(self):
        if not (0.0 < self.p_miss < 0.5 < self.p_hit < 1.0):
            raise ValueError("need p_hit > 0.5 > p_miss inside (0, 1)")
        if not (self.logodds_min < 0.0 < self.occupied_threshold <= self.logodds_max):
            raise ValueError("need T_low < 0 < occupied threshold <= T_high")

    @property
    def logodds_hit(self) -> float:
        return float(np.log(self.p_hit / (1.0 - self.p_hit)))

    @property
    def logodds_miss(self) -> float:
        return float(np.log(self.p_miss / (1.0 - self.p_miss)))


class VoxelGrid:
    """Body-centered occupancy window with per-cell log-odds.

    ``shape`` counts cells per axis, ``lo`` is the global index of the
    window's lower corner.  ``logodds``, ``valid`` and ``stamp`` are flat
    arrays indexed by ring-buffer slot.
    """

    def __init__(self, window_m, resolution_m: float, center=(0.0, 0.0, 0.0)):
        self.res = float(resolution_m)
        self.shape = np.maximum(
            np.rint(np.asarray(window_m, dtype=float) / self.res).astype(np.int64), 1
        )
        self.ncells = int(np.prod(self.shape))
        self.pose_rot = np.eye(3)
        self.pose_pos = np.asarray(center, dtype=float).copy()
        self.lo = self._anchor() - self.shape // 2
        self.logodds = np.zeros(self.ncells)
        self.valid = np.zeros(self.ncells, dtype=bool)
        self.stamp = np.zeros(self.ncells, dtype=np.int64)
        self.frame = 0
        # per-slot coordinate grids, reused by slide/extract
        sx, sy, sz = np.meshgrid(
            np.arange(self.shape[0]),
            np.arange(self.shape[1]),
            np.arange(self.shape[2]),
            indexing="ij",
        )
        self._slot_x = sx.ravel()
        self._slot_y = sy.ravel()
        self._slot_z = sz.ravel()

    def _anchor(self) -> np.ndarray:
        return np.floor(self.pose_pos / self.res).astype(np.int64)

    @property
    def hi(self) -> np.ndarray:
        return self.lo + self.shape

    def slot_of(self, g: np.ndarray) -> np.ndarray:
        """Flat ring-buffer slot of global indices, shape (..., 3) -> (...)."""
        g = np.asarray(g)
        return (
            (g[..., 0] % self.shape[0]) * self.shape[1] + g[..., 1] % self.shape[1]
        ) * self.shape[2] + g[..., 2] % self.shape[2]

    def global_of_slots(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Global index per slot under the current window."""
        gx = self.lo[0] + (self._slot_x - self.lo[0]) % self.shape[0]
        gy = self.lo[1] + (self._slot_y - self.lo[1]) % self.shape[1]
        gz = self.lo[2] + (self._slot_z - self.lo[2]) % self.shape[2]
        return gx, gy, gz

    def contains(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g)
        return np.all((g >= self.lo) & (g < self.hi), axis=-1)

    def get_logodds(self, g) -> float:
        """Log-odds of the cell at a global index, 0.0 when not stored."""
        g = np.asarray(g, dtype=np.int64)
        if not self.contains(g):
            return 0.0
        s = int(self.slot_of(g))
        return float(self.logodds[s]) if self.valid[s] else 0.0

    def stored_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """(global indices (n,3), log-odds (n,)) of all stored cells,
        ordered by global index for reproducible dumps."""
        gx, gy, gz = self.global_of_slots()
        m = self.valid
        cells = np.column_stack([gx[m], gy[m], gz[m]])
        vals = self.logodds[m]
        order = np.lexsort((cells[:, 2], cells[:, 1], cells[:, 0]))
        return cells[order], vals[order]


def slide(grid: VoxelGrid, incr_rot: np.ndarray, incr_trans: np.ndarray) -> VoxelGrid:
    """Advance the window by a body-frame incremental transform.

    Cells whose global index leaves the recentered window are reset
    (log-odds 0, stamp cleared); surviving cells keep their contents in
    place.  Returns the same grid, mutated.
    """
    if not (np.all(np.isfinite(incr_rot)) and np.all(np.isfinite(incr_trans))):
        raise ValueError("incremental transform must be finite")
    grid.pose_pos = grid.pose_pos + grid.pose_rot @ np.asarray(incr_trans, dtype=float)
    grid.pose_rot = grid.pose_rot @ np.asarray(incr_rot, dtype=float)
    new_lo = grid._anchor() - grid.shape // 2
    if np.array_equal(new_lo, grid.lo):
        return grid
    gx, gy, gz = grid.global_of_slots()
    new_hi = new_lo + grid.shape
    keep = (
        (gx >= new_lo[0]) & (gx < new_hi[0])
        & (gy >= new_lo[1]) & (gy < new_hi[1])
        & (gz >= new_lo[2]) & (gz < new_hi[2])
    )
    drop = grid.valid & ~keep
    grid.logodds[drop] = 0.0
    grid.valid[drop] = False
    grid.stamp[drop] = 0
    grid.lo = new_lo
    return grid


@njit(cache=True)
def _raycast_counts(points, origin, res, lo, hi, shape, n_hit, n_miss):
    """Walk each ray origin->point through the voxel lattice, accumulating
    per-slot hit/miss counts.  Ties on boundary crossings step x, then y,
    then z; rays stop where they leave the [lo, hi) index window."""
    n0, n1, n2 = shape[0], shape[1], shape[2]
    lo0, lo1, lo2 = lo[0], lo[1], lo[2]
    hi0, hi1, hi2 = hi[0], hi[1], hi[2]
    ox, oy, oz = origin[0], origin[1], origin[2]
    cx0 = int(np.floor(ox / res))
    cy0 = int(np.floor(oy / res))
    cz0 = int(np.floor(oz / res))
    mx0, my0, mz0 = cx0 % n0, cy0 % n1, cz0 % n2
    for i in range(points.shape[0]):
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        dx, dy, dz = px - ox, py - oy, pz - oz
        cx, cy, cz = cx0, cy0, cz0
        mx, my, mz = mx0, my0, mz0
        ex = int(np.floor(px / res))
        ey = int(np.floor(py / res))
        ez = int(np.floor(pz / res))
        sx = 1 if dx > 0.0 else (-1 if dx < 0.0 else 0)
        sy = 1 if dy > 0.0 else (-1 if dy < 0.0 else 0)
        sz = 1 if dz > 0.0 else (-1 if dz < 0.0 else 0)
        if dx != 0.0:
            tx = ((cx + (1 if sx > 0 else 0)) * res - ox) / dx
            dtx = res / abs(dx)
        else:
            tx, dtx = np.inf, np.inf
        if dy != 0.0:
            ty = ((cy + (1 if sy > 0 else 0)) * res - oy) / dy
            dty = res / abs(dy)
        else:
            ty, dty = np.inf, np.inf
        if dz != 0.0:
            tz = ((cz + (1 if sz > 0 else 0)) * res - oz) / dz
            dtz = res / abs(dz)
        else:
            tz, dtz = np.inf, np.inf
        budget = abs(ex - cx) + abs(ey - cy) + abs(ez - cz) + 3
        while True:
            if cx == ex and cy == ey and cz == ez:
                n_hit[(mx * n1 + my) * n2 + mz] += 1
                break
            n_miss[(mx * n1 + my) * n2 + mz] += 1
            if tx <= ty and tx <= tz:
                cx += sx
                tx += dtx
                mx += sx
                if mx >= n0:
                    mx = 0
                elif mx < 0:
                    mx = n0 - 1
            elif ty <= tz:
                cy += sy
                ty += dty
                my += sy
                if my >= n1:
                    my = 0
                elif my < 0:
                    my = n1 - 1
            else:
                cz += sz
                tz += dtz
                mz += sz
                if mz >= n2:
                    mz = 0
                elif mz < 0:
                    mz = n2 - 1
            budget -= 1
            if (
                budget <= 0
                or cx < lo0 or cx >= hi0
                or cy < lo1 or cy >= hi1
                or cz < lo2 or cz >= hi2
            ):
                break


def integrate_scan(
    grid: VoxelGrid, points: np.ndarray, origin: np.ndarray, op: OccupancyParams
) -> VoxelGrid:
    """Ray-cast a scan into the grid and apply the log-odds update.

    Every cell traversed by a ray from ``origin`` to a point collects a
    miss count, the terminal cell a hit count; each touched cell is then
    updated once with n_hit*log(p_hit/(1-p_hit)) + n_miss*log(p_miss/(1-p_miss))
    and clamped to the log-odds bounds.  Cells outside the window are
    ignored, and rays stop where they exit it.
    """
    points = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 3))
    origin = np.asarray(origin, dtype=float)
    o_cell = np.floor(origin / grid.res).astype(np.int64)
    if not grid.contains(o_cell):
        raise ValueError("scan origin lies outside the map window")
    grid.frame += 1
    if len(points) == 0:
        return grid

    n_hit = np.zeros(grid.ncells, dtype=np.int64)
    n_miss = np.zeros(grid.ncells, dtype=np.int64)
    _raycast_counts(
        points, origin, grid.res, grid.lo, grid.hi, grid.shape, n_hit, n_miss
    )
    touched = (n_hit > 0) | (n_miss > 0)
    if np.any(touched):
        delta = n_hit[touched] * op.logodds_hit + n_miss[touched] * op.logodds_miss
        grid.logodds[touched] = np.clip(
            grid.logodds[touched] + delta, op.logodds_min, op.logodds_max
        )
        grid.valid[touched] = True
        grid.stamp[touched] = grid.frame
    return grid


def sor_filter(points: np.ndarray, k: int = 10, sigma_mult: float = 1.0) -> np.ndarray:
    """Statistical outlier removal.

    Drops points whose mean distance to their k nearest neighbors exceeds
    the global mean of those distances plus sigma_mult standard deviations.
    Survivor order is preserved; inputs with at most k points are returned
    unchanged.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(points) < k + 1:
        return points
    dists, _ = cKDTree(points).query(points, k=k + 1)
    mean_d = dists[:, 1:].mean(axis=1)
    thresh = mean_d.mean() + sigma_mult * mean_d.std()
    return points[mean_d <= thresh]


@dataclass
class HeightGrid:
    """2D elevation raster over the map footprint, world-axis ordered.

    ``heights[i, j]`` is the elevation of the column with global indices
    (origin_ix + i, origin_iy + j); unknown columns carry ``known`` False
    and a height of 0.
    """

    heights: np.ndarray
    known: np.ndarray
    origin_ix: int
    origin_iy: int
    res: float

    def copy(self) -> "HeightGrid":
        return HeightGrid(
            self.heights.copy(), self.known.copy(), self.origin_ix, self.origin_iy, self.res
        )

    def column_centers(self) -> tuple[np.ndarray, np.ndarray]:
        nx, ny = self.heights.shape
        xs = (self.origin_ix + np.arange(nx) + 0.5) * self.res
        ys = (self.origin_iy + np.arange(ny) + 0.5) * self.res
        return xs, ys


def extract_heights(grid: VoxelGrid, op: OccupancyParams) -> HeightGrid:
    """Per column, the top-face elevation of the highest occupied voxel."""
    nx, ny, nz = grid.shape
    occ = (grid.valid & (grid.logodds >= op.occupied_threshold)).reshape(nx, ny, nz)
    # roll each axis so array order equals ascending world index
    occ = np.roll(
        occ,
        (-int(grid.lo[0] % nx), -int(grid.lo[1] % ny), -int(grid.lo[2] % nz)),
        axis=(0, 1, 2),
    )
    known = occ.any(axis=2)
    top = nz - 1 - np.argmax(occ[:, :, ::-1], axis=2)  # highest occupied z offset
    heights = np.where(known, (grid.lo[2] + top + 1) * grid.res, 0.0)
    return HeightGrid(
        heights=heights,
        known=known,
        origin_ix=int(grid.lo[0]),
        origin_iy=int(grid.lo[1]),
        res=grid.res,
    )


_ray_cache: dict = {}


def _ray_partition(nx: int, ny: int, oi: int, oj: int):
    """Partition raster cells (except the origin cell) into disjoint angular
    rays rooted at the origin column, each sorted by distance from it."""
    key = (nx, ny, oi, oj)
    hit = _ray_cache.get(key)
    if hit is not None:
        return hit
    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    dx = (ii - oi).ravel()
    dy = (jj - oj).ravel()
    flat = np.arange(nx * ny)
    off_origin = (dx != 0) | (dy != 0)
    dx, dy, flat = dx[off_origin], dy[off_origin], flat[off_origin]
    nbuckets = max(2 * (nx + ny) - 4, 8)
    width = 2.0 * np.pi / nbuckets
    bucket = np.rint(np.arctan2(dy, dx) / width).astype(np.int64) % nbuckets
    dist = np.hypot(dx, dy)
    order = np.lexsort((dy, dx, dist, bucket))
    bucket, dist, flat = bucket[order], dist[order], flat[order]
    # first/last element index of each cell's segment
    new_seg = np.ones(len(bucket), dtype=bool)
    new_seg[1:] = bucket[1:] != bucket[:-1]
    seg_id = np.cumsum(new_seg) - 1
    seg_starts = np.flatnonzero(new_seg)
    seg_ends = np.append(seg_starts[1:], len(bucket)) - 1
    first = seg_starts[seg_id]
    last = seg_ends[seg_id]
    out = (flat, dist, first, last)
    if len(_ray_cache) > 64:
        _ray_cache.clear()
    _ray_cache[key] = out
    return out


def interpolate(hg: HeightGrid, origin_column: tuple[int, int]) -> HeightGrid:
    """Fill unknown columns along rays from the origin column outward.

    Walking a ray outward, each unknown column sees two candidates: the
    last known column already passed (forward pass) and the nearest known
    column still ahead (reverse pass).  It takes the candidate whose
    source column is closer; ties go to the lower height.  A known origin
    column serves as a fallback source for every ray.  Known columns are
    never modified and rays containing no known column stay unknown.
    """
    oi, oj = origin_column
    nx, ny = hg.heights.shape
    if not (0 <= oi < nx and 0 <= oj < ny):
        raise ValueError("origin column outside raster")
    flat, dist, first, last = _ray_partition(nx, ny, oi, oj)
    h = hg.heights.ravel()[flat]
    known = hg.known.ravel()[flat]
    m = len(flat)
    if m == 0:
        return hg.copy()
    pos = np.arange(m)

    fwd = np.maximum.accumulate(np.where(known, pos, -1))
    has_fwd = fwd >= first
    rev = np.minimum.accumulate(np.where(known, pos, 2 * m)[::-1])[::-1]
    has_rev = rev <= last

    origin_known = bool(hg.known[oi, oj])
    origin_h = float(hg.heights[oi, oj])
    fwd_h = np.where(has_fwd, h[np.clip(fwd, 0, m - 1)], origin_h)
    fwd_d = np.where(has_fwd, dist - dist[np.clip(fwd, 0, m - 1)], dist)
    if origin_known:
        has_fwd = np.ones(m, dtype=bool)
    rev_h = np.where(has_rev, h[np.clip(rev, 0, m - 1)], 0.0)
    rev_d = np.where(has_rev, dist[np.clip(rev, 0, m - 1)] - dist, np.inf)

    use_fwd = has_fwd & (
        ~has_rev | (fwd_d < rev_d) | ((fwd_d == rev_d) & (fwd_h <= rev_h))
    )
    fill_value = np.where(use_fwd, fwd_h, rev_h)
    fillable = ~known & (has_fwd | has_rev)

    out = hg.copy()
    oh = out.heights.ravel()
    ok = out.known.ravel()
    oh[flat[fillable]] = fill_value[fillable]
    ok[flat[fillable]] = True
    out.heights = oh.reshape(nx, ny)
    out.known = ok.reshape(nx, ny)
    return out


@dataclass
class PolicyGridParams:
    spacing_m: float = 0.1
    count_x: int = 17
    count_y: int = 11
    unknown_depth_m: float = 1.0

    @property
    def size(self) -> int:
        return self.count_x * self.count_y


def policy_grid_sample(
    hg: HeightGrid,
    base_pos: np.ndarray,
    base_yaw: float,
    params: PolicyGridParams | None = None,
) -> np.ndarray:
    """Sample the body-frame elevation lattice and return depths below the
    base (base height minus terrain height), row-major over the x-by-y
    lattice.  Unknown or out-of-raster samples read as the configured
    sentinel depth."""
    params = params or PolicyGridParams()
    base_pos = np.asarray(base_pos, dtype=float)
    half_x = 0.5 * (params.count_x - 1) * params.spacing_m
    half_y = 0.5 * (params.count_y - 1) * params.spacing_m
    bx = np.linspace(-half_x, half_x, params.count_x)
    by = np.linspace(-half_y, half_y, params.count_y)
    gx, gy = np.meshgrid(bx, by, indexing="ij")
    c, s = np.cos(base_yaw), np.sin(base_yaw)
    wx = base_pos[0] + c * gx - s * gy
    wy = base_pos[1] + s * gx + c * gy
    ix = np.floor(wx / hg.res).astype(np.int64) - hg.origin_ix
    iy = np.floor(wy / hg.res).astype(np.int64) - hg.origin_iy
    nx, ny = hg.heights.shape
    inside = (ix >= 0) & (ix < nx) & (iy >= 0) & (iy < ny)
    ixc = np.clip(ix, 0, nx - 1)
    iyc = np.clip(iy, 0, ny - 1)
    usable = inside & hg.known[ixc, iyc]
    depth = np.where(
        usable, base_pos[2] - hg.heights[ixc, iyc], params.unknown_depth_m
    )
    return depth.reshape(-1)


def write_height_csv(hg: HeightGrid, path) -> None:
    """Height raster as CSV; unknown columns carry height 0 and known=0."""
    xs, ys = hg.column_centers()
    nx, ny = hg.heights.shape
    with open(path, "w") as f:
        f.write("x_index,y_index,x_m,y_m,height_m,known\n")
        for i in range(nx):
            for j in range(ny):
                f.write(
                    f"{hg.origin_ix + i},{hg.origin_iy + j},"
                    f"{xs[i]:.6f},{ys[j]:.6f},"
                    f"{hg.heights[i, j]:.6f},{int(hg.known[i, j])}\n"
                )


def write_voxel_csv(grid: VoxelGrid, path) -> None:
    cells, vals = grid.stored_cells()
    with open(path, "w") as f:
        f.write("gx,gy,gz,logodds\n")
        for (gx, gy, gz), v in zip(cells, vals):
            f.write(f"{gx},{gy},{gz},{v:.6f}\n")
