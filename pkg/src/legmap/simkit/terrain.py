"""Parametric risky terrains with an analytic height query.

A terrain is a flat base plane plus a list of primitives; primitives
later in the list win where footprints overlap (a beam laid over a gap
raises its strip back up).  Heights are defined everywhere, so the query
never fails; gaps simply return their configured depth.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GAP_DEPTH_DEFAULT = -1.0

# per-level scaling applied by build_terrain: gaps widen, supports narrow
# and rise as the level climbs
LEVEL_GAP_GROWTH = 0.15
LEVEL_WIDTH_SHRINK = 0.08
LEVEL_WIDTH_FLOOR = 0.3
LEVEL_HEIGHT_GROWTH = 0.10
MAX_LEVEL = 8


@dataclass
class Slab:
    """Rectangular block: height applies on [x0, x1] x [y0, y1]."""

    x0: float
    x1: float
    y0: float
    y1: float
    height: float = 0.0

    def apply(self, x, y, h):
        m = (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)
        return np.where(m, self.height, h)

    def scaled(self, level: int) -> "Slab":
        return self


@dataclass
class Gap:
    """Full-width trench across the travel direction."""

    x0: float
    width: float
    depth: float = GAP_DEPTH_DEFAULT
    y0: float = -np.inf
    y1: float = np.inf

    def apply(self, x, y, h):
        m = (x >= self.x0) & (x <= self.x0 + self.width) & (y >= self.y0) & (y <= self.y1)
        return np.where(m, self.depth, h)

    def scaled(self, level: int) -> "Gap":
        w = self.width * (1.0 + LEVEL_GAP_GROWTH * (level - 1))
        return Gap(self.x0, w, self.depth, self.y0, self.y1)


@dataclass
class Beam:
    """Narrow walkable strip along x, optionally inclined."""

    x0: float
    x1: float
    y_center: float
    width: float
    height: float = 0.0
    incline: float = 0.0  # rad, rise along +x

    def apply(self, x, y, h):
        m = (
            (x >= self.x0)
            & (x <= self.x1)
            & (np.abs(y - self.y_center) <= 0.5 * self.width)
        )
        return np.where(m, self.height + np.tan(self.incline) * (x - self.x0), h)

    def scaled(self, level: int) -> "Beam":
        w = self.width * max(1.0 - LEVEL_WIDTH_SHRINK * (level - 1), LEVEL_WIDTH_FLOOR)
        hgt = self.height * (1.0 + LEVEL_HEIGHT_GROWTH * (level - 1))
        return Beam(self.x0, self.x1, self.y_center, w, hgt, self.incline)


@dataclass
class PlankBridge:
    """Flat plank at base level spanning a drop."""

    x0: float
    x1: float
    y_center: float
    width: float
    height: float = 0.0

    def apply(self, x, y, h):
        m = (
            (x >= self.x0)
            & (x <= self.x1)
            & (np.abs(y - self.y_center) <= 0.5 * self.width)
        )
        return np.where(m, self.height, h)

    def scaled(self, level: int) -> "PlankBridge":
        w = self.width * max(1.0 - LEVEL_WIDTH_SHRINK * (level - 1), LEVEL_WIDTH_FLOOR)
        return PlankBridge(self.x0, self.x1, self.y_center, w, self.height)


@dataclass
class SteppingStones:
    """Grid of square stones over a drop."""

    x0: float
    x1: float
    y0: float
    y1: float
    stone_size: float = 0.2
    spacing: float = 0.15
    height: float = 0.0
    depth: float = GAP_DEPTH_DEFAULT

    def apply(self, x, y, h):
        region = (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)
        pitch = self.stone_size + self.spacing
        on_x = ((x - self.x0) % pitch) <= self.stone_size
        on_y = ((y - self.y0) % pitch) <= self.stone_size
        return np.where(region, np.where(on_x & on_y, self.height, self.depth), h)

    def scaled(self, level: int) -> "SteppingStones":
        s = self.stone_size * max(1.0 - LEVEL_WIDTH_SHRINK * (level - 1), LEVEL_WIDTH_FLOOR)
        sp = self.spacing * (1.0 + LEVEL_GAP_GROWTH * (level - 1))
        hgt = self.height * (1.0 + LEVEL_HEIGHT_GROWTH * (level - 1))
        return SteppingStones(self.x0, self.x1, self.y0, self.y1, s, sp, hgt, self.depth)


@dataclass
class TerrainSpec:
    primitives: list = field(default_factory=list)
    level: int = 1
    base_height: float = 0.0

    def __post_init__(self):
        if not 1 <= self.level <= MAX_LEVEL:
            raise ValueError(f"level must be in 1..{MAX_LEVEL}")
        for p in self.primitives:
            if not np.isfinite(getattr(p, "height", 0.0)):
                raise ValueError("primitive heights must be finite")


class Terrain:
    """Analytic heightfield: base plane overridden by primitives in order."""

    def __init__(self, primitives=(), base_height: float = 0.0):
        self.primitives = list(primitives)
        self.base_height = float(base_height)

    def height_many(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        h = np.full(np.broadcast(x, y).shape, self.base_height)
        for p in self.primitives:
            h = p.apply(x, y, h)
        return h

    def height(self, x: float, y: float) -> float:
        return float(self.height_many(np.float64(x), np.float64(y)))


def build_terrain(spec: TerrainSpec) -> Terrain:
    """Realize a spec at its difficulty level."""
    prims = [p.scaled(spec.level) for p in spec.primitives]
    return Terrain(prims, spec.base_height)


def make_named_terrain(kind: str, params: dict) -> TerrainSpec:
    """Convenience presets used by the scenario configs."""
    level = int(params.get("level", 1))
    if kind == "flat":
        return TerrainSpec([], level)
    if kind == "gap":
        return TerrainSpec(
            [Gap(params.get("gap_x0_m", 2.0), params.get("gap_width_m", 0.4),
                 params.get("gap_depth_m", GAP_DEPTH_DEFAULT))],
            level,
        )
    if kind == "corridor":
        half = params.get("corridor_half_width_m", 1.0)
        wall_h = params.get("wall_height_m", 1.5)
        thick = params.get("wall_thickness_m", 0.3)
        length = params.get("corridor_length_m", 60.0)
        return TerrainSpec(
            [
                Slab(-5.0, length, half, half + thick, wall_h),
                Slab(-5.0, length, -half - thick, -half, wall_h),
            ],
            level,
        )
    if kind == "beam":
        x0 = params.get("gap_x0_m", 2.0)
        width = params.get("gap_width_m", 1.0)
        return TerrainSpec(
            [
                Gap(x0, width, params.get("gap_depth_m", GAP_DEPTH_DEFAULT)),
                Beam(x0, x0 + width, 0.0, params.get("beam_width_m", 0.2),
                     params.get("beam_height_m", 0.0),
                     params.get("beam_incline_rad", 0.0)),
            ],
            level,
        )
    if kind == "stepping_stones":
        x0 = params.get("gap_x0_m", 2.0)
        width = params.get("gap_width_m", 2.0)
        return TerrainSpec(
            [
                Gap(x0, width, params.get("gap_depth_m", GAP_DEPTH_DEFAULT)),
                SteppingStones(
                    x0, x0 + width, -1.5, 1.5,
                    params.get("stone_size_m", 0.25),
                    params.get("stone_spacing_m", 0.15),
                ),
            ],
            level,
        )
    if kind == "plank":
        x0 = params.get("gap_x0_m", 2.0)
        width = params.get("gap_width_m", 1.5)
        return TerrainSpec(
            [
                Gap(x0, width, params.get("gap_depth_m", GAP_DEPTH_DEFAULT)),
                PlankBridge(x0, x0 + width, 0.0, params.get("plank_width_m", 0.2)),
            ],
            level,
        )
    raise ValueError(f"unknown terrain kind {kind!r}")
