"""Trot gait schedule: diagonal leg pairs in alternating phase."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# foot order everywhere in this package: FL, FR, RL, RR
FOOT_NAMES = ("FL", "FR", "RL", "RR")
TROT_OFFSETS = (0.0, 0.5, 0.5, 0.0)


@dataclass
class GaitParams:
    frequency_hz: float = 1.5
    duty_factor: float = 0.6
    step_length_m: float = 0.3
    base_height_m: float = 0.32
    phase_offsets: tuple = field(default=TROT_OFFSETS)

    def __post_init__(self):
        if not 0.0 < self.duty_factor < 1.0:
            raise ValueError("duty factor must lie in (0, 1)")
        if self.frequency_hz <= 0.0:
            raise ValueError("stride frequency must be positive")

    @property
    def period_s(self) -> float:
        return 1.0 / self.frequency_hz

    @property
    def swing_time_s(self) -> float:
        return (1.0 - self.duty_factor) * self.period_s


def gait_phase(gp: GaitParams, t) -> np.ndarray:
    """Unwrapped phase per foot at gait time t: integer part is the cycle
    index, fractional part the position within the cycle."""
    t = np.asarray(t, dtype=float)
    return t[..., None] * gp.frequency_hz + np.asarray(gp.phase_offsets)


def gait_schedule(gp: GaitParams, t, shoulder_offsets=None):
    """(phase fraction, contact flag, body-frame foot anchor) per foot.

    A foot is in stance while its phase fraction is below the duty factor.
    Anchors are the nominal under-shoulder targets the feet cycle around.
    """
    if np.any(np.asarray(t) < 0):
        raise ValueError("gait time must be non-negative")
    phase = gait_phase(gp, t)
    frac = phase - np.floor(phase)
    contact = frac < gp.duty_factor
    if shoulder_offsets is None:
        shoulder_offsets = default_shoulder_offsets()
    anchors = np.concatenate(
        [shoulder_offsets, np.full((4, 1), -gp.base_height_m)], axis=1
    )
    return frac, contact, anchors


def default_shoulder_offsets(half_length: float = 0.19, half_width: float = 0.15):
    """Body-frame xy of the four shoulder joints, FL FR RL RR."""
    return np.array(
        [
            [half_length, half_width],
            [half_length, -half_width],
            [-half_length, half_width],
            [-half_length, -half_width],
        ]
    )
