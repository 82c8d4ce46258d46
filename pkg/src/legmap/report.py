"""Matplotlib figure rendering for run artifacts.

Figures are written as PNG with empty metadata so repeated runs produce
byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = dict(dpi=110, metadata={"Software": ""})


def save_trajectory_figure(est_traj, gt_traj, path) -> None:
    fig, (ax_xy, ax_z) = plt.subplots(1, 2, figsize=(9.5, 4))
    ax_xy.plot(gt_traj.pos[:, 0], gt_traj.pos[:, 1], "k-", label="ground truth")
    ax_xy.plot(est_traj.pos[:, 0], est_traj.pos[:, 1], "C0--", label="estimate")
    ax_xy.set_xlabel("x [m]")
    ax_xy.set_ylabel("y [m]")
    ax_xy.set_title("plan view")
    ax_xy.axis("equal")
    ax_xy.legend(loc="best")
    ax_z.plot(gt_traj.t, gt_traj.pos[:, 2], "k-", label="ground truth")
    ax_z.plot(est_traj.t, est_traj.pos[:, 2], "C0--", label="estimate")
    ax_z.set_xlabel("t [s]")
    ax_z.set_ylabel("z [m]")
    ax_z.set_title("height")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_z_error_figure(times, err, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(times, np.asarray(err) * 1e3, "C3-")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("|z error| [mm]")
    ax.set_title("absolute height error")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_height_map_figure(hg, path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 5))
    xs, ys = hg.column_centers()
    shown = np.where(hg.known, hg.heights, np.nan)
    mesh = ax.pcolormesh(xs, ys, shown.T, shading="nearest", cmap="terrain")
    fig.colorbar(mesh, ax=ax, label="height [m]")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title("elevation map")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_timing_figure(report: dict, path) -> None:
    stages = list(report.keys())
    fig, ax = plt.subplots(figsize=(7, 3.2))
    p50 = [report[s]["p50_ms"] for s in stages]
    p90 = [report[s]["p90_ms"] for s in stages]
    x = np.arange(len(stages))
    ax.bar(x - 0.18, p50, width=0.36, label="p50")
    ax.bar(x + 0.18, p90, width=0.36, label="p90")
    ax.set_xticks(x)
    ax.set_xticklabels(stages, rotation=20, ha="right")
    ax.set_ylabel("ms")
    ax.set_title("per-stage timing")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
