"""Static SVG result plots for a simulation run."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .scene import Scene
from .simulator import SimulationLog


def _channel_plot(t, y, ylabel, path, hlines=()):
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(t, y, lw=1.2)
    for level in hlines:
        ax.axhline(level, color="tab:red", ls="--", lw=0.8)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def write_plots(log: SimulationLog, outdir, v_goal: float | None = None) -> list[Path]:
    """Write speed/acceleration/steering traces and the x-y overlay as SVG."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    p = outdir / "speed.svg"
    _channel_plot(log.t, log.speeds, "speed [m/s]", p, hlines=[v_goal] if v_goal else ())
    written.append(p)

    p = outdir / "acceleration.svg"
    _channel_plot(log.t, log.inputs[:, 0], "commanded accel [m/s^2]", p)
    written.append(p)

    p = outdir / "steering.svg"
    _channel_plot(log.t, np.degrees(log.states[:, 4]), "steering angle [deg]", p)
    written.append(p)

    fig, ax = plt.subplots(figsize=(7, 4))
    path_xy = log.scenario.path.xy
    ax.plot(path_xy[:, 0], path_xy[:, 1], "k:", lw=1.0, label="reference")
    ax.plot(log.states[:, 0], log.states[:, 1], "tab:green", lw=1.4, label="driven")
    scene = Scene(log.scenario.obstacles, margin=log.scenario.margin)
    centers, radii = scene.circles_at(0.0)
    for (cx, cy), r in zip(centers, radii):
        ax.add_patch(plt.Circle((cx, cy), r, fill=False, color="tab:blue", lw=1.0))
    tx, ty = log.scenario.path.target
    ax.plot([tx], [ty], "r*", ms=10, label="target")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    p = outdir / "path.svg"
    fig.savefig(p, format="svg")
    plt.close(fig)
    written.append(p)
    return written
