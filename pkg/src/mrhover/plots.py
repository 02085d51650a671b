"""Figure rendering for simulation traces."""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .simkit import SimTrace, quat_to_rpy  # noqa: E402


def _lineplot(path, t, series, labels, ylabel, title):
    fig, ax = plt.subplots(figsize=(7.0, 3.2))
    for y, lab in zip(series, labels):
        ax.plot(t, y, label=lab, linewidth=1.0)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_trace_figures(trace: SimTrace, out_dir: str | Path, stem: str) -> list[Path]:
    """Render the standard figure set for one trace; returns the written paths.

    Five files: position, attitude (roll-pitch-yaw of the true attitude),
    position error, attitude tracking error, and rotor signals.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t = trace.t
    rpy = np.array([quat_to_rpy(q) for q in trace.q]) if len(t) else np.empty((0, 3))
    n = trace.n_rotors
    jobs = [
        ("position", trace.p.T, ["x", "y", "z"], "position [m]", "position"),
        ("attitude", np.degrees(rpy).T, ["roll", "pitch", "yaw"], "angle [deg]", "attitude"),
        ("position_error", trace.e_p.T, ["x", "y", "z"], "error [m]", "position error"),
        ("attitude_error", np.degrees(trace.rpy_delta).T, ["roll", "pitch", "yaw"],
         "angle [deg]", "attitude tracking error"),
        ("rotors", trace.rotor_speeds.T, [f"rotor {i+1}" for i in range(n)],
         "speed", "rotor speeds"),
    ]
    written = []
    for suffix, series, labels, ylabel, title in jobs:
        path = out_dir / f"{stem}_{suffix}.png"
        _lineplot(path, t, series, labels, ylabel, title)
        written.append(path)
    return written
