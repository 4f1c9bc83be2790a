"""Figure rendering to SVG files.

Figures are drawn with matplotlib on the Agg backend and serialized to SVG
through an in-memory buffer so the write stays atomic.  A fixed hash salt
and stripped date metadata keep the SVG bytes reproducible for identical
inputs on the same library versions.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402

from .classify import SweepResult  # noqa: E402
from .outputs import atomic_write_bytes  # noqa: E402
from .solver import Trajectory  # noqa: E402

__all__ = ["save_figure_svg", "save_fronts", "save_final_profile", "save_phase_heatmap"]

_VERDICT_LEVELS = {"vanishing": 0, "undetermined": 1, "spreading": 2, "error": 3}
_VERDICT_COLORS = ["#2166ac", "#bdbdbd", "#b2182b", "#fee090"]


def save_figure_svg(fig, path: str) -> None:
    buffer = io.BytesIO()
    with matplotlib.rc_context({"svg.hashsalt": "frontier-kpp"}):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(fig)
    atomic_write_bytes(path, buffer.getvalue())


def save_fronts(traj: Trajectory, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(traj.times, traj.h, label="h(t)", color="#b2182b")
    ax.plot(traj.times, traj.g, label="g(t)", color="#2166ac")
    ax.fill_between(traj.times, traj.g, traj.h, color="#fddbc7", alpha=0.4)
    ax.set_xlabel("t")
    ax.set_ylabel("front position")
    ax.set_title(f"fronts (mu={traj.mu:g}, d={traj.d:g})")
    ax.legend(loc="upper left")
    fig.tight_layout()
    save_figure_svg(fig, path)


def save_final_profile(traj: Trajectory, path: str) -> None:
    state = traj.final_state
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(state.grid.x, state.u, color="#1a9850")
    ax.axvline(state.g, color="#2166ac", linestyle=":", linewidth=1)
    ax.axvline(state.h, color="#b2182b", linestyle=":", linewidth=1)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_title(f"density at t={state.t:g}")
    fig.tight_layout()
    save_figure_svg(fig, path)


def save_phase_heatmap(result: SweepResult, path: str) -> None:
    """One colored cell per sweep grid point, rows bottom-to-top."""
    levels = np.array(
        [[_VERDICT_LEVELS.get(v, 3) for v in row] for row in result.verdicts], dtype=float
    )
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    cmap = ListedColormap(_VERDICT_COLORS)
    ax.imshow(levels, cmap=cmap, vmin=-0.5, vmax=3.5, origin="lower", aspect="auto")
    ax.set_xticks(range(len(result.col_values)),
                  [f"{v:g}" for v in result.col_values], rotation=45)
    ax.set_yticks(range(len(result.row_values)), [f"{v:g}" for v in result.row_values])
    ax.set_xlabel(result.col_param)
    ax.set_ylabel(result.row_param)
    ax.set_title("spreading-vanishing phase diagram")
    handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in _VERDICT_COLORS]
    ax.legend(handles, list(_VERDICT_LEVELS), loc="upper left", bbox_to_anchor=(1.01, 1.0))
    fig.tight_layout()
    save_figure_svg(fig, path)
