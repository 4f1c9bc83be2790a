"""File emission: delimited series, metadata, and rendered figures.

Every write is atomic (temp file in the target directory, then rename), so
a crash never leaves a partial artifact.  Floats are formatted with their
shortest round-trip decimal representation, which makes reruns of the same
config byte-identical.  Each run directory carries the full config echo,
its hash, and library versions for provenance.
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Iterable, Optional

import numpy as np

from .classify import Classification, SweepResult, Thresholds
from .solver import Trajectory

__all__ = ["atomic_write_text", "atomic_write_bytes", "fmt", "write_trajectory_csv",
           "write_profile_csv", "write_phase_csv", "write_metadata", "emit_run_outputs",
           "emit_sweep_outputs"]

TRAJECTORY_HEADER = "t,g,h,sup_u,mass,flux_left,flux_right"


def fmt(value) -> str:
    """Shortest decimal that round-trips to the same float."""
    return repr(float(value))


def atomic_write_bytes(path: str, payload: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_trajectory_csv(traj: Trajectory, path: str) -> None:
    lines = [TRAJECTORY_HEADER]
    for i in range(len(traj.times)):
        lines.append(",".join(fmt(v) for v in (
            traj.times[i], traj.g[i], traj.h[i], traj.sup_u[i], traj.mass[i],
            traj.flux_left[i], traj.flux_right[i],
        )))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_profile_csv(x: np.ndarray, u: np.ndarray, path: str) -> None:
    lines = ["x,u"]
    lines.extend(f"{fmt(xi)},{fmt(ui)}" for xi, ui in zip(x, u))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_phase_csv(result: SweepResult, path: str) -> None:
    header = f"{result.row_param},{result.col_param},verdict,final_width,final_sup_u,error"
    lines = [header]
    for i, rv in enumerate(result.row_values):
        for j, cv in enumerate(result.col_values):
            ev = result.evidence[i][j]
            width = fmt(ev.final_width) if ev is not None else ""
            sup = fmt(ev.final_sup_u) if ev is not None else ""
            err = result.errors[i][j].replace(",", ";")
            lines.append(f"{fmt(rv)},{fmt(cv)},{result.verdicts[i][j]},{width},{sup},{err}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def _versions() -> dict:
    import matplotlib
    import scipy

    from . import __version__

    return {
        "frontier_kpp": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
    }


def write_metadata(path: str, *, config_doc: dict, config_digest: str,
                   diagnostics: Optional[dict] = None) -> None:
    doc = {
        "schema_version": config_doc.get("schema_version"),
        "config": config_doc,
        "config_sha256": config_digest,
        "versions": _versions(),
        "diagnostics": diagnostics or {},
    }
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def classification_diagnostics(cls: Classification) -> dict:
    ev = cls.evidence
    return {
        "verdict": str(cls.verdict),
        "final_width": ev.final_width,
        "final_sup_u": ev.final_sup_u,
        "core_density": ev.core_density,
        "velocity_left": ev.velocity_left,
        "velocity_right": ev.velocity_right,
        "decided_t": None if np.isnan(ev.decided_t) else ev.decided_t,
        "rule": ev.rule,
    }


def emit_run_outputs(outdir: str, traj: Trajectory, *, config_doc: dict,
                     config_digest: str, classification: Optional[Classification] = None,
                     thresholds: Optional[Thresholds] = None) -> list[str]:
    """Trajectory CSV, final profile CSV, metadata JSON, and SVG figures."""
    from . import plots

    paths = []
    traj_path = os.path.join(outdir, "trajectory.csv")
    write_trajectory_csv(traj, traj_path)
    paths.append(traj_path)

    state = traj.final_state
    profile_path = os.path.join(outdir, "final_profile.csv")
    write_profile_csv(state.grid.x, state.u, profile_path)
    paths.append(profile_path)

    diagnostics = {
        "t_final": float(traj.times[-1]),
        "window_exit": traj.window_exit,
        "stopped_early": traj.stopped_early,
    }
    if classification is not None:
        diagnostics.update(classification_diagnostics(classification))
    if thresholds is not None:
        diagnostics["thresholds"] = {
            "ell_star": thresholds.ell_star,
            "mu_lower": thresholds.mu_lower,
            "mu_vanish": thresholds.mu_vanish,
            "mu_spread": thresholds.mu_spread,
            "rel_width": thresholds.rel_width,
            "undetermined_at_bracket": thresholds.undetermined_at_bracket,
        }
    meta_path = os.path.join(outdir, "run.json")
    write_metadata(meta_path, config_doc=config_doc, config_digest=config_digest,
                   diagnostics=diagnostics)
    paths.append(meta_path)

    fronts_path = os.path.join(outdir, "fronts.svg")
    plots.save_fronts(traj, fronts_path)
    paths.append(fronts_path)
    final_profile_svg = os.path.join(outdir, "final_profile.svg")
    plots.save_final_profile(traj, final_profile_svg)
    paths.append(final_profile_svg)
    return paths


def emit_sweep_outputs(outdir: str, result: SweepResult, *, config_doc: dict,
                       config_digest: str) -> list[str]:
    from . import plots

    paths = []
    csv_path = os.path.join(outdir, "phase.csv")
    write_phase_csv(result, csv_path)
    paths.append(csv_path)
    svg_path = os.path.join(outdir, "phase.svg")
    plots.save_phase_heatmap(result, svg_path)
    paths.append(svg_path)
    meta_path = os.path.join(outdir, "sweep.json")
    write_metadata(meta_path, config_doc=config_doc, config_digest=config_digest,
                   diagnostics={"rows": result.row_param, "cols": result.col_param})
    paths.append(meta_path)
    return paths
