"""Evolution and steady states on a fixed interval.

Same node discretization and forward-Euler update as the free-boundary
solver with the fronts frozen at the interval ends: nodes strictly inside
the open interval, density extended by zero outside.  That shared
convention is what lets the contraction mode's first iterate be checked
against this module bit for bit.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, NotConverged, StabilityViolation
from .growth import GrowthSpec, derived_constants
from .kernels import KernelSpec, solver_stencil

__all__ = ["FixedRun", "fixed_nodes", "evolve_fixed", "steady_state"]


@dataclass
class FixedRun:
    interval: tuple[float, float]
    nodes: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    profiles: np.ndarray = field(repr=False)  # sampled densities, rows match times
    u_final: np.ndarray = field(repr=False)
    converged: bool
    steady_residual: float = math.nan


def fixed_nodes(interval: tuple[float, float], dx: float) -> np.ndarray:
    """Nodes strictly inside the interval, spaced by (an adjusted) dx.

    The spacing is snapped so the interval is a whole number of cells; the
    endpoints themselves carry no unknowns (zero extension applies there).
    """
    l1, l2 = float(interval[0]), float(interval[1])
    if not (l2 > l1 and dx > 0):
        raise DomainError(f"need l1 < l2 and dx > 0, got {interval!r}, dx={dx}")
    cells = max(4, int(round((l2 - l1) / dx)))
    step = (l2 - l1) / cells
    return l1 + step * np.arange(1, cells)


def _frozen_rate(u, nodes, dx, weights, d, growth, t):
    radius = (weights.size - 1) // 2
    conv = np.convolve(u, weights, mode="full")[radius : radius + u.size]
    return d * (conv - u) + growth.rate(t, nodes, u)


def evolve_fixed(
    interval: tuple[float, float],
    u0,
    cfg,
    kernel: KernelSpec,
    growth: GrowthSpec,
    t_end: float,
    *,
    dx: Optional[float] = None,
    conv_tol: float = 1e-10,
    conv_window: float = 1.0,
    record_every: Optional[int] = None,
) -> FixedRun:
    """Explicit stepping of the fixed-interval problem.

    u0 is either an array over fixed_nodes(interval, dx) or a callable
    evaluated there.  Marching stops early once the density moves less than
    conv_tol in sup norm over a conv_window of time, a detection rule that
    is independent of dt.
    """
    if dx is None:
        raise DomainError("evolve_fixed needs a grid spacing dx")
    nodes = fixed_nodes(interval, dx)
    step = float(nodes[1] - nodes[0])
    u = np.asarray(u0(nodes) if callable(u0) else u0, dtype=float).copy()
    if u.shape != nodes.shape:
        raise DomainError(f"u0 has shape {u.shape}, expected {nodes.shape}")
    if np.any(u < 0) or not np.any(u > 0):
        raise DomainError("u0 must be nonnegative and not identically zero")
    cfg.check_stability(growth, float(np.max(u)))
    weights = solver_stencil(kernel, step).weights

    dt = cfg.dt
    n_steps = int(round(t_end / dt))
    lag = max(1, int(round(conv_window / dt)))
    record_every = record_every or max(1, n_steps // 200)
    times = [0.0]
    profiles = [u.copy()]
    history: deque[np.ndarray] = deque([u.copy()], maxlen=lag + 1)
    converged = False
    t = 0.0
    for k in range(1, n_steps + 1):
        u = u + dt * _frozen_rate(u, nodes, step, weights, cfg.d, growth, t)
        t = k * dt
        lowest = float(np.min(u))
        if lowest < -1e-12:
            raise StabilityViolation(t, f"min u = {lowest!r}")
        history.append(u.copy())
        if k % record_every == 0 or k == n_steps:
            times.append(t)
            profiles.append(u.copy())
        if len(history) == lag + 1:
            drift = float(np.max(np.abs(history[-1] - history[0])))
            if drift < conv_tol:
                converged = True
                if times[-1] != t:
                    times.append(t)
                    profiles.append(u.copy())
                break
    residual = float(np.max(np.abs(_frozen_rate(u, nodes, step, weights, cfg.d, growth, t))))
    return FixedRun(
        interval=(float(interval[0]), float(interval[1])), nodes=nodes,
        times=np.asarray(times), profiles=np.vstack(profiles), u_final=u,
        converged=converged, steady_residual=residual,
    )


def steady_state(
    interval: tuple[float, float],
    cfg,
    kernel: KernelSpec,
    growth: GrowthSpec,
    *,
    dx: Optional[float] = None,
    t_max: float = 400.0,
    residual_tol: float = 1e-8,
) -> FixedRun:
    """March from the flat profile v0/2 until the density settles.

    Global convergence of the marching is what makes this robust: the
    dynamics are monotone around the steady state, so no Newton polishing
    is needed to reach the residual tolerance.
    """
    consts = derived_constants(growth)
    run = evolve_fixed(interval, lambda xs: np.full(xs.shape, consts.v0 / 2.0),
                       cfg, kernel, growth, t_max, dx=dx)
    if not run.converged:
        raise NotConverged(f"no steady state within t_max={t_max} on {interval!r}")
    if run.steady_residual > residual_tol:
        raise NotConverged(
            f"steady-state residual {run.steady_residual!r} above {residual_tol!r}"
        )
    return run
