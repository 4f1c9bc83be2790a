"""Global grid, moving-support state, and the discrete nonlocal operator.

The density lives on a fixed uniform node grid; the fronts g < h are
continuous reals.  A node is active while it lies strictly inside (g, h),
and the density it carries is interpreted as constant on its cell clipped
to (g, h).  All integrals (operator, fluxes, mass) are exact for that
piecewise-constant density, which is what makes the discrete mass-balance
and comparison identities hold to quadrature precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError
from .kernels import KernelSpec, Stencil

__all__ = ["Grid", "SimState", "build_grid", "active_range", "covered_widths",
           "total_mass", "apply_nonlocal", "initial_state"]


@dataclass(frozen=True)
class Grid:
    """Symmetric uniform grid on [xmin, xmax] with n intervals (n+1 nodes)."""

    xmin: float
    xmax: float
    dx: float
    n: int
    x: np.ndarray = field(repr=False)

    def node_index(self, position: float) -> int:
        return int(round((position - self.xmin) / self.dx))


def build_grid(h0: float, window_margin: float, dx: float) -> Grid:
    """Window [-(h0+margin), h0+margin] snapped outward to whole cells.

    The window is symmetric with a node exactly at 0.  Runs abort with
    WindowExit if a front comes within one kernel radius of the edge, so the
    margin must budget for the expected front excursion.
    """
    if not h0 > 0:
        raise DomainError(f"h0 must be positive, got {h0}")
    if not dx > 0:
        raise DomainError(f"dx must be positive, got {dx}")
    if not window_margin > 0:
        raise DomainError(f"window margin must be positive, got {window_margin}")
    if dx >= h0:
        raise DomainError(
            f"dx={dx} is too coarse for h0={h0}; the initial support needs >= 3 interior nodes"
        )
    half_cells = int(math.ceil((h0 + window_margin) / dx - 1e-9))
    n = 2 * half_cells
    x = (np.arange(n + 1) - half_cells) * dx
    return Grid(xmin=float(x[0]), xmax=float(x[-1]), dx=dx, n=n, x=x)


@dataclass
class SimState:
    """Density samples plus front positions at one instant.

    u has one entry per grid node and is identically zero at nodes outside
    the open interval (g, h).  Owned by a single simulation; never shared.
    """

    grid: Grid
    t: float
    g: float
    h: float
    u: np.ndarray = field(repr=False)

    def copy(self) -> "SimState":
        return replace(self, u=self.u.copy())


def active_range(grid: Grid, g: float, h: float) -> tuple[int, int]:
    """Inclusive index range of nodes strictly inside (g, h)."""
    ia = int(np.searchsorted(grid.x, g, side="right"))
    ib = int(np.searchsorted(grid.x, h, side="left")) - 1
    if ia > ib:
        raise DomainError(f"no grid nodes inside ({g!r}, {h!r}) at dx={grid.dx}")
    return ia, ib


def covered_widths(state: SimState) -> tuple[int, int, np.ndarray]:
    """Widths of the active cells clipped to (g, h).

    Only the first and last active cells can be partial; a front sitting in
    the dead half-cell beyond the outermost active node clips nothing
    because the neighbouring inactive node carries zero density.
    """
    grid = state.grid
    ia, ib = active_range(grid, state.g, state.h)
    half = 0.5 * grid.dx
    w = np.full(ib - ia + 1, grid.dx)
    w[0] = min(grid.x[ia] + half, state.h) - max(grid.x[ia] - half, state.g)
    w[-1] = min(grid.x[ib] + half, state.h) - max(grid.x[ib] - half, state.g)
    return ia, ib, w


def total_mass(state: SimState) -> float:
    """int_g^h of the cell-constant density."""
    ia, ib, w = covered_widths(state)
    return float(np.dot(state.u[ia : ib + 1], w))


def apply_nonlocal(stencil: Stencil, state: SimState, *, d: float, kernel: KernelSpec) -> np.ndarray:
    """d (int_g^h J(x-y) u(y) dy - u(x)) at every node; zero outside (g, h).

    The integral term is the stencil convolution of the active samples with
    the two boundary cells clipped exactly at the fronts: the full-cell
    stencil weight of an outermost node overcounts the part of its cell that
    sticks out beyond the front, and that overcount is removed with exact
    tail masses.  The result is the exact integral of the nonnegative
    cell-constant density, so it is floored at zero against roundoff.
    """
    grid = state.grid
    ia, ib = active_range(grid, state.g, state.h)
    useg = state.u[ia : ib + 1]
    # full-mode slice: "same" would return the stencil length when it
    # exceeds the number of active nodes
    radius = stencil.radius_cells
    conv = np.convolve(useg, stencil.weights, mode="full")[radius : radius + useg.size]
    xs = grid.x[ia : ib + 1]
    half = 0.5 * grid.dx
    lo_edge = grid.x[ia] - half
    if state.g > lo_edge and useg[0] != 0.0:
        conv -= useg[0] * (kernel.tail(xs - state.g) - kernel.tail(xs - lo_edge))
    hi_edge = grid.x[ib] + half
    if state.h < hi_edge and useg[-1] != 0.0:
        conv -= useg[-1] * (kernel.tail(xs - hi_edge) - kernel.tail(xs - state.h))
    np.maximum(conv, 0.0, out=conv)
    out = np.zeros_like(state.u)
    out[ia : ib + 1] = d * (conv - useg)
    return out


def initial_state(grid: Grid, h0: float, profile, *, t0: float = 0.0) -> SimState:
    """Sample an admissible initial profile onto the grid.

    The profile must vanish at +-h0 and be positive strictly inside; both
    conditions are checked on the sampled values.
    """
    if h0 >= grid.xmax:
        raise DomainError(f"h0={h0} does not fit in the window [{grid.xmin}, {grid.xmax}]")
    ia, ib = active_range(grid, -h0, h0)
    u = np.zeros(grid.n + 1)
    vals = np.asarray(profile(grid.x[ia : ib + 1]), dtype=float)
    scale = float(np.max(vals)) if vals.size else 0.0
    if not np.all(vals > 0):
        raise DomainError("initial profile must be positive strictly inside (-h0, h0)")
    for endpoint in (-h0, h0):
        v = float(profile(np.array([endpoint]))[0])
        if abs(v) > 1e-9 * max(1.0, scale):
            raise DomainError(f"initial profile must vanish at {endpoint!r}, got {v!r}")
    u[ia : ib + 1] = vals
    return SimState(grid=grid, t=t0, g=-h0, h=h0, u=u)
