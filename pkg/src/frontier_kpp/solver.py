"""Free-boundary time integration.

Two modes drive the same spatial discretization:

* explicit: forward Euler on the density and on the front ODEs, fluxes
  evaluated at the old state.  With the step-size guard dt (d + Lip f) <= 1/2
  the update is monotone, which is what makes positivity, the a-priori sup
  bound and the comparison inequalities hold exactly in the discrete system.
* picard: short-window contraction iteration; an outer loop rebuilds the
  front paths from cumulative fluxes, an inner loop solves the per-node
  density ODEs with the convolution term frozen from the previous density
  iterate.  At the double fixed point a window reproduces explicit stepping
  up to the handling of node activation times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import DomainError, NoContraction, StabilityViolation, WindowExit
from .grids import Grid, SimState, active_range, apply_nonlocal, total_mass
from .growth import GrowthSpec
from .kernels import KernelSpec, Stencil, solver_stencil

__all__ = ["SolverConfig", "Trajectory", "PicardReport", "SnapshotRow", "boundary_flux",
           "step_explicit", "integrate", "picard_window"]


@dataclass(frozen=True)
class SolverConfig:
    d: float
    mu: float
    dt: float
    t_end: float
    mode: str = "explicit"
    snapshot_every: int = 1000
    picard_window: float = 0.05
    picard_tol: float = 1e-10
    picard_max_iter: int = 60

    def __post_init__(self):
        problems = []
        if not self.d > 0:
            problems.append(f"d must be positive, got {self.d}")
        if not self.mu > 0:
            problems.append(f"mu must be positive, got {self.mu}")
        if not self.dt > 0:
            problems.append(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            problems.append(f"t_end must be positive, got {self.t_end}")
        if self.mode not in ("explicit", "picard"):
            problems.append(f"mode must be 'explicit' or 'picard', got {self.mode!r}")
        if self.snapshot_every < 1:
            problems.append(f"snapshot_every must be >= 1, got {self.snapshot_every}")
        if self.mode == "picard" and not self.picard_window > 0:
            problems.append(f"picard window must be positive, got {self.picard_window}")
        if problems:
            raise DomainError(problems)

    def check_stability(self, growth: GrowthSpec, sup_u0: float) -> None:
        """Guard dt (d + Lip_f) <= 1/2 on the invariant range [0, M0]."""
        m0 = max(sup_u0, growth.k0)
        lip = growth.lipschitz(m0)
        if self.dt * (self.d + lip) > 0.5 + 1e-12:
            raise DomainError(
                f"dt={self.dt} violates the stability guard: dt*(d+Lip)="
                f"{self.dt * (self.d + lip):.4g} > 0.5 (d={self.d}, Lip={lip:.4g})"
            )


class SnapshotRow(NamedTuple):
    t: float
    g: float
    h: float
    sup_u: float
    min_u_interior: float
    mass: float
    flux_left: float
    flux_right: float
    core_u: float


@dataclass
class Trajectory:
    """Snapshot series of one run plus the final state.

    Diagnostics are recorded every snapshot_every steps plus the initial and
    final instants; profiles holds the full density at the same cadence.
    Front velocities are mu * flux, available from the flux columns.
    """

    times: np.ndarray
    g: np.ndarray
    h: np.ndarray
    sup_u: np.ndarray
    min_u_interior: np.ndarray
    mass: np.ndarray
    flux_left: np.ndarray
    flux_right: np.ndarray
    core_u: np.ndarray
    profiles: np.ndarray = field(repr=False)  # shape (len(times), nodes)
    final_state: SimState = field(repr=False)
    d: float = math.nan
    mu: float = math.nan
    h0: float = math.nan
    dt: float = math.nan
    sup_u0: float = math.nan
    kernel_support: float = math.nan
    kernel_q_inf: float = math.nan  # int_0^inf K(s) ds, caps front speed at mu M0 q
    window_exit: bool = False
    stopped_early: bool = False

    @property
    def width(self) -> np.ndarray:
        return self.h - self.g


@dataclass
class PicardReport:
    iterations: int
    residuals: list[float]
    contraction_factors: list[float]
    inner_iterations: list[int]


def boundary_flux(state: SimState, kernel: KernelSpec, side: str) -> float:
    """Outward dispersal flux across one front.

    Right: int_g^h K(h-x) u(t,x) dx, Left: int_g^h K(x-g) u(t,x) dx, both
    evaluated exactly for the cell-constant density via the antiderivative
    of the tail mass.  Nonnegative; zero iff u vanishes.
    """
    grid = state.grid
    ia, ib = active_range(grid, state.g, state.h)
    useg = state.u[ia : ib + 1]
    xs = grid.x[ia : ib + 1]
    half = 0.5 * grid.dx
    lo = xs - half
    hi = xs + half
    lo[0] = max(lo[0], state.g)
    hi[-1] = min(hi[-1], state.h)
    if side == "right":
        vals = kernel.tail_integral(state.h - lo) - kernel.tail_integral(state.h - hi)
    elif side == "left":
        vals = kernel.tail_integral(hi - state.g) - kernel.tail_integral(lo - state.g)
    else:
        raise DomainError(f"side must be 'left' or 'right', got {side!r}")
    return float(np.dot(useg, vals))


def step_explicit(
    state: SimState,
    cfg: SolverConfig,
    kernel: KernelSpec,
    growth: GrowthSpec,
    stencil: Optional[Stencil] = None,
) -> SimState:
    """One forward-Euler step of density and fronts.

    Newly active nodes keep the zero already stored in u.  Negative values
    beyond -1e-12 abort the run: positivity is a property of the scheme
    under the step-size guard, so a violation means the guard was bypassed.
    """
    if stencil is None:
        stencil = solver_stencil(kernel, state.grid.dx)
    grid = state.grid
    ia, ib = active_range(grid, state.g, state.h)
    useg = state.u[ia : ib + 1]
    rate = apply_nonlocal(stencil, state, d=cfg.d, kernel=kernel)
    f = growth.rate(state.t, grid.x[ia : ib + 1], useg)
    u_new = state.u.copy()
    u_new[ia : ib + 1] = useg + cfg.dt * (rate[ia : ib + 1] + f)
    lowest = float(np.min(u_new[ia : ib + 1]))
    if lowest < -1e-12:
        raise StabilityViolation(state.t, f"min u = {lowest!r}")
    flux_l = boundary_flux(state, kernel, "left")
    flux_r = boundary_flux(state, kernel, "right")
    g_new = state.g - cfg.dt * cfg.mu * flux_l
    h_new = state.h + cfg.dt * cfg.mu * flux_r
    t_new = state.t + cfg.dt
    support = kernel.support
    if h_new > grid.xmax - support or g_new < grid.xmin + support:
        raise WindowExit(t_new)
    return SimState(grid=grid, t=t_new, g=g_new, h=h_new, u=u_new)


class _Recorder:
    """Accumulates snapshot rows and profiles during a run."""

    def __init__(self, grid: Grid):
        self.core_index = grid.node_index(0.0)
        self.rows: list[SnapshotRow] = []
        self.profiles: list[np.ndarray] = []

    def snap(self, state: SimState, kernel: KernelSpec) -> SnapshotRow:
        ia, ib = active_range(state.grid, state.g, state.h)
        useg = state.u[ia : ib + 1]
        # the outermost node on each side may have activated this very step
        inner = useg[1:-1] if useg.size > 2 else useg
        row = SnapshotRow(
            t=state.t,
            g=state.g,
            h=state.h,
            sup_u=float(np.max(useg)),
            min_u_interior=float(np.min(inner)),
            mass=total_mass(state),
            flux_left=boundary_flux(state, kernel, "left"),
            flux_right=boundary_flux(state, kernel, "right"),
            core_u=float(state.u[self.core_index]),
        )
        self.rows.append(row)
        self.profiles.append(state.u.copy())
        return row

    def build(self, state: SimState, cfg: SolverConfig, h0: float, sup_u0: float,
              kernel: KernelSpec, *, window_exit=False, stopped_early=False) -> Trajectory:
        cols = [np.asarray(c, dtype=float) for c in zip(*self.rows)]
        return Trajectory(
            times=cols[0], g=cols[1], h=cols[2], sup_u=cols[3],
            min_u_interior=cols[4], mass=cols[5], flux_left=cols[6],
            flux_right=cols[7], core_u=cols[8],
            profiles=np.vstack(self.profiles), final_state=state,
            d=cfg.d, mu=cfg.mu, h0=h0, dt=cfg.dt, sup_u0=sup_u0,
            kernel_support=kernel.support,
            kernel_q_inf=float(kernel.tail_integral(math.inf)),
            window_exit=window_exit, stopped_early=stopped_early,
        )


def integrate(
    state0: SimState,
    cfg: SolverConfig,
    kernel: KernelSpec,
    growth: GrowthSpec,
    *,
    until: Optional[Callable[[SnapshotRow], bool]] = None,
    on_window_exit: str = "raise",
) -> Trajectory:
    """Run the configured mode from state0 to t_end.

    Deterministic for a given configuration.  until, when given, is called
    with each snapshot row and stops the run early once it returns True
    (used by the threshold search; the trajectory is marked stopped_early).
    on_window_exit='return' hands back the partial trajectory instead of
    raising; the raised WindowExit otherwise carries it in .trajectory.
    """
    if math.isinf(kernel.support):
        raise DomainError("simulation kernels need finite support")
    h0 = state0.h
    ia, ib = active_range(state0.grid, state0.g, state0.h)
    sup_u0 = float(np.max(state0.u[ia : ib + 1]))
    cfg.check_stability(growth, sup_u0)
    stencil = solver_stencil(kernel, state0.grid.dx)
    rec = _Recorder(state0.grid)
    state = state0.copy()
    rec.snap(state, kernel)

    def finish(final_state, **kw):
        return rec.build(final_state, cfg, h0, sup_u0, kernel, **kw)

    if cfg.mode == "picard":
        return _integrate_picard(state, cfg, kernel, growth, stencil, rec, finish,
                                 until, on_window_exit)

    n_steps = int(round(cfg.t_end / cfg.dt))
    for step in range(1, n_steps + 1):
        try:
            state = step_explicit(state, cfg, kernel, growth, stencil)
        except WindowExit as exc:
            rec.snap(state, kernel)
            traj = finish(state, window_exit=True)
            if on_window_exit == "return":
                return traj
            exc.trajectory = traj
            raise
        if step % cfg.snapshot_every == 0 or step == n_steps:
            row = rec.snap(state, kernel)
            if until is not None and until(row):
                return finish(state, stopped_early=step < n_steps)
    return finish(state)


def _integrate_picard(state, cfg, kernel, growth, stencil, rec, finish, until, on_window_exit):
    while state.t < cfg.t_end - 1e-12:
        window = min(cfg.picard_window, cfg.t_end - state.t)
        try:
            new_state, _report = picard_window(state, cfg, kernel, growth, stencil,
                                               window=window)
        except WindowExit as exc:
            rec.snap(state, kernel)
            traj = finish(state, window_exit=True)
            if on_window_exit == "return":
                return traj
            exc.trajectory = traj
            raise
        state = new_state
        row = rec.snap(state, kernel)
        if until is not None and until(row):
            return finish(state, stopped_early=state.t < cfg.t_end - 1e-12)
    return finish(state)


def _crossing_times(path: np.ndarray, times: np.ndarray, xs: np.ndarray, sign: int) -> np.ndarray:
    """Linear-interpolation activation times of nodes crossed by one front.

    sign=+1 for the right front (a node activates when h rises above its
    position), sign=-1 for the left front.  Nodes never crossed map to +inf.
    """
    vals = sign * np.asarray(path)
    targets = sign * np.asarray(xs)
    out = np.full(targets.shape, math.inf)
    for i, target in enumerate(targets):
        if vals[0] > target:
            out[i] = times[0]
            continue
        idx = np.nonzero(vals > target)[0]
        if idx.size == 0:
            continue
        j = int(idx[0])
        frac = (target - vals[j - 1]) / (vals[j] - vals[j - 1])
        out[i] = times[j - 1] + frac * (times[j] - times[j - 1])
    return out


def _conv_segment(u_row, grid, g, h, kernel, stencil, ia_out, ib_out):
    """int_g^h J(x-y) u-hat(y) dy at nodes ia_out..ib_out.

    Like the integral term of apply_nonlocal (full-cell convolution with the
    boundary cells clipped exactly), but evaluated on an index range that may
    extend beyond the currently active nodes; the construction needs the
    value at nodes the fronts have not reached yet.
    """
    ja, jb = active_range(grid, g, h)
    useg = u_row[ja : jb + 1]
    radius = stencil.radius_cells
    full = np.convolve(useg, stencil.weights, mode="full")  # spans ja-radius .. jb+radius
    out = np.zeros(ib_out - ia_out + 1)
    lo = max(ia_out, ja - radius)
    hi = min(ib_out, jb + radius)
    if lo <= hi:
        out[lo - ia_out : hi - ia_out + 1] = full[lo - (ja - radius) : hi - (ja - radius) + 1]
    xs = grid.x[ia_out : ib_out + 1]
    half = 0.5 * grid.dx
    lo_edge = grid.x[ja] - half
    if g > lo_edge and useg[0] != 0.0:
        out -= useg[0] * (kernel.tail(xs - g) - kernel.tail(xs - lo_edge))
    hi_edge = grid.x[jb] + half
    if h < hi_edge and useg[-1] != 0.0:
        out -= useg[-1] * (kernel.tail(xs - hi_edge) - kernel.tail(xs - h))
    np.maximum(out, 0.0, out=out)
    return out


def _solve_density_for_paths(phi, grid, times, g_path, h_path, kernel, growth, stencil,
                             *, d, inner_tol=1e-13, inner_max_iter=200):
    """Fixed point of the frozen-convolution ODE system along given front paths.

    phi holds the previous density iterate, one row per window time.  Each
    node in the final domain integrates its ODE from its activation time,
    with the convolution term taken from phi and interpolated linearly in
    time for nodes that activate between grid times.
    """
    m = len(times) - 1
    dt = float(times[1] - times[0])
    ia, ib = active_range(grid, g_path[-1], h_path[-1])
    xs = grid.x[ia : ib + 1]
    t_right = _crossing_times(h_path, times, xs, +1)
    t_left = _crossing_times(g_path, times, xs, -1)
    t_act = np.minimum(t_right, t_left)
    ia0, ib0 = active_range(grid, g_path[0], h_path[0])
    t_act[(xs >= grid.x[ia0] - 1e-15) & (xs <= grid.x[ib0] + 1e-15)] = times[0]

    inner_iters = 0
    for _ in range(inner_max_iter):
        inner_iters += 1
        conv = np.empty((m + 1, ib - ia + 1))
        for j in range(m + 1):
            conv[j] = _conv_segment(phi[j], grid, g_path[j], h_path[j], kernel,
                                    stencil, ia, ib)
        v = np.zeros_like(phi)
        v[0] = phi[0]
        for j in range(m):
            started = t_act <= times[j] + 1e-15
            starting = (~started) & (t_act < times[j + 1] - 1e-15)
            cur = v[j, ia : ib + 1]
            cj = conv[j]
            f = growth.rate(times[j], xs, np.maximum(cur, 0.0))
            nxt = np.where(started, cur + dt * (d * (cj - cur) + f), 0.0)
            if np.any(starting):
                # partial first step from the interpolated activation time
                frac = (t_act[starting] - times[j]) / dt
                c_at = (1.0 - frac) * cj[starting] + frac * conv[j + 1][starting]
                nxt[starting] = (times[j + 1] - t_act[starting]) * d * c_at
            v[j + 1, ia : ib + 1] = nxt
        delta = float(np.max(np.abs(v - phi)))
        phi = v
        if delta < inner_tol:
            break
    return phi, inner_iters


def picard_window(
    state: SimState,
    cfg: SolverConfig,
    kernel: KernelSpec,
    growth: GrowthSpec,
    stencil: Optional[Stencil] = None,
    *,
    window: Optional[float] = None,
    inner_tol: float = 1e-13,
    inner_max_iter: int = 200,
) -> tuple[SimState, PicardReport]:
    """Advance one window by the contraction construction.

    Outer iteration: freeze front paths (g_j, h_j) on the window time grid,
    solve the density for those paths, then rebuild the paths from cumulative
    fluxes of that density; repeat until successive paths differ by less than
    picard_tol in sup norm.  The inner solve integrates the parametrized ODE
    of each node from its activation time (the linear-interpolation crossing
    time of the front through the node), with the convolution term frozen
    from the previous density iterate and interpolated linearly in time.

    Raises NoContraction when the outer residuals fail to shrink within
    picard_max_iter iterations, the sign that the window is too long.
    """
    if stencil is None:
        stencil = solver_stencil(kernel, state.grid.dx)
    if window is None:
        window = cfg.picard_window
    grid = state.grid
    dt = cfg.dt
    m = max(1, int(round(window / dt)))
    times = state.t + dt * np.arange(m + 1)
    support = kernel.support

    g_path = np.full(m + 1, state.g)
    h_path = np.full(m + 1, state.h)

    # density iterate: hold the initial profile constant across the window
    phi = np.tile(state.u, (m + 1, 1))
    residuals: list[float] = []
    factors: list[float] = []
    inner_counts: list[int] = []
    for _outer in range(cfg.picard_max_iter):
        phi, inner_iters = _solve_density_for_paths(
            phi, grid, times, g_path, h_path, kernel, growth, stencil,
            d=cfg.d, inner_tol=inner_tol, inner_max_iter=inner_max_iter)
        inner_counts.append(inner_iters)
        flux_r = np.empty(m)
        flux_l = np.empty(m)
        for j in range(m):
            probe = SimState(grid=grid, t=float(times[j]), g=float(g_path[j]),
                             h=float(h_path[j]), u=phi[j])
            flux_l[j] = boundary_flux(probe, kernel, "left")
            flux_r[j] = boundary_flux(probe, kernel, "right")
        h_new = state.h + cfg.mu * dt * np.concatenate([[0.0], np.cumsum(flux_r)])
        g_new = state.g - cfg.mu * dt * np.concatenate([[0.0], np.cumsum(flux_l)])
        res = float(max(np.max(np.abs(h_new - h_path)), np.max(np.abs(g_new - g_path))))
        residuals.append(res)
        if len(residuals) >= 2 and residuals[-2] > 0:
            factors.append(res / residuals[-2])
        g_path, h_path = g_new, h_new
        if h_path[-1] > grid.xmax - support or g_path[-1] < grid.xmin + support:
            raise WindowExit(float(times[-1]))
        if res < cfg.picard_tol:
            break
    else:
        raise NoContraction(
            f"front paths did not converge within {cfg.picard_max_iter} iterations "
            f"(last residuals {residuals[-3:]}); shorten the window"
        )

    u_end = phi[-1].copy()
    ia, ib = active_range(grid, float(g_path[-1]), float(h_path[-1]))
    lowest = float(np.min(u_end[ia : ib + 1]))
    if lowest < -1e-12:
        raise StabilityViolation(float(times[-1]), f"min u = {lowest!r}")
    np.maximum(u_end, 0.0, out=u_end)
    end = SimState(grid=grid, t=float(times[-1]), g=float(g_path[-1]),
                   h=float(h_path[-1]), u=u_end)
    report = PicardReport(iterations=len(residuals), residuals=residuals,
                          contraction_factors=factors, inner_iterations=inner_counts)
    return end, report
