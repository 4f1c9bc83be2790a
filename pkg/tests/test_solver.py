"""Free-boundary solver: flux laws, stepping, invariants, and both modes."""

import numpy as np
import pytest

from frontier_kpp.errors import DomainError, NoContraction
from frontier_kpp.fixed_domain import evolve_fixed
from frontier_kpp.grids import SimState, active_range, build_grid, initial_state
from frontier_kpp.growth import Logistic, ZeroGrowth
from frontier_kpp.kernels import TopHat, solver_stencil
from frontier_kpp.profiles import CosineBump
from frontier_kpp.solver import (SolverConfig, _solve_density_for_paths, boundary_flux,
                                 integrate, picard_window, step_explicit)
from test_kernels import simpson_refined


def simpson_pieces(f, a, b, breaks=(), tol=1e-13):
    """Simpson refinement with panels split at known integrand breakpoints."""
    points = sorted({a, b, *(p for p in breaks if a < p < b)})
    return sum(simpson_refined(f, lo, hi, tol=tol)
               for lo, hi in zip(points[:-1], points[1:]) if hi > lo)


def flux_oracle_right(state, kernel, tol=1e-13):
    """2-D quadrature of the double flux integral for the cell-constant density.

    For each active cell, Simpson the outer integral of
    u_j * int_h^{h+R} J(x-y) dy over the clipped cell, the inner integral
    itself done by Simpson; panels are aligned with the kernel support
    edges, where the tophat density jumps.
    """
    grid = state.grid
    ia, ib = active_range(grid, state.g, state.h)
    half = 0.5 * grid.dx
    support = kernel.support

    def inner_scalar(x):
        return simpson_pieces(lambda y: kernel.density(x - y), state.h,
                              state.h + support,
                              breaks=(x - support, x + support), tol=tol)

    def inner(xs):
        return np.array([inner_scalar(x) for x in np.atleast_1d(xs)])

    total = 0.0
    for j in range(ia, ib + 1):
        lo = max(state.g, grid.x[j] - half)
        hi = min(state.h, grid.x[j] + half)
        total += state.u[j] * simpson_pieces(inner, lo, hi,
                                             breaks=(state.h - support,
                                                     state.h + support), tol=tol)
    return total


def standard_setup(dx=0.025, margin=3.0, h0=1.0, amplitude=1.0):
    grid = build_grid(h0, margin, dx)
    state = initial_state(grid, h0, CosineBump(h0, amplitude))
    return grid, state


class TestBoundaryFlux:
    def test_zero_density(self, tophat):
        grid = build_grid(1.0, 3.0, 0.05)
        state = SimState(grid=grid, t=0.0, g=-1.0, h=1.0, u=np.zeros(grid.n + 1))
        assert boundary_flux(state, tophat, "left") == 0.0
        assert boundary_flux(state, tophat, "right") == 0.0

    def test_symmetric_state(self, any_kernel):
        _, state = standard_setup()
        left = boundary_flux(state, any_kernel, "left")
        right = boundary_flux(state, any_kernel, "right")
        assert right > 0
        assert abs(left - right) < 1e-12

    def test_constant_density_matches_2d_simpson(self, tophat):
        # u == 1 at the 79 interior nodes of (-1, 1) at n=80 cells
        grid = build_grid(1.0, 3.0, 2.0 / 80)
        u = np.zeros(grid.n + 1)
        ia, ib = active_range(grid, -1.0, 1.0)
        u[ia : ib + 1] = 1.0
        state = SimState(grid=grid, t=0.0, g=-1.0, h=1.0, u=u)
        got = boundary_flux(state, tophat, "right")
        want = flux_oracle_right(state, tophat)
        assert abs(got - want) < 1e-10, f"{got} vs oracle {want}"

    def test_clipped_fronts_match_2d_simpson(self, tophat):
        rng = np.random.default_rng(5)
        grid = build_grid(1.0, 3.0, 0.05)
        g, h = -0.987, 0.969
        u = np.zeros(grid.n + 1)
        ia, ib = active_range(grid, g, h)
        u[ia : ib + 1] = rng.uniform(0.2, 1.0, ib - ia + 1)
        state = SimState(grid=grid, t=0.0, g=g, h=h, u=u)
        got = boundary_flux(state, tophat, "right")
        want = flux_oracle_right(state, tophat)
        assert abs(got - want) < 1e-10


class TestStepExplicit:
    def test_zero_density_only_advances_time(self, tophat):
        grid = build_grid(1.0, 3.0, 0.05)
        state = SimState(grid=grid, t=0.0, g=-1.0, h=1.0, u=np.zeros(grid.n + 1))
        cfg = SolverConfig(d=1.0, mu=1.0, dt=1e-3, t_end=1.0)
        new = step_explicit(state, cfg, tophat, Logistic(1.0, 1.0))
        assert new.t == 1e-3 and new.g == -1.0 and new.h == 1.0
        assert np.array_equal(new.u, state.u)

    def test_single_step_front_displacement(self, tophat):
        # h(dt) - h0 must equal dt mu J_h(u0), J_h checked against the 2-D oracle
        grid, state = standard_setup(dx=0.01)
        cfg = SolverConfig(d=1.0, mu=1.0, dt=1e-3, t_end=1e-3)
        oracle = flux_oracle_right(state, tophat, tol=1e-12)
        new = step_explicit(state, cfg, tophat, Logistic(1.0, 1.0))
        assert abs((new.h - 1.0) - cfg.dt * cfg.mu * oracle) < 1e-8

    def test_newly_active_nodes_start_at_zero(self, tophat):
        grid, state = standard_setup(dx=0.05, amplitude=5.0)
        cfg = SolverConfig(d=1.0, mu=200.0, dt=1e-3, t_end=1.0)
        new = step_explicit(state, cfg, tophat, Logistic(1.0, 1.0))
        assert new.h > 1.0 + grid.dx  # fast fronts cross a node in one step
        ia, ib = active_range(grid, new.g, new.h)
        assert new.u[ib] == 0.0 and new.u[ia] == 0.0

    def test_stability_guard(self, tophat):
        grid, state = standard_setup()
        cfg = SolverConfig(d=1.0, mu=1.0, dt=0.4, t_end=1.0)
        with pytest.raises(DomainError):
            integrate(state, cfg, tophat, Logistic(1.0, 1.0))


class TestIntegrateInvariants:
    def run(self, mu=1.0, t_end=5.0, amplitude=1.0, dt=1e-3, growth=None, margin=4.0):
        grid, state = standard_setup(dx=0.025, margin=margin, amplitude=amplitude)
        cfg = SolverConfig(d=1.0, mu=mu, dt=dt, t_end=t_end, snapshot_every=200)
        return integrate(state, cfg, tophat_k, growth or Logistic(1.0, 1.0))

    def test_fronts_strictly_monotone(self):
        traj = self.run()
        assert np.all(np.diff(traj.h) > 0), "right front must strictly advance"
        assert np.all(np.diff(traj.g) < 0), "left front must strictly recede"

    def test_apriori_sup_bound(self):
        traj = self.run(amplitude=1.6)  # above the carrying value
        m0 = max(traj.sup_u0, 1.0)
        assert np.all(traj.sup_u <= m0 + 1e-8)
        assert np.all(traj.min_u_interior >= 0.0)

    def test_width_growth_bound(self):
        traj = self.run(mu=2.0)
        m0 = max(traj.sup_u0, 1.0)
        bound = 2.0 * traj.h0 * np.exp(traj.mu * m0 * traj.times) + 1e-6
        assert np.all(traj.width <= bound)

    def test_positivity_after_startup(self):
        traj = self.run(t_end=1.0, dt=1e-3)
        after = traj.times >= 5 * traj.dt
        assert np.all(traj.min_u_interior[after] > 0.0)

    def test_mass_balance_without_growth(self):
        traj = self.run(mu=0.2, t_end=5.0, growth=ZeroGrowth())
        combo = traj.mass + (traj.d / traj.mu) * traj.width
        drift = np.max(np.abs(combo - combo[0]))
        assert drift < 1e-3 * combo[0], f"relative drift {drift / combo[0]:.2e}"

    def test_dt_self_convergence(self):
        # first-order front error: halving dt roughly halves the deviation
        # from a dt/8 reference
        t_end = 0.5
        h_end = {}
        for dt in (2e-3, 1e-3, 2.5e-4):
            grid, state = standard_setup(dx=0.025)
            cfg = SolverConfig(d=1.0, mu=1.0, dt=dt, t_end=t_end, snapshot_every=10**9)
            h_end[dt] = integrate(state, cfg, tophat_k, Logistic(1.0, 1.0)).h[-1]
        err_coarse = abs(h_end[2e-3] - h_end[2.5e-4])
        err_fine = abs(h_end[1e-3] - h_end[2.5e-4])
        ratio = err_coarse / err_fine
        assert 2.0 * 0.75 < ratio < 2.0 * 1.25, f"convergence ratio {ratio:.3f}"

    def test_mu_monotonicity(self):
        grid, s1 = standard_setup(dx=0.025)
        _, s2 = standard_setup(dx=0.025)
        cfg = lambda mu: SolverConfig(d=1.0, mu=mu, dt=1e-3, t_end=3.0,  # noqa: E731
                                      snapshot_every=100)
        slow = integrate(s1, cfg(0.5), tophat_k, Logistic(1.0, 1.0))
        fast = integrate(s2, cfg(1.0), tophat_k, Logistic(1.0, 1.0))
        assert np.all(slow.h <= fast.h + 1e-8)
        assert np.all(slow.g >= fast.g - 1e-8)


class TestUpperSolutionComparison:
    def test_small_mu_run_stays_below_construction(self):
        # explicit decaying envelope built from the eigenpair on (-h1, h1):
        # for a tophat kernel and 2 h1 <= support the eigenfunction is
        # constant and lambda_1 = f'(0) - d + d h1, all known in closed form
        d, a = 1.0, 0.5
        h0, h1 = 0.3, 0.4
        lam1 = a - d + d * h1  # -0.1
        c1 = 0.5 * (1.0 + 1e-6)
        mu_low = -lam1 * (h1 - h0) / (8.0 * h1 * c1)
        mu = 0.9 * mu_low
        dx, dt, t_end = 0.02, 1e-3, 10.0

        grid, state = standard_setup(dx=dx, margin=2.0, h0=h0, amplitude=0.5)
        cfg = SolverConfig(d=d, mu=mu, dt=dt, t_end=t_end, snapshot_every=500)
        traj = integrate(state, cfg, tophat_k, Logistic(a, 1.0))

        hat_h = h0 + 2.0 * mu * h1 * c1 * (4.0 / -lam1) * (1.0 - np.exp(lam1 * traj.times / 4.0))
        assert np.all(traj.h <= hat_h + 1e-9)
        assert np.all(traj.g >= -hat_h - 1e-9)

        fixed = evolve_fixed((-h1, h1), CosineBump(h0, 0.5), cfg, tophat_k,
                             Logistic(a, 1.0), t_end, dx=dx,
                             record_every=500, conv_tol=0.0)
        # same node layout: compare on the sim grid at matching times
        idx = np.searchsorted(grid.x, fixed.nodes)
        assert np.allclose(grid.x[idx], fixed.nodes, atol=1e-12)
        for k, t in enumerate(traj.times):
            row = np.searchsorted(fixed.times, t)
            if row >= len(fixed.times) or fixed.times[row] != t:
                continue
            assert np.all(traj.profiles[k][idx] <= fixed.profiles[row] + 1e-9), \
                f"upper solution pierced at t={t}"


class TestPicardMode:
    def test_contraction_factors_below_one(self, tophat):
        _, state = standard_setup(dx=0.05)
        cfg = SolverConfig(d=1.0, mu=1.0, dt=1e-3, t_end=0.05, mode="picard")
        _, report = picard_window(state, cfg, tophat, Logistic(1.0, 1.0))
        assert report.contraction_factors, "need at least two residuals"
        assert max(report.contraction_factors) < 1.0
        drops = [report.residuals[i + 1] / report.residuals[i]
                 for i in range(len(report.residuals) - 1)]
        assert all(r < 1.0 for r in drops)

    def test_frozen_fronts_reproduce_fixed_domain(self, tophat):
        # the first outer iterate integrates the density on a frozen domain;
        # it must match the fixed-interval module to iteration tolerance
        h0, dx, dt = 1.0, 0.05, 1e-3
        grid, state = standard_setup(dx=dx, h0=h0)
        m = 50
        times = dt * np.arange(m + 1)
        phi = np.tile(state.u, (m + 1, 1))
        g_path = np.full(m + 1, -h0)
        h_path = np.full(m + 1, h0)
        stencil = solver_stencil(tophat, dx)
        phi, _ = _solve_density_for_paths(phi, grid, times, g_path, h_path, tophat,
                                          Logistic(1.0, 1.0), stencil, d=1.0,
                                          inner_tol=1e-13)
        cfg = SolverConfig(d=1.0, mu=1.0, dt=dt, t_end=m * dt)
        fixed = evolve_fixed((-h0, h0), CosineBump(h0, 1.0), cfg, tophat,
                             Logistic(1.0, 1.0), m * dt, dx=dx, conv_tol=0.0)
        ia, ib = active_range(grid, -h0, h0)
        assert np.allclose(grid.x[ia : ib + 1], fixed.nodes, atol=1e-12)
        diff = np.max(np.abs(phi[-1][ia : ib + 1] - fixed.u_final))
        assert diff < 1e-10, f"frozen-front density differs by {diff:.2e}"

    def test_modes_agree_over_half_unit(self, tophat):
        dt = 1e-3
        _, s_exp = standard_setup(dx=0.02)
        _, s_pic = standard_setup(dx=0.02)
        explicit = integrate(
            s_exp, SolverConfig(d=1.0, mu=1.0, dt=dt, t_end=0.5, snapshot_every=50),
            tophat, Logistic(1.0, 1.0))
        picard = integrate(
            s_pic, SolverConfig(d=1.0, mu=1.0, dt=dt, t_end=0.5, mode="picard",
                                picard_window=0.05, picard_tol=1e-10),
            tophat, Logistic(1.0, 1.0))
        assert abs(picard.h[-1] - explicit.h[-1]) <= 5 * dt
        assert abs(picard.g[-1] - explicit.g[-1]) <= 5 * dt
        du = np.max(np.abs(picard.final_state.u - explicit.final_state.u))
        assert du <= 5 * dt

    def test_no_contraction_reported(self, tophat):
        _, state = standard_setup(dx=0.05)
        cfg = SolverConfig(d=1.0, mu=1.0, dt=1e-3, t_end=0.05, mode="picard",
                           picard_max_iter=2, picard_tol=1e-14)
        with pytest.raises(NoContraction):
            picard_window(state, cfg, tophat, Logistic(1.0, 1.0))


tophat_k = TopHat(1.0)
