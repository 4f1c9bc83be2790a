"""Grid construction, state handling, and the discrete nonlocal operator."""

import numpy as np
import pytest

from frontier_kpp.errors import DomainError
from frontier_kpp.grids import (SimState, active_range, apply_nonlocal, build_grid,
                                initial_state, total_mass)
from frontier_kpp.kernels import TopHat, interval_mass, solver_stencil
from frontier_kpp.profiles import CosineBump


def make_state(grid, g, h, fill=None, rng=None):
    u = np.zeros(grid.n + 1)
    ia, ib = active_range(grid, g, h)
    if fill is not None:
        u[ia : ib + 1] = fill
    if rng is not None:
        u[ia : ib + 1] = rng.uniform(0.1, 1.0, ib - ia + 1)
    return SimState(grid=grid, t=0.0, g=g, h=h, u=u)


def dense_operator_oracle(state, kernel, d):
    """Direct double loop over clipped cells; independent of the convolution."""
    grid = state.grid
    ia, ib = active_range(grid, state.g, state.h)
    half = 0.5 * grid.dx
    out = np.zeros_like(state.u)
    for i in range(ia, ib + 1):
        acc = 0.0
        for j in range(ia, ib + 1):
            lo = max(state.g, grid.x[j] - half)
            hi = min(state.h, grid.x[j] + half)
            acc += state.u[j] * interval_mass(kernel, grid.x[i] - hi, grid.x[i] - lo)
        out[i] = d * (acc - state.u[i])
    return out


class TestBuildGrid:
    def test_documented_window(self):
        grid = build_grid(1.0, 9.0, 0.05)
        assert grid.xmin == -10.0 and grid.xmax == 10.0
        assert grid.n == 400

    def test_rejects_coarse_dx(self):
        with pytest.raises(DomainError):
            build_grid(1.0, 9.0, 2.0)

    def test_node_positions_exact(self):
        grid = build_grid(1.0, 4.0, 0.1)
        i = np.arange(grid.n + 1)
        assert np.array_equal(grid.x, grid.xmin + 0.1 * i - (grid.xmin + 0.1 * i - grid.x))
        # node at 0 exactly
        assert grid.x[grid.node_index(0.0)] == 0.0

    def test_initial_state_validates_profile(self):
        grid = build_grid(1.0, 4.0, 0.05)
        state = initial_state(grid, 1.0, CosineBump(1.0, 2.0))
        ia, ib = active_range(grid, state.g, state.h)
        assert np.all(state.u[ia : ib + 1] > 0)
        assert state.u[ia - 1] == 0.0 and state.u[ib + 1] == 0.0

        bad = lambda xs: np.ones_like(xs)  # noqa: E731  (does not vanish at fronts)
        with pytest.raises(DomainError):
            initial_state(grid, 1.0, bad)


class TestApplyNonlocal:
    def test_zero_density_gives_zero(self, tophat):
        grid = build_grid(1.0, 3.0, 0.05)
        state = make_state(grid, -1.0, 1.0, fill=0.0)
        out = apply_nonlocal(solver_stencil(tophat, 0.05), state, d=1.0, kernel=tophat)
        assert np.all(out == 0.0)

    def test_constant_interior_value(self, tophat):
        # at a node whose kernel support sits strictly inside (g, h) a
        # constant density is invariant: the operator value is d c (sum w - 1)
        grid = build_grid(3.0, 3.0, 0.05)
        state = make_state(grid, -3.0, 3.0, fill=0.7)
        stencil = solver_stencil(tophat, 0.05)
        out = apply_nonlocal(stencil, state, d=1.3, kernel=tophat)
        mid = grid.node_index(0.0)
        expected = 1.3 * 0.7 * (stencil.weights.sum() - 1.0)
        assert abs(out[mid] - expected) < 1e-12 and abs(out[mid]) < 1e-12

    def test_matches_dense_oracle(self, any_kernel):
        rng = np.random.default_rng(7)
        grid = build_grid(1.2, 3.0, 2.4 / 60)
        state = make_state(grid, -1.2 + 0.013, 1.2 - 0.007, rng=rng)
        stencil = solver_stencil(any_kernel, grid.dx)
        got = apply_nonlocal(stencil, state, d=1.7, kernel=any_kernel)
        want = dense_operator_oracle(state, any_kernel, 1.7)
        assert np.max(np.abs(got - want)) < 1e-12

    def test_linearity(self, tophat):
        rng = np.random.default_rng(3)
        grid = build_grid(1.0, 3.0, 0.04)
        s1 = make_state(grid, -1.0, 1.3, rng=rng)
        s2 = make_state(grid, -1.0, 1.3, rng=rng)
        stencil = solver_stencil(tophat, grid.dx)
        combo = SimState(grid=grid, t=0.0, g=-1.0, h=1.3,
                         u=0.6 * s1.u + 2.0 * s2.u)
        lhs = apply_nonlocal(stencil, combo, d=1.0, kernel=tophat)
        rhs = (0.6 * apply_nonlocal(stencil, s1, d=1.0, kernel=tophat)
               + 2.0 * apply_nonlocal(stencil, s2, d=1.0, kernel=tophat))
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_sign_at_interior_zeros(self, any_kernel):
        # discrete engine of the strong maximum principle: where u touches 0
        # inside the range, the operator pushes up
        rng = np.random.default_rng(11)
        grid = build_grid(1.0, 3.0, 0.05)
        state = make_state(grid, -1.0, 1.0, rng=rng)
        ia, ib = active_range(grid, state.g, state.h)
        zeros = [ia + 3, ia + (ib - ia) // 2, ib - 1]
        state.u[zeros] = 0.0
        out = apply_nonlocal(solver_stencil(any_kernel, grid.dx), state, d=1.0,
                             kernel=any_kernel)
        assert np.all(out[zeros] >= 0.0)
        assert out[zeros[1]] > 0.0  # neighbours within reach are positive

    def test_even_symmetry(self, tophat):
        grid = build_grid(1.0, 3.0, 0.05)
        state = initial_state(grid, 1.0, CosineBump(1.0, 1.0))
        out = apply_nonlocal(solver_stencil(tophat, grid.dx), state, d=1.0, kernel=tophat)
        assert np.max(np.abs(out - out[::-1])) < 1e-12

    def test_clipped_front_cells(self, tophat):
        # fronts cutting through the outermost active cells change the oracle
        # and the operator identically
        rng = np.random.default_rng(23)
        grid = build_grid(1.0, 3.0, 0.1)
        state = make_state(grid, -1.0 + 0.061, 1.0 - 0.043, rng=rng)
        stencil = solver_stencil(tophat, grid.dx)
        got = apply_nonlocal(stencil, state, d=1.0, kernel=tophat)
        want = dense_operator_oracle(state, tophat, 1.0)
        assert np.max(np.abs(got - want)) < 1e-12


class TestMass:
    def test_constant_density_mass(self, tophat):
        # fronts cut through the outermost active cells, so the covered
        # region is exactly (g, h)
        grid = build_grid(1.0, 3.0, 0.05)
        state = make_state(grid, -0.96, 0.97, fill=2.0)
        assert abs(total_mass(state) - 2.0 * (0.96 + 0.97)) < 1e-12

    def test_dead_strip_carries_no_mass(self, tophat):
        # a front in the half-cell beyond the outermost active node leaves a
        # strip whose (inactive) node holds zero density
        grid = build_grid(1.0, 3.0, 0.05)
        state = make_state(grid, -0.98, 0.97, fill=2.0)
        assert abs(total_mass(state) - 2.0 * (0.975 + 0.97)) < 1e-12

    def test_active_range_strict(self):
        grid = build_grid(1.0, 3.0, 0.25)
        ia, ib = active_range(grid, -0.5, 0.5)
        assert grid.x[ia] == -0.25 and grid.x[ib] == 0.25
