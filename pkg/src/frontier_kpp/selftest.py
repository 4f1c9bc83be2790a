"""Built-in quick checks behind the `selftest` subcommand.

A curated subset of the cheap documented examples, runnable in seconds
without pytest; prints one line per check.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NoCriticalLength
from .fixed_domain import evolve_fixed
from .grids import SimState, apply_nonlocal, build_grid, initial_state
from .growth import Logistic, ZeroGrowth, derived_constants, growth_eval
from .kernels import (Laplace, TopHat, TruncatedGaussian, discretize_kernel,
                      interval_mass, kernel_eval, solver_stencil, tail_mass)
from .profiles import CosineBump
from .solver import SolverConfig, boundary_flux, integrate, picard_window
from .spectral import find_ell_star, lambda_p


def _checks():
    tophat = TopHat(1.0)

    yield "tophat density at 0 is 1/2", lambda: abs(kernel_eval(tophat, 0.0) - 0.5) < 1e-15
    yield "tophat density outside support is 0", lambda: kernel_eval(tophat, 2.0) == 0.0
    yield "laplace density at 0 is 1/2", \
        lambda: abs(kernel_eval(Laplace(1.0), 0.0) - 0.5) < 1e-15
    yield "tail mass at 0 is 1/2 by symmetry", \
        lambda: abs(tail_mass(TruncatedGaussian(1.0, 4.0), 0.0) - 0.5) < 1e-12
    yield "interval masses add up", lambda: abs(
        interval_mass(tophat, -0.3, 0.2) + interval_mass(tophat, 0.2, 0.9)
        - interval_mass(tophat, -0.3, 0.9)) < 1e-14
    yield "stencil weights are symmetric and sum to 1", lambda: (
        (lambda s: np.array_equal(s.weights, s.weights[::-1])
         and abs(s.weights.sum() - 1.0) < 1e-12)(discretize_kernel(tophat, 0.05, 20)))

    def logistic_constants():
        c = derived_constants(Logistic(2.0, 1.0))
        return c.fprime0 == 2.0 and c.v0 == 2.0 and c.k0 == 2.0

    yield "logistic derived constants", logistic_constants
    yield "growth vanishes at u=0", lambda: growth_eval(Logistic(1.0, 1.0), 0, 0, 0.0) == 0.0

    def constant_state_operator():
        grid = build_grid(3.0, 3.0, 0.05)
        u = np.zeros(grid.n + 1)
        ia, ib = grid.node_index(-3.0) + 1, grid.node_index(3.0) - 1
        u[ia:ib + 1] = 0.7
        state = SimState(grid=grid, t=0.0, g=-3.0, h=3.0, u=u)
        out = apply_nonlocal(solver_stencil(tophat, 0.05), state, d=1.0, kernel=tophat)
        mid = grid.node_index(0.0)
        return abs(out[mid]) < 1e-12  # kernel support sits strictly inside (g, h) there

    yield "nonlocal operator vanishes on interior constants", constant_state_operator

    def flux_symmetry():
        grid = build_grid(1.0, 3.0, 0.05)
        state = initial_state(grid, 1.0, CosineBump(1.0, 1.0))
        left = boundary_flux(state, tophat, "left")
        right = boundary_flux(state, tophat, "right")
        return abs(left - right) < 1e-12 and right > 0

    yield "boundary fluxes symmetric for even data", flux_symmetry

    def short_run_invariants():
        grid = build_grid(1.0, 3.0, 0.05)
        state = initial_state(grid, 1.0, CosineBump(1.0, 1.0))
        cfg = SolverConfig(d=1.0, mu=1.0, dt=1e-3, t_end=0.2, snapshot_every=50)
        traj = integrate(state, cfg, tophat, Logistic(1.0, 1.0))
        return (np.all(np.diff(traj.h) > 0) and np.all(np.diff(traj.g) < 0)
                and np.all(traj.sup_u <= max(traj.sup_u0, 1.0) + 1e-8)
                and np.all(traj.min_u_interior > 0))

    yield "short run keeps monotone fronts and bounds", short_run_invariants

    def picard_contracts():
        grid = build_grid(1.0, 3.0, 0.05)
        state = initial_state(grid, 1.0, CosineBump(1.0, 1.0))
        cfg = SolverConfig(d=1.0, mu=1.0, dt=1e-3, t_end=0.05, mode="picard")
        _, report = picard_window(state, cfg, tophat, Logistic(1.0, 1.0))
        return report.contraction_factors and max(report.contraction_factors) < 1.0

    yield "contraction mode contracts", picard_contracts

    def eigen_limits():
        small = lambda_p(1.0, (0.0, 0.01), tophat, 64).lambda_p
        big = lambda_p(1.0, (0.0, 200.0), tophat, 800, tol=1e-3).lambda_p
        # the tophat saturates the bound d sup(J) ell exactly; allow roundoff
        return abs(small) <= 0.005 + 1e-12 and 0.98 < big <= 1.0

    yield "eigenvalue limits at short and long intervals", eigen_limits

    def ell_star_regimes():
        try:
            find_ell_star(1.0, 1.5, tophat)
        except NoCriticalLength:
            value = find_ell_star(1.0, 0.5, tophat, tol=1e-4)
            return value > 0
        return False

    yield "critical length exists iff f'(0) < d", ell_star_regimes

    def mass_balance_drift():
        grid = build_grid(1.0, 3.0, 0.05)
        state = initial_state(grid, 1.0, CosineBump(1.0, 1.0))
        cfg = SolverConfig(d=1.0, mu=0.2, dt=1e-3, t_end=1.0, snapshot_every=200)
        traj = integrate(state, cfg, tophat, ZeroGrowth())
        combo = traj.mass + (cfg.d / cfg.mu) * traj.width
        return abs(combo[-1] - combo[0]) < 1e-3 * combo[0]

    yield "pure-dispersal mass balance", mass_balance_drift

    def fixed_domain_decay():
        cfg = SolverConfig(d=1.0, mu=1.0, dt=0.02, t_end=60.0)
        run = evolve_fixed((-0.25, 0.25), lambda xs: np.full(xs.shape, 0.2), cfg,
                           tophat, Logistic(0.5, 1.0), 60.0, dx=0.01)
        return float(np.max(run.u_final)) < 1e-4

    yield "short fixed interval decays", fixed_domain_decay


def run_selftest() -> int:
    failures = 0
    for name, check in _checks():
        try:
            ok = bool(check())
        except Exception as exc:  # noqa: BLE001
            ok = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        status = "PASS" if ok else "FAIL"
        if not ok:
            failures += 1
        print(f"[{status}] {name}")
    print(f"{failures} failures" if failures else "all selftest checks passed")
    return failures
