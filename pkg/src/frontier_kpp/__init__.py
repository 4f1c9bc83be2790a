"""Numerical laboratory for a nonlocal-dispersal Fisher-KPP model with free boundaries.

The population density u(t, x) lives on a moving range (g(t), h(t)) and
evolves by d (J*u - u) + f(u); each front advances proportionally (factor
mu) to the dispersal mass it loses outward.  The package simulates the
coupled system, computes the principal eigenvalues and critical thresholds
(ell*, mu_lower, mu*) of the associated linear operator, and classifies
runs as spreading or vanishing.
"""

__version__ = "0.1.0"

from .classify import (ClassifyRules, Classification, RunSetup, Thresholds, Verdict,
                       classify_run, compute_mu_lower, find_mu_star, run_and_classify,
                       sweep)
from .config import RunConfig, config_hash, load_config, parse_config, serialize_config
from .errors import (BracketFailure, ConfigError, DomainError, FrontierKppError,
                     InvalidBracket, NoContraction, NoConvergence, NoCriticalLength,
                     NoThreshold, NotConverged, NumericalError, SchemaError,
                     StabilityViolation, WindowExit)
from .fixed_domain import FixedRun, evolve_fixed, fixed_nodes, steady_state
from .grids import Grid, SimState, apply_nonlocal, build_grid, initial_state, total_mass
from .growth import (Autonomous, DerivedConstants, GrowthSpec, Logistic, SpaceTime,
                     ZeroGrowth, derived_constants, growth_eval)
from .kernels import (KernelSpec, Laplace, Stencil, Tabulated, TopHat, Triangle,
                      TruncatedGaussian, discretize_kernel, interval_mass, kernel_eval,
                      solver_stencil, tail_integral, tail_mass)
from .profiles import CosineBump, InitialProfile, Parabola, TabulatedProfile
from .solver import (PicardReport, SnapshotRow, SolverConfig, Trajectory, boundary_flux,
                     integrate, picard_window, step_explicit)
from .spectral import SpectralResult, assemble_operator, find_ell_star, lambda_p
