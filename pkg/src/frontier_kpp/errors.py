"""Exception taxonomy.

Two broad classes matter to callers: setup problems (bad configs, violated
model preconditions) and numerical failures (instability, non-convergence).
The CLI maps the former to exit code 1 and the latter to exit code 2.
"""

from __future__ import annotations


class FrontierKppError(Exception):
    """Base class for all package errors."""


class ConfigError(FrontierKppError):
    """Invalid configuration; carries the full list of violations."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SchemaError(ConfigError):
    """Unknown keys or wrong types in a config document."""


class DomainError(ConfigError):
    """Structurally valid input that violates a model precondition."""


class NoCriticalLength(FrontierKppError):
    """No finite critical length exists (growth rate at zero >= dispersal rate)."""


class NoThreshold(FrontierKppError):
    """No expansion-coefficient threshold exists for these parameters."""


class InvalidBracket(FrontierKppError):
    """Eigenvalue sign precondition for the small-coefficient bound failed."""


class NumericalError(FrontierKppError):
    """Base class for runtime numerical failures."""


class StabilityViolation(NumericalError):
    """Density went negative beyond tolerance; the step size is too large."""

    def __init__(self, t, detail=""):
        self.t = t
        super().__init__(f"stability violation at t={t!r}" + (f": {detail}" if detail else ""))


class WindowExit(NumericalError):
    """A front came within one kernel radius of the computational window edge."""

    def __init__(self, t, trajectory=None):
        self.t = t
        self.trajectory = trajectory
        super().__init__(f"front reached window edge at t={t!r}")


class NoConvergence(NumericalError):
    """Iteration failed to reach the requested tolerance."""


class NoContraction(NumericalError):
    """Fixed-point iterates stopped contracting; shrink the window length."""


class NotConverged(NumericalError):
    """Time marching did not settle onto a steady state within the horizon."""


class BracketFailure(NumericalError):
    """Root bracketing failed; the discretization is too coarse."""
