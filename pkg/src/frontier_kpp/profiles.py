"""Admissible initial data: positive inside (-h0, h0), zero at the ends."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = ["InitialProfile", "CosineBump", "Parabola", "TabulatedProfile",
           "profile_from_config"]


class InitialProfile:
    """Callable initial density with its support radius h0."""

    h0: float

    def __call__(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class CosineBump(InitialProfile):
    """amplitude * cos(pi x / (2 h0)) on [-h0, h0]."""

    h0: float
    amplitude: float

    def __post_init__(self):
        if not (self.h0 > 0 and self.amplitude > 0):
            raise DomainError(f"cosine bump needs h0 > 0 and amplitude > 0, got {self}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= self.h0
        return np.where(inside, self.amplitude * np.cos(np.pi * x / (2.0 * self.h0)), 0.0)


@dataclass(frozen=True)
class Parabola(InitialProfile):
    """amplitude * (1 - (x/h0)^2) on [-h0, h0]."""

    h0: float
    amplitude: float

    def __post_init__(self):
        if not (self.h0 > 0 and self.amplitude > 0):
            raise DomainError(f"parabola needs h0 > 0 and amplitude > 0, got {self}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= self.h0
        return np.where(inside, self.amplitude * (1.0 - (x / self.h0) ** 2), 0.0)


@dataclass(frozen=True, eq=False)
class TabulatedProfile(InitialProfile):
    """Piecewise-linear profile from (x, u0) samples spanning [-h0, h0]."""

    h0: float
    xs: np.ndarray = field(repr=False)
    us: np.ndarray = field(repr=False)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        us = np.asarray(self.us, dtype=float)
        if xs.ndim != 1 or xs.shape != us.shape or xs.size < 3:
            raise DomainError("tabulated profile needs matching 1-d arrays with >= 3 samples")
        if np.any(np.diff(xs) <= 0):
            raise DomainError("tabulated profile grid must be strictly increasing")
        if abs(xs[0] + self.h0) > 1e-9 or abs(xs[-1] - self.h0) > 1e-9:
            raise DomainError(f"tabulated profile must span [-h0, h0] = [{-self.h0}, {self.h0}]")
        scale = float(np.max(us))
        if abs(us[0]) > 1e-9 * max(1.0, scale) or abs(us[-1]) > 1e-9 * max(1.0, scale):
            raise DomainError("tabulated profile must vanish at +-h0")
        if np.any(us[1:-1] <= 0):
            raise DomainError("tabulated profile must be positive strictly inside (-h0, h0)")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "us", us)

    def __eq__(self, other):
        return (
            isinstance(other, TabulatedProfile)
            and self.h0 == other.h0
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.us, other.us)
        )

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.us, left=0.0, right=0.0)


def profile_from_config(cfg: dict, h0: float, *, base_dir=None) -> InitialProfile:
    if not isinstance(cfg, dict):
        raise DomainError("init section must be a mapping")
    family = cfg.get("family")
    if family == "cosine":
        return CosineBump(h0=h0, amplitude=float(cfg["amplitude"]))
    if family == "parabola":
        return Parabola(h0=h0, amplitude=float(cfg["amplitude"]))
    if family == "tabulated":
        import os

        path = cfg["path"]
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        data = np.loadtxt(path, delimiter=",", comments="#")
        if data.ndim != 2 or data.shape[1] != 2:
            raise DomainError(f"tabulated profile file {path} must have two columns x,u0")
        return TabulatedProfile(h0=h0, xs=data[:, 0], us=data[:, 1])
    raise DomainError(f"unknown init family {family!r}")
