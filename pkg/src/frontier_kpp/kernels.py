"""Dispersal kernels: symmetric unit-mass densities with exact tail masses.

The flux laws and every quadrature in the solver consume integrals of the
kernel over intervals, never point samples.  Each family therefore exposes,
besides the density J itself, the tail mass K(z) = int_z^inf J and its
antiderivative Q(z) = int_0^z K(s) ds in closed form, so per-cell weights,
boundary fluxes and mass balances hold to roundoff rather than to the order
of a sampling rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import DomainError

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT_PI_2 = math.sqrt(math.pi / 2.0)


class KernelSpec:
    """Base class for symmetric dispersal kernels with total mass one.

    Subclasses implement the one-sided pieces on z >= 0; symmetry supplies
    the rest: K(-z) = 1 - K(z) and Q(-z) = -z + Q(z)... see tail_integral.
    Instances are immutable and safe to share between concurrent runs.
    """

    @property
    def support(self) -> float:
        """Radius of the support (may be inf for the untruncated Laplace)."""
        raise NotImplementedError

    def _density_abs(self, z):
        raise NotImplementedError

    def _tail_abs(self, z):
        raise NotImplementedError

    def _tail_integral_abs(self, z):
        raise NotImplementedError

    def density(self, x):
        z = np.abs(np.asarray(x, dtype=float))
        out = np.where(z <= self.support, self._density_abs(np.minimum(z, self.support)), 0.0)
        return float(out) if out.ndim == 0 else out

    def tail(self, z):
        za = np.asarray(z, dtype=float)
        pos = self._tail_abs(np.abs(za))
        out = np.where(za >= 0.0, pos, 1.0 - pos)
        return float(out) if out.ndim == 0 else out

    def tail_integral(self, z):
        za = np.asarray(z, dtype=float)
        pos = self._tail_integral_abs(np.abs(za))
        # Q(z) = int_0^z K; for z < 0 use K(-s) = 1 - K(s):  Q(z) = z + Q(-z)
        out = np.where(za >= 0.0, pos, za + pos)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=True)
class TopHat(KernelSpec):
    """Uniform density 1/(2L) on [-L, L]."""

    halfwidth: float

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise DomainError(f"tophat halfwidth must be positive, got {self.halfwidth}")

    @property
    def support(self):
        return self.halfwidth

    def _density_abs(self, z):
        return np.full_like(z, 1.0 / (2.0 * self.halfwidth))

    def _tail_abs(self, z):
        L = self.halfwidth
        return np.where(z >= L, 0.0, (L - np.minimum(z, L)) / (2.0 * L))

    def _tail_integral_abs(self, z):
        L = self.halfwidth
        zc = np.minimum(z, L)
        return zc / 2.0 - zc * zc / (4.0 * L)


@dataclass(frozen=True, eq=True)
class Triangle(KernelSpec):
    """Hat density (L - |x|)/L^2 on [-L, L]."""

    halfwidth: float

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise DomainError(f"triangle halfwidth must be positive, got {self.halfwidth}")

    @property
    def support(self):
        return self.halfwidth

    def _density_abs(self, z):
        L = self.halfwidth
        return (L - z) / (L * L)

    def _tail_abs(self, z):
        L = self.halfwidth
        t = L - np.minimum(z, L)
        return t * t / (2.0 * L * L)

    def _tail_integral_abs(self, z):
        L = self.halfwidth
        zc = np.minimum(z, L)
        t = L - zc
        return (L**3 - t**3) / (6.0 * L * L)


@dataclass(frozen=True, eq=True)
class Laplace(KernelSpec):
    """Two-sided exponential (rate/2) e^{-rate |x|}, truncated at |x| = radius.

    Truncation renormalizes the density so the total mass stays exactly one;
    radius=inf keeps the analytic untruncated form.
    """

    rate: float
    radius: float = math.inf

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"laplace rate must be positive, got {self.rate}")
        if not self.radius > 0:
            raise DomainError(f"laplace radius must be positive, got {self.radius}")

    @property
    def support(self):
        return self.radius

    def _norm(self):
        if math.isinf(self.radius):
            return 1.0
        return 1.0 / (1.0 - math.exp(-self.rate * self.radius))

    def _edge(self):
        return 0.0 if math.isinf(self.radius) else math.exp(-self.rate * self.radius)

    def _density_abs(self, z):
        return self._norm() * (self.rate / 2.0) * np.exp(-self.rate * z)

    def _tail_abs(self, z):
        zc = np.minimum(z, self.radius)
        return self._norm() * 0.5 * (np.exp(-self.rate * zc) - self._edge())

    def _tail_integral_abs(self, z):
        lam = self.rate
        zc = np.minimum(z, self.radius)
        return self._norm() * 0.5 * ((1.0 - np.exp(-lam * zc)) / lam - zc * self._edge())


@dataclass(frozen=True, eq=True)
class TruncatedGaussian(KernelSpec):
    """Gaussian of width sigma cut at |x| = radius and renormalized to mass one."""

    sigma: float
    radius: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"gaussian sigma must be positive, got {self.sigma}")
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise DomainError(f"gaussian radius must be positive and finite, got {self.radius}")

    @property
    def support(self):
        return self.radius

    def _edge_erf(self):
        return erf(self.radius / (self.sigma * _SQRT2))

    def _norm(self):
        return 1.0 / (self.sigma * _SQRT_2PI * self._edge_erf())

    def _density_abs(self, z):
        return self._norm() * np.exp(-z * z / (2.0 * self.sigma**2))

    def _tail_abs(self, z):
        zc = np.minimum(z, self.radius)
        c = self._norm() * self.sigma * _SQRT_PI_2
        return c * (self._edge_erf() - erf(zc / (self.sigma * _SQRT2)))

    def _tail_integral_abs(self, z):
        zc = np.minimum(z, self.radius)
        s2 = self.sigma**2
        # int_0^z K = z K(z) + int_0^z s J(s) ds  (integration by parts)
        return zc * self._tail_abs(zc) + self._norm() * s2 * (1.0 - np.exp(-zc * zc / (2.0 * s2)))


@dataclass(frozen=True, eq=False)
class Tabulated(KernelSpec):
    """Piecewise-linear kernel from samples on a symmetric grid.

    Input samples are symmetrized, (J(x)+J(-x))/2, then renormalized so the
    piecewise-linear interpolant has total mass exactly one.  Tail masses and
    their antiderivative are evaluated exactly for the interpolant (K is
    piecewise quadratic, so three-point Simpson per segment is exact).
    """

    xs: np.ndarray = field(repr=False)
    js: np.ndarray = field(repr=False)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        js = np.asarray(self.js, dtype=float)
        if xs.ndim != 1 or xs.shape != js.shape or xs.size < 3:
            raise DomainError("tabulated kernel needs matching 1-d arrays with >= 3 samples")
        if np.any(np.diff(xs) <= 0):
            raise DomainError("tabulated kernel grid must be strictly increasing")
        if np.max(np.abs(xs + xs[::-1])) > 1e-9 * max(1.0, np.max(np.abs(xs))):
            raise DomainError("tabulated kernel grid must be symmetric about 0")
        if np.any(js < 0):
            raise DomainError("tabulated kernel samples must be nonnegative")
        js = 0.5 * (js + js[::-1])
        total = np.trapezoid(js, xs)
        if total <= 0:
            raise DomainError("tabulated kernel has zero total mass")
        js = js / total
        if np.interp(0.0, xs, js) <= 0:
            raise DomainError("tabulated kernel must be positive at 0")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "js", js)
        # exact tail mass of the interpolant at every sample point
        seg = 0.5 * (js[:-1] + js[1:]) * np.diff(xs)
        tails = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        object.__setattr__(self, "_tails", tails)

    def __eq__(self, other):
        return (
            isinstance(other, Tabulated)
            and np.array_equal(self.xs, other.xs)
            and np.array_equal(self.js, other.js)
        )

    @property
    def support(self):
        return float(self.xs[-1])

    def density(self, x):
        out = np.interp(np.asarray(x, dtype=float), self.xs, self.js, left=0.0, right=0.0)
        return float(out) if out.ndim == 0 else out

    def tail(self, z):
        za = np.asarray(z, dtype=float)
        zc = np.clip(za, self.xs[0], self.xs[-1])
        k = np.clip(np.searchsorted(self.xs, zc, side="right") - 1, 0, self.xs.size - 2)
        x1 = self.xs[k + 1]
        # K(z) = K(x_{k+1}) + integral of the linear piece from z to x_{k+1}
        jz = np.interp(zc, self.xs, self.js)
        out = self._tails[k + 1] + 0.5 * (x1 - zc) * (jz + self.js[k + 1])
        out = np.where(za <= self.xs[0], 1.0, np.where(za >= self.xs[-1], 0.0, out))
        return float(out) if out.ndim == 0 else out

    def tail_integral(self, z):
        za = np.asarray(z, dtype=float)
        out = self._cumtail(za) - self._cumtail(np.zeros_like(za))
        return float(out) if out.ndim == 0 else out

    def _cumtail(self, z):
        """int_{x_0}^{z} K(s) ds, with K extended by 1 left and 0 right."""
        xs = self.xs
        if not hasattr(self, "_qs"):
            mids = 0.5 * (xs[:-1] + xs[1:])
            seg = (np.diff(xs) / 6.0) * (
                self.tail(xs[:-1]) + 4.0 * self.tail(mids) + self.tail(xs[1:])
            )
            object.__setattr__(self, "_qs", np.concatenate([[0.0], np.cumsum(seg)]))
        zc = np.clip(z, xs[0], xs[-1])
        k = np.clip(np.searchsorted(xs, zc, side="right") - 1, 0, xs.size - 2)
        x0 = xs[k]
        h = zc - x0
        part = (h / 6.0) * (self.tail(x0) + 4.0 * self.tail(x0 + 0.5 * h) + self.tail(zc))
        out = self._qs[k] + part
        out = np.where(z < xs[0], z - xs[0], np.where(z > xs[-1], self._qs[-1], out))
        return out


@dataclass(frozen=True)
class Stencil:
    """Symmetric convolution weights w_k = mass of the kernel over cell k.

    Cell k is [ (k-1/2) dx, (k+1/2) dx ]; weights are exact differences of
    the tail mass, mirrored so w_k == w_{-k} bit for bit.
    """

    weights: np.ndarray = field(repr=False)
    dx: float
    radius_cells: int
    truncation_defect: float

    @property
    def total(self):
        return 1.0 - self.truncation_defect


def kernel_eval(spec: KernelSpec, x):
    """Density J(x); exactly zero outside the support."""
    return spec.density(x)


def tail_mass(spec: KernelSpec, z):
    """K(z) = int_z^inf J; non-increasing from 1 to 0."""
    return spec.tail(z)


def tail_integral(spec: KernelSpec, z):
    """Q(z) = int_0^z K(s) ds (signed); Q' = K."""
    return spec.tail_integral(z)


def interval_mass(spec: KernelSpec, a, b):
    """int_a^b J = K(a) - K(b); a and b may be +-inf."""
    if np.any(np.asarray(a, dtype=float) > np.asarray(b, dtype=float)):
        raise DomainError(f"interval_mass requires a <= b, got ({a!r}, {b!r})")
    out = np.clip(spec.tail(a) - spec.tail(b), 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def discretize_kernel(
    spec: KernelSpec, dx: float, radius_cells: int, *, allow_truncation: bool = False
) -> Stencil:
    """Exact per-cell quadrature weights for the convolution.

    Rejects stencils that drop more than 1e-3 of the kernel mass unless
    allow_truncation is set; the defect is reported either way.
    """
    if not dx > 0:
        raise DomainError(f"dx must be positive, got {dx}")
    if radius_cells < 1:
        raise DomainError(f"radius_cells must be >= 1, got {radius_cells}")
    edges = (np.arange(radius_cells + 1, dtype=float) + 0.5) * dx
    tails = spec.tail(edges)
    right = np.empty(radius_cells + 1)
    right[0] = 1.0 - 2.0 * tails[0]  # central cell by symmetry: 1 - 2 K(dx/2)
    right[1:] = tails[:-1] - tails[1:]
    weights = np.concatenate([right[:0:-1], right])
    total = float(np.sum(weights))
    defect = 1.0 - total
    if total < 0.999 and not allow_truncation:
        raise DomainError(
            f"stencil keeps only {total:.6f} of the kernel mass; enlarge radius_cells "
            f"(coverage {(radius_cells + 0.5) * dx:g} vs support {spec.support:g}) "
            "or pass allow_truncation=True"
        )
    return Stencil(weights=weights, dx=dx, radius_cells=radius_cells, truncation_defect=defect)


def solver_stencil(spec: KernelSpec, dx: float) -> Stencil:
    """Stencil whose cells cover the whole (finite) support."""
    if math.isinf(spec.support):
        raise DomainError(
            "simulation kernels need finite support; truncate at an explicit radius"
        )
    radius_cells = max(1, math.ceil(spec.support / dx - 1e-12))
    return discretize_kernel(spec, dx, radius_cells)


_FAMILIES = ("tophat", "triangle", "laplace", "gaussian", "tabulated")


def kernel_from_config(cfg: dict, *, base_dir=None) -> KernelSpec:
    """Build a kernel from a config mapping (see the README for the keys)."""
    if not isinstance(cfg, dict):
        raise DomainError("kernel section must be a mapping")
    family = cfg.get("family")
    if family == "tophat":
        return TopHat(halfwidth=float(cfg["halfwidth"]))
    if family == "triangle":
        return Triangle(halfwidth=float(cfg["halfwidth"]))
    if family == "laplace":
        return Laplace(rate=float(cfg["rate"]), radius=float(cfg.get("radius", math.inf)))
    if family == "gaussian":
        return TruncatedGaussian(sigma=float(cfg["sigma"]), radius=float(cfg["radius"]))
    if family == "tabulated":
        import os

        path = cfg["path"]
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        data = np.loadtxt(path, delimiter=",", comments="#")
        if data.ndim != 2 or data.shape[1] != 2:
            raise DomainError(f"tabulated kernel file {path} must have two columns x,J")
        return Tabulated(xs=data[:, 0], js=data[:, 1])
    raise DomainError(f"unknown kernel family {family!r}; expected one of {_FAMILIES}")


def kernel_from_string(text: str) -> KernelSpec:
    """Parse compact CLI syntax like 'tophat:1', 'laplace:1:6', 'gaussian:1:4'."""
    parts = text.split(":")
    family, args = parts[0], [float(p) for p in parts[1:]]
    if family == "tophat" and len(args) == 1:
        return TopHat(args[0])
    if family == "triangle" and len(args) == 1:
        return Triangle(args[0])
    if family == "laplace" and len(args) in (1, 2):
        return Laplace(args[0], args[1] if len(args) == 2 else math.inf)
    if family == "gaussian" and len(args) == 2:
        return TruncatedGaussian(args[0], args[1])
    raise DomainError(f"cannot parse kernel spec {text!r}")
