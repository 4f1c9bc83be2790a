"""Principal eigenvalue of the nonlocal operator on an interval.

The operator d (int_I J(x-y) phi(y) dy - phi) + a0 phi is discretized on n
equal cells with nodes at cell centers and exact per-cell kernel masses, so
the matrix is symmetric Toeplitz plus a multiple of the identity.  Its top
eigenvalue is computed by shifted power iteration; the shift makes the
matrix elementwise nonnegative and irreducible (J(0) > 0 gives a positive
band), so the dominant eigenvector is positive and the limit is the
principal eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import BracketFailure, DomainError, NoConvergence, NoCriticalLength
from .kernels import KernelSpec

__all__ = ["SpectralResult", "assemble_operator", "lambda_p", "find_ell_star"]


@dataclass(frozen=True)
class SpectralResult:
    lambda_p: float
    eigenfunction: np.ndarray = field(repr=False)  # positive, sup-normalized
    nodes: np.ndarray = field(repr=False)
    interval: tuple[float, float]
    n: int
    iterations: int
    residual: float


def _cell_weights(kernel: KernelSpec, dx: float, count: int) -> np.ndarray:
    """Exact kernel mass over cells at center offsets 0, dx, ..., (count-1) dx."""
    edges = (np.arange(count, dtype=float) + 0.5) * dx
    tails = kernel.tail(edges)
    w = np.empty(count)
    w[0] = 1.0 - 2.0 * tails[0]
    w[1:] = tails[:-1] - tails[1:]
    return np.maximum(w, 0.0)


def assemble_operator(a0: float, interval: tuple[float, float], kernel: KernelSpec,
                      n: int, d: float = 1.0) -> np.ndarray:
    """Dense symmetric matrix M with M[i,j] = d w(x_i - x_j) + (a0 - d) delta_ij."""
    l1, l2 = float(interval[0]), float(interval[1])
    if not (n >= 4 and math.isfinite(l1) and math.isfinite(l2) and l1 < l2):
        raise DomainError(f"need a finite interval and n >= 4, got {interval!r}, n={n}")
    dx = (l2 - l1) / n
    w = _cell_weights(kernel, dx, n)
    m = d * toeplitz(w)
    m[np.diag_indices(n)] += a0 - d
    return m


def _nodes(interval, n):
    l1, l2 = interval
    dx = (l2 - l1) / n
    return l1 + dx * (np.arange(n) + 0.5)


def lambda_p(a0: float, interval: tuple[float, float], kernel: KernelSpec, n: int,
             tol: float = 1e-10, d: float = 1.0, max_iter: int = 200_000) -> SpectralResult:
    """Principal eigenvalue by shifted power iteration.

    Shift sigma = d + |a0| + 1 keeps the iteration matrix nonnegative.
    Convergence requires both a Cauchy-small Rayleigh quotient and a residual
    below tol * ||M||_inf; near-degenerate tops (very long intervals) need a
    looser tol because the residual of power iteration decays only
    algebraically through an eigenvalue cluster.
    """
    m = assemble_operator(a0, interval, kernel, n, d=d)
    sigma = d + abs(a0) + 1.0
    b = m + sigma * np.eye(n)
    norm_m = float(np.max(np.sum(np.abs(m), axis=1)))
    v = np.full(n, 1.0 / math.sqrt(n))
    rq_prev = math.inf
    y = b @ v
    for it in range(1, max_iter + 1):
        rq = float(v @ y)
        # residual of the sup-normalized eigenfunction, to match the contract
        res_sup = float(np.max(np.abs(y - rq * v))) / float(np.max(v))
        if abs(rq - rq_prev) < tol and res_sup <= tol * norm_m:
            break
        rq_prev = rq
        v = y / float(np.linalg.norm(y))
        y = b @ v
    else:
        raise NoConvergence(
            f"power iteration did not reach tol={tol} in {max_iter} iterations "
            f"on {interval!r} with n={n}"
        )
    phi = v / float(np.max(v))
    if not np.all(phi > 0):
        raise NoConvergence("power iteration returned a non-positive eigenfunction")
    residual = float(np.max(np.abs(m @ phi - (rq - sigma) * phi)))
    return SpectralResult(
        lambda_p=float(rq - sigma), eigenfunction=phi, nodes=_nodes(interval, n),
        interval=(float(interval[0]), float(interval[1])), n=n,
        iterations=it, residual=residual,
    )


def find_ell_star(d: float, fprime0: float, kernel: KernelSpec, tol: float = 1e-6,
                  n: int = 1024, eig_tol: float = 1e-9) -> float:
    """Critical interval length: the zero of ell -> lambda_p on (0, ell).

    Only exists for 0 < f'(0) < d; otherwise the eigenvalue is positive for
    every finite interval and NoCriticalLength is raised.  The number of
    cells is held fixed while ell varies, so the discrete eigenvalue is a
    continuous increasing function of ell and plain bisection applies.
    Stops when |lambda_p(ell)| <= tol.
    """
    if not fprime0 > 0:
        raise DomainError(f"f'(0) must be positive, got {fprime0}")
    if fprime0 >= d:
        raise NoCriticalLength(
            f"f'(0)={fprime0} >= d={d}: the eigenvalue is positive on every interval "
            "and spreading always happens"
        )

    def lam(ell: float) -> float:
        return lambda_p(fprime0, (0.0, ell), kernel, n, tol=eig_tol, d=d).lambda_p

    support = kernel.support if math.isfinite(kernel.support) else 1.0
    lo = support * 1e-3
    lam_lo = lam(lo)
    if lam_lo >= 0.0:
        raise BracketFailure(
            f"lambda_p({lo!r}) = {lam_lo!r} is not negative; discretization too coarse"
        )
    hi = max(support, 1.0)
    for _ in range(60):
        lam_hi = lam(hi)
        if lam_hi > 0.0:
            break
        hi *= 2.0
    else:
        raise BracketFailure("no sign change found while expanding the upper length")
    while True:
        mid = 0.5 * (lo + hi)
        lam_mid = lam(mid)
        if abs(lam_mid) <= tol:
            return mid
        if lam_mid < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            raise BracketFailure(
                f"bisection bracket collapsed at ell={mid!r} with lambda_p={lam_mid!r}; "
                "the eigenvalue tolerance is too loose for the requested tol"
            )
