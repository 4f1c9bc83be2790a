"""Kernel families: densities, tail masses, and stencil weights."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontier_kpp.errors import DomainError
from frontier_kpp.kernels import (Laplace, Tabulated, TopHat, Triangle,
                                  TruncatedGaussian, discretize_kernel, interval_mass,
                                  kernel_eval, kernel_from_string, solver_stencil,
                                  tail_integral, tail_mass)


def simpson_refined(f, a, b, tol=1e-13, max_doublings=22):
    """Composite Simpson with interval doubling until the value settles.

    Endpoint samples are nudged inside by a relative 1e-9 so that panels
    split exactly at a jump of the integrand pick up their one-sided limits
    instead of chasing a measure-zero spike.
    """
    previous = None
    n = 8
    eps = 1e-9 * (b - a)
    for _ in range(max_doublings):
        xs = np.linspace(a, b, n + 1)
        xs[0] += eps
        xs[-1] -= eps
        ys = f(xs)
        h = (b - a) / n
        val = h / 3.0 * (ys[0] + ys[-1] + 4.0 * ys[1:-1:2].sum() + 2.0 * ys[2:-1:2].sum())
        if previous is not None and abs(val - previous) < tol:
            return val
        previous = val
        n *= 2
    return previous


class TestDensity:
    def test_tophat_center(self, tophat):
        assert kernel_eval(tophat, 0.0) == 0.5

    def test_tophat_outside_support(self, tophat):
        assert kernel_eval(tophat, 2.0) == 0.0

    def test_untruncated_laplace_center(self):
        assert kernel_eval(Laplace(1.0), 0.0) == 0.5

    def test_density_even(self, any_kernel):
        xs = np.linspace(0.0, any_kernel.support * 1.2, 57)
        assert np.array_equal(kernel_eval(any_kernel, xs), kernel_eval(any_kernel, -xs))

    def test_positive_at_zero_and_bounded(self, any_kernel):
        assert kernel_eval(any_kernel, 0.0) > 0
        xs = np.linspace(-any_kernel.support, any_kernel.support, 201)
        vals = kernel_eval(any_kernel, xs)
        assert np.all(vals >= 0) and np.all(np.isfinite(vals))

    def test_rejects_bad_parameters(self):
        with pytest.raises(DomainError):
            TopHat(-1.0)
        with pytest.raises(DomainError):
            TruncatedGaussian(1.0, math.inf)


class TestTailMass:
    def test_half_at_zero(self, any_kernel):
        assert abs(tail_mass(any_kernel, 0.0) - 0.5) < 1e-12

    def test_tophat_linear_tail(self, tophat):
        assert abs(tail_mass(tophat, 0.5) - 0.25) < 1e-15

    def test_limits(self, any_kernel):
        assert tail_mass(any_kernel, -math.inf) == 1.0
        assert tail_mass(any_kernel, math.inf) == 0.0

    def test_gaussian_matches_simpson_oracle(self):
        # expected value computed by an independent fine-grid Simpson rule on
        # the raw exponential, normalized the same way
        sigma, radius, z = 1.0, 4.0, 1.0
        raw = lambda x: np.exp(-x * x / (2.0 * sigma**2))  # noqa: E731
        norm = simpson_refined(raw, -radius, radius)
        expected = simpson_refined(raw, z, radius) / norm
        got = tail_mass(TruncatedGaussian(sigma, radius), z)
        assert abs(got - expected) < 1e-10, f"{got} vs oracle {expected}"

    @given(st.floats(-8.0, 8.0), st.floats(-8.0, 8.0))
    @settings(max_examples=60, deadline=None)
    def test_monotone_nonincreasing(self, z1, z2):
        kernel = Laplace(0.7, 5.0)
        lo, hi = min(z1, z2), max(z1, z2)
        assert tail_mass(kernel, lo) >= tail_mass(kernel, hi) - 1e-15

    def test_bounded_in_unit_interval(self, any_kernel):
        zs = np.linspace(-3 * any_kernel.support, 3 * any_kernel.support, 301)
        vals = tail_mass(any_kernel, zs)
        assert np.all(vals >= 0.0) and np.all(vals <= 1.0)

    def test_tail_integral_derivative_is_tail(self, any_kernel):
        # Q' = K checked by central differences away from kinks
        zs = np.linspace(-1.7, 1.7, 23) + 0.001
        h = 1e-6
        dq = (tail_integral(any_kernel, zs + h) - tail_integral(any_kernel, zs - h)) / (2 * h)
        assert np.max(np.abs(dq - tail_mass(any_kernel, zs))) < 1e-7


class TestIntervalMass:
    def test_total_mass(self, any_kernel):
        assert abs(interval_mass(any_kernel, -math.inf, math.inf) - 1.0) < 1e-12

    def test_tophat_full_support(self, tophat):
        assert abs(interval_mass(tophat, -1.0, 1.0) - 1.0) < 1e-15

    def test_tophat_quarter(self, tophat):
        assert abs(interval_mass(tophat, 0.0, 0.5) - 0.25) < 1e-15

    def test_rejects_reversed_interval(self, tophat):
        with pytest.raises(DomainError):
            interval_mass(tophat, 1.0, 0.0)

    @given(st.floats(-4, 4), st.floats(-4, 4), st.floats(-4, 4))
    @settings(max_examples=80, deadline=None)
    def test_additive(self, a, b, c):
        kernel = TruncatedGaussian(0.8, 3.0)
        a, b, c = sorted((a, b, c))
        left = interval_mass(kernel, a, b) + interval_mass(kernel, b, c)
        assert abs(left - interval_mass(kernel, a, c)) < 1e-12


class TestStencil:
    def test_tophat_uniform_cells(self, tophat):
        # dx=0.5, radius 2: five cells cover [-1.25, 1.25]; the three interior
        # cells carry mass 0.25 each, the two edge cells split the remainder,
        # and the total is exactly the unit mass
        st_ = discretize_kernel(tophat, 0.5, 2)
        assert np.allclose(st_.weights, [0.125, 0.25, 0.25, 0.25, 0.125], atol=1e-15)
        assert abs(st_.weights.sum() - 1.0) < 1e-15

    def test_symmetric_weights(self, any_kernel):
        st_ = solver_stencil(any_kernel, 0.05)
        assert np.array_equal(st_.weights, st_.weights[::-1])

    def test_laplace_truncation_matches_closed_form(self):
        kernel = Laplace(1.0, 6.0)
        st_ = discretize_kernel(kernel, 0.05, 120)
        covered = interval_mass(kernel, -6.0, 6.0)
        assert abs(st_.weights.sum() - covered) < 1e-12

    def test_weights_reproduce_interval_mass_of_unions(self, any_kernel):
        st_ = solver_stencil(any_kernel, 0.1)
        dx = st_.dx
        radius = st_.radius_cells
        for k0, k1 in [(0, 3), (-2, 2), (-radius, radius)]:
            union = interval_mass(any_kernel, (k0 - 0.5) * dx, (k1 + 0.5) * dx)
            got = st_.weights[k0 + radius : k1 + radius + 1].sum()
            assert abs(got - union) < 1e-12

    def test_rejects_aggressive_truncation(self):
        with pytest.raises(DomainError):
            discretize_kernel(Laplace(1.0, 8.0), 0.1, 5)
        st_ = discretize_kernel(Laplace(1.0, 8.0), 0.1, 5, allow_truncation=True)
        assert st_.truncation_defect > 1e-3


class TestTabulated:
    def make(self):
        xs = np.linspace(-2.0, 2.0, 81)
        js = np.maximum(0.0, 1.0 - np.abs(xs) / 2.0) + 0.05 * np.cos(xs)
        return Tabulated(xs=xs, js=np.maximum(js, 0.0))

    def test_renormalized_to_unit_mass(self):
        kernel = self.make()
        assert abs(interval_mass(kernel, -math.inf, math.inf) - 1.0) < 1e-12

    def test_symmetrized(self):
        xs = np.linspace(-1.0, 1.0, 41)
        js = np.where(xs > 0, 1.0, 0.5) * (1.0 - np.abs(xs)) + 0.1
        kernel = Tabulated(xs=xs, js=js)
        probe = np.linspace(0.0, 1.0, 17)
        assert np.allclose(kernel_eval(kernel, probe), kernel_eval(kernel, -probe),
                           atol=1e-14)

    def test_tail_matches_simpson_oracle(self):
        kernel = self.make()
        for z in (0.3, -0.7, 1.5):
            expected = simpson_refined(lambda x: kernel_eval(kernel, x), z, 2.0)
            assert abs(tail_mass(kernel, z) - expected) < 1e-9

    def test_rejects_asymmetric_grid(self):
        with pytest.raises(DomainError):
            Tabulated(xs=np.array([-1.0, 0.0, 2.0]), js=np.array([1.0, 1.0, 1.0]))


def test_kernel_from_string_roundtrip():
    assert kernel_from_string("tophat:1") == TopHat(1.0)
    assert kernel_from_string("laplace:1:6") == Laplace(1.0, 6.0)
    assert kernel_from_string("gaussian:1:4") == TruncatedGaussian(1.0, 4.0)
    assert kernel_from_string("triangle:2") == Triangle(2.0)
    with pytest.raises(DomainError):
        kernel_from_string("box:1")
