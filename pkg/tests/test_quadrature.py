import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sp_integrate

from fastsbl.errors import ConvergenceError, DomainError, EvaluationError
from fastsbl.priors import GAUSSIAN, LAPLACE, UNIFORM, student_t
from fastsbl.quadrature import QuadratureSpec, expect, integrate, second_derivative_at_zero, window

ALL = [GAUSSIAN, LAPLACE, UNIFORM, student_t(5)]


def test_polynomial_is_exact():
    value, err = integrate(lambda x: 3 * x**2 - x + 1, -1.0, 2.0)
    assert value == pytest.approx(9.0 - 1.5 + 3.0, rel=1e-14)
    assert err < 1e-12


@given(a=st.floats(-5, 5), width=st.floats(0.1, 10), k=st.floats(0.1, 3))
def test_against_scipy_quad(a, width, k):
    g = lambda x: np.cos(k * x) * np.exp(-0.1 * x * x)
    b = a + width
    ref, _ = sp_integrate.quad(g, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
    # O(1) integrand whose integral may cancel to ~1e-4, so ask for an absolute target too
    value, _ = integrate(g, a, b, QuadratureSpec(abs_tol=1e-12))
    assert value == pytest.approx(ref, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("a, b, k", [(-0.5, 4.55, 1.342857142857143), (4.0, 9.05, 3.0)])
def test_error_bound_covers_coincidental_panel_agreement(a, b, k):
    # coarse panels on these oscillations once agreed by chance and hid a 1e-9 error
    g = lambda x: np.cos(k * x) * np.exp(-0.1 * x * x)
    ref, _ = sp_integrate.quad(g, a, b, epsabs=1e-15, epsrel=1e-14, limit=200)
    value, err = integrate(g, a, b, QuadratureSpec(abs_tol=1e-300))
    assert abs(value - ref) <= err + 1e-15
    assert value == pytest.approx(ref, rel=1e-10)


def test_cancelling_integrand_reports_best_estimate():
    # |integrand| ~ 1 but the integral is ~2e-4; a 1e-10 relative target needs
    # more panels than the default budget allows
    g = lambda x: np.cos(5.0 * x) * np.exp(-0.1 * x * x)
    ref, _ = sp_integrate.quad(g, 0.0, 7.0, epsabs=1e-15, epsrel=1e-13, limit=200)
    with pytest.raises(ConvergenceError) as info:
        integrate(g, 0.0, 7.0)
    assert abs(info.value.estimate - ref) <= info.value.error
    value, _ = integrate(g, 0.0, 7.0, QuadratureSpec(rel_tol=1e-8))
    assert value == pytest.approx(ref, rel=1e-8)


def test_kink_resolved_with_breakpoint():
    value, _ = integrate(lambda x: np.abs(x - 0.3), -1.0, 1.0, points=[0.3])
    assert value == pytest.approx(0.5 * 1.3**2 + 0.5 * 0.7**2, rel=1e-13)


def test_scalar_only_integrand_is_wrapped():
    value, _ = integrate(lambda x: math.exp(x), 0.0, 1.0)
    assert value == pytest.approx(math.e - 1, rel=1e-11)


def test_bad_limits_and_nonfinite_values():
    with pytest.raises(DomainError):
        integrate(np.sin, 1.0, 1.0)
    with pytest.raises(DomainError):
        integrate(np.sin, 0.0, math.inf)
    with pytest.raises(EvaluationError):
        integrate(lambda x: 1.0 / x, 0.0, 1.0)


def test_budget_exhaustion_raises_with_estimate():
    spec = QuadratureSpec(max_subdivisions=16)
    with pytest.raises(ConvergenceError) as info:
        integrate(lambda x: np.sin(1.0 / (x + 1e-3)), 0.0, 1.0, spec)
    assert math.isfinite(info.value.estimate)


@pytest.mark.parametrize("prior", ALL, ids=str)
@pytest.mark.parametrize("gamma", [1e-2, 0.1, 1.0, 10.0, 1e3, 1e4])
def test_prior_moments(prior, gamma):
    assert expect(lambda x: np.ones_like(x), prior, gamma) == pytest.approx(1.0, rel=1e-10)
    assert expect(lambda x: x * x, prior, gamma) == pytest.approx(1.0 / gamma, rel=1e-9)


@pytest.mark.parametrize("prior", [GAUSSIAN, LAPLACE, UNIFORM], ids=str)
def test_fourth_moment_light_tails(prior):
    assert expect(lambda x: x**4, prior, 1.0) == pytest.approx(prior.fourth_moment(), rel=1e-9)


def test_odd_part_cancels_exactly():
    assert expect(lambda x: x**3 + np.sin(x), LAPLACE, 1.0) == 0.0


def test_expectation_against_scipy():
    g = lambda x: np.exp(-((x - 0.7) ** 2) / 0.02)
    prior = student_t(5)
    ref, _ = sp_integrate.quad(lambda x: g(x) * prior.density(x, 3.0), -np.inf, np.inf,
                               points=None, epsabs=1e-14, limit=400)
    assert expect(g, prior, 3.0, points=[0.7]) == pytest.approx(ref, rel=1e-8)


def test_window_covers_support():
    assert window(UNIFORM, 4.0) == pytest.approx(math.sqrt(3) / 2)
    assert window(GAUSSIAN, 1.0) >= 12.0
    assert window(student_t(5), 1.0) > window(GAUSSIAN, 1.0)


def test_spec_validation():
    with pytest.raises(DomainError):
        QuadratureSpec(rel_tol=0.0)
    with pytest.raises(DomainError):
        QuadratureSpec(truncation_sigmas=3)
    assert QuadratureSpec().tightened(10).rel_tol == pytest.approx(1e-11)


@given(a=st.floats(-3, 3), c=st.floats(0.1, 3))
def test_second_derivative(a, c):
    est, err = second_derivative_at_zero(lambda x: np.cos(c * x + a))
    exact = -c * c * math.cos(a)
    assert abs(est - exact) <= max(10 * err, 1e-7)


def test_second_derivative_step_validated():
    with pytest.raises(DomainError):
        second_derivative_at_zero(np.cos, step=0.0)
