import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from confmap import InvalidInputError, SolverDivergedError
from confmap.numerics import (
    QuadratureSpec,
    SolverSpec,
    aitken_limit,
    complex_derivative,
    integrate,
    solve_least_squares,
)

# independently computed with mpmath at 50 digits
ABS_SHIFTED_CIRCLE = 6.682446610277631  # integral over [0, 2pi] of |e^(it) + 0.5|


def test_adaptive_simpson_polynomial():
    res = integrate(lambda t: 3.0 * t ** 2, 0.0, 2.0)
    assert res.converged
    assert float(res) == pytest.approx(8.0, abs=1e-12)


def test_adaptive_simpson_oscillatory():
    res = integrate(np.cos, 0.0, 10.0)
    assert float(res) == pytest.approx(math.sin(10.0), abs=1e-10)


def test_gauss_legendre_matches_adaptive():
    spec = QuadratureSpec(method="gauss-legendre", order=24)
    res = integrate(lambda t: np.exp(-t) * np.sin(3 * t), 0.0, 4.0, spec)
    truth = integrate(lambda t: np.exp(-t) * np.sin(3 * t), 0.0, 4.0)
    assert float(res) == pytest.approx(float(truth), abs=1e-10)


def test_shifted_circle_modulus_oracle():
    res = integrate(lambda t: np.abs(np.exp(1j * t) + 0.5), 0.0, 2.0 * math.pi)
    assert float(res) == pytest.approx(ABS_SHIFTED_CIRCLE, abs=1e-10)


def test_gauss_jacobi_divides_out_singular_weight():
    # integral over [0,1] of 1/sqrt(t) = 2, with alpha = -1/2 at the left end
    spec = QuadratureSpec(method="gauss-jacobi", jacobi_alpha=-0.5, order=12)
    res = integrate(lambda t: 1.0 / np.sqrt(t), 0.0, 1.0, spec)
    assert float(res) == pytest.approx(2.0, rel=1e-12)


def test_gauss_jacobi_both_endpoints():
    # Beta(1/2, 1/2) = pi for the weight t^(-1/2) (1-t)^(-1/2)
    spec = QuadratureSpec(method="gauss-jacobi", jacobi_alpha=-0.5, jacobi_beta=-0.5)
    res = integrate(lambda t: 1.0 / np.sqrt(t * (1.0 - t)), 0.0, 1.0, spec)
    assert float(res) == pytest.approx(math.pi, rel=1e-12)


def test_integrate_rejects_bad_interval():
    with pytest.raises(InvalidInputError):
        integrate(np.cos, 1.0, 1.0)
    with pytest.raises(InvalidInputError):
        integrate(np.cos, 0.0, math.inf)


def test_quadrature_spec_rejects_bad_method():
    with pytest.raises(InvalidInputError):
        QuadratureSpec(method="monte-carlo")


def test_quadrature_spec_rejects_bad_exponent():
    with pytest.raises(InvalidInputError):
        QuadratureSpec(method="gauss-jacobi", jacobi_alpha=-1.0)


def test_complex_derivative_exponential():
    z = np.array([0.0 + 0.0j, 0.3 - 0.2j, -0.5 + 0.1j])
    d = complex_derivative(np.exp, z)
    assert np.max(np.abs(d - np.exp(z))) < 1e-12


def test_complex_derivative_scalar_and_validation():
    assert complex_derivative(lambda w: w ** 3, 0.5 + 0.0j) == pytest.approx(0.75)
    with pytest.raises(InvalidInputError):
        complex_derivative(np.exp, 1.0 + 0.0j)
    with pytest.raises(InvalidInputError):
        complex_derivative(np.exp, 0.9 + 0.0j, radius=0.2)


def test_solver_recovers_quadratic_minimum():
    def residual(x):
        return np.array([x[0] - 1.0, 2.0 * (x[1] + 3.0)])

    res = solve_least_squares(residual, np.zeros(2))
    assert res.converged
    assert np.allclose(res.x, [1.0, -3.0], atol=1e-10)
    assert res.history[0] >= res.history[-1]


def test_solver_handles_gauge_freedom():
    # residual depends on x only through differences: rank-deficient jacobian
    def residual(x):
        return np.array([(x[1] - x[0]) - 2.0, (x[2] - x[1]) - 1.0])

    res = solve_least_squares(residual, np.zeros(3))
    assert res.residual_norm < 1e-10


def test_solver_raises_on_hopeless_residual():
    def residual(x):
        return np.array([np.inf])

    with pytest.raises((InvalidInputError, SolverDivergedError)):
        solve_least_squares(residual, np.zeros(1))


def test_solver_respects_iteration_cap():
    # slow crawl toward zero must stop at the cap without raising
    def residual(x):
        return np.array([math.copysign(abs(x[0]) ** 0.5 + 1.0, 1.0)])

    res = solve_least_squares(residual, np.array([4.0]),
                              SolverSpec(max_iterations=3))
    assert res.iterations <= 3


def test_aitken_geometric_sequence_is_exact():
    seq = [1.0 - 0.5 ** k for k in range(1, 6)]
    limit, resid = aitken_limit(seq)
    assert limit == pytest.approx(1.0, abs=1e-14)
    assert resid > 0


def test_aitken_needs_three_values():
    with pytest.raises(InvalidInputError):
        aitken_limit([1.0, 2.0])


@given(st.floats(min_value=-5, max_value=5), st.floats(min_value=0.05, max_value=0.8))
@settings(max_examples=25, deadline=None)
def test_aitken_exact_on_single_geometric_term(limit, ratio):
    seq = [limit + 2.0 * ratio ** k for k in range(4)]
    est, _ = aitken_limit(seq)
    assert est == pytest.approx(limit, abs=1e-9 * (1 + abs(limit)))


@given(st.integers(min_value=1, max_value=6))
@settings(max_examples=10, deadline=None)
def test_integrate_monomial_family(n):
    res = integrate(lambda t, n=n: (n + 1.0) * t ** n, 0.0, 1.0)
    assert float(res) == pytest.approx(1.0, rel=1e-9)
