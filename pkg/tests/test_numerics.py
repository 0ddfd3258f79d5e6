from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from solvschwartz.errors import InputError, UnsupportedDimensionError
from solvschwartz.numerics import (
    Box,
    batched_nelder_mead,
    directional_derivative,
    gauss_legendre,
    halton_points,
    integrate,
    matrix_exp,
    mixed_partial,
    monte_carlo,
    operator_norm,
)

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


def square(n):
    return arrays(np.float64, (n, n), elements=finite)


# ---------------------------------------------------------------------------
# matrix_exp


def test_exp_of_zero_is_identity():
    np.testing.assert_array_equal(matrix_exp(np.zeros((3, 3))), np.eye(3))


def test_exp_of_nilpotent_jordan_block():
    np.testing.assert_allclose(matrix_exp(np.array([[0.0, 1.0], [0.0, 0.0]])),
                               [[1.0, 1.0], [0.0, 1.0]], atol=1e-15)


def test_exp_of_one_by_one():
    assert matrix_exp(np.array([[1.0]]))[0, 0] == pytest.approx(math.e, rel=1e-15)


def test_exp_rotation_generator():
    t = 0.7
    r = matrix_exp(np.array([[0.0, -t], [t, 0.0]]))
    np.testing.assert_allclose(r, [[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]],
                               atol=1e-15)


def test_exp_stacked_with_mixed_scales():
    a = np.stack([np.zeros((2, 2)), 40.0 * np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]])])
    out = matrix_exp(a)
    for ai, oi in zip(a, out):
        np.testing.assert_allclose(oi, scipy.linalg.expm(ai), rtol=1e-13)


def test_exp_rejects_non_square_and_nonfinite():
    with pytest.raises(InputError):
        matrix_exp(np.zeros((2, 3)))
    with pytest.raises(InputError):
        matrix_exp(np.array([[np.nan]]))


def test_exp_overflow_is_reported():
    with pytest.raises(OverflowError):
        matrix_exp(np.array([[1000.0]]))


@settings(max_examples=60, deadline=None)
@given(square(4))
def test_exp_matches_scipy(a):
    ref = scipy.linalg.expm(a)
    np.testing.assert_allclose(matrix_exp(a), ref, rtol=1e-11, atol=1e-11 * np.abs(ref).max())


@settings(max_examples=60, deadline=None)
@given(square(3), finite, finite)
def test_exp_additive_on_commuting_pairs(a, s, t):
    # polynomials in one matrix commute
    b = s * a + t * (a @ a) / 10.0
    lhs = matrix_exp(a + b)
    rhs = matrix_exp(a) @ matrix_exp(b)
    scale = max(1.0, np.abs(rhs).max())
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * scale)


@settings(max_examples=40, deadline=None)
@given(square(3))
def test_exp_inverse_is_exp_of_negative(a):
    prod = matrix_exp(a) @ matrix_exp(-a)
    cond = np.abs(matrix_exp(a)).max() * np.abs(matrix_exp(-a)).max()
    np.testing.assert_allclose(prod, np.eye(3), atol=1e-13 * max(1.0, cond))


# ---------------------------------------------------------------------------
# operator_norm


def test_norm_examples():
    assert operator_norm(np.eye(3)) == pytest.approx(1.0, abs=1e-15)
    assert operator_norm(np.diag([1.0, math.e ** 2])) == pytest.approx(math.e ** 2, rel=1e-15)
    # ‖[[1,1],[0,1]]‖ is the golden ratio, not 1
    jordan = np.array([[1.0, 1.0], [0.0, 1.0]])
    assert operator_norm(jordan) == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-14)
    assert operator_norm(np.array([[0.0, 1.0], [0.0, 0.0]])) == pytest.approx(1.0, rel=1e-15)


def test_norm_of_stack_is_elementwise():
    a = np.stack([np.eye(2), 3.0 * np.eye(2)])
    np.testing.assert_allclose(operator_norm(a), [1.0, 3.0], rtol=1e-15)


@settings(max_examples=80, deadline=None)
@given(square(4))
def test_norm_matches_svd(a):
    assert operator_norm(a) == pytest.approx(np.linalg.norm(a, 2), rel=1e-10, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(square(3), square(3))
def test_norm_submultiplicative(a, b):
    assert operator_norm(a @ b) <= operator_norm(a) * operator_norm(b) * (1 + 1e-12) + 1e-14


# ---------------------------------------------------------------------------
# quadrature


def test_gauss_legendre_exact_on_polynomials():
    x, w = gauss_legendre(5, 0.0, 2.0)
    for k in range(10):
        assert np.sum(w * x ** k) == pytest.approx(2.0 ** (k + 1) / (k + 1), rel=1e-14)


def test_integrate_constant_on_square():
    r = integrate(lambda p: np.ones(len(p)), Box((1.0, 1.0), points=4), tail=0.0)
    assert r.value == pytest.approx(4.0, rel=1e-15)
    assert r.tail_bound == 0.0 and not r.truncated


def test_integrate_gaussian_1d_and_2d():
    r1 = integrate(lambda p: np.exp(-p[:, 0] ** 2), Box((8.0,), points=32, panels=2))
    assert r1.value == pytest.approx(math.sqrt(math.pi), abs=1e-12)
    assert r1.truncated
    r2 = integrate(lambda p: np.exp(-np.sum(p ** 2, axis=1)), Box.cube(2, 8.0, points=32, panels=2),
                   tail=lambda b: 0.0)
    assert r2.value == pytest.approx(math.pi, abs=1e-12)
    assert r2.nodes_used == (4 * 32) ** 2


def test_integrate_complex_valued():
    r = integrate(lambda p: np.exp(1j * p[:, 0]), Box((math.pi / 2,), points=20))
    assert r.value == pytest.approx(2.0 + 0j, abs=1e-14)


def test_integrate_rejects_dimension_above_six():
    with pytest.raises(UnsupportedDimensionError):
        integrate(lambda p: np.ones(len(p)), Box.cube(7, 1.0, points=1))


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.1, 3.0))
def test_integrate_linear_in_integrand(a, b, c):
    box = Box((1.5,), points=16, center=(0.3,))
    f = lambda p: np.cos(c * p[:, 0])
    g = lambda p: p[:, 0] ** 3
    lhs = integrate(lambda p: a * f(p) + b * g(p), box).value
    rhs = a * integrate(f, box).value + b * integrate(g, box).value
    assert lhs == pytest.approx(rhs, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(0.2, 4.0))
def test_integrate_additive_over_bisection(m, c):
    f = lambda p: np.exp(-c * p[:, 0] ** 2) * np.cos(p[:, 0])
    whole = integrate(f, Box((1.0,), points=24)).value
    lo = integrate(f, Box(((m + 1) / 2,), points=24, center=((m - 1) / 2,))).value
    hi = integrate(f, Box(((1 - m) / 2,), points=24, center=((m + 1) / 2,))).value
    assert whole == pytest.approx(lo + hi, abs=1e-10)


def test_box_breakpoints_and_contains():
    b = Box((2.0,), points=3, panels=2)
    np.testing.assert_allclose(b.breakpoints(0), [-2, -1, 0, 1, 2])
    g = Box((4.0,), panels=3, grading="geometric")
    np.testing.assert_allclose(g.breakpoints(0), [-4, -2, -1, 0, 1, 2, 4])
    assert b.contains(np.array([[1.9], [2.1]])).tolist() == [True, False]
    with pytest.raises(InputError):
        Box((0.0,))


# ---------------------------------------------------------------------------
# Monte Carlo


def test_monte_carlo_constant_is_exact():
    box = Box((1.0, 2.0, 0.5))
    r = monte_carlo(lambda p: np.full(len(p), 3.0), box, 1000, seed=1)
    assert r.value == pytest.approx(3.0 * box.volume, rel=1e-15)
    assert r.tail_bound == pytest.approx(0.0, abs=1e-14)


def test_monte_carlo_gaussian_3d():
    box = Box.cube(3, 6.0)
    r = monte_carlo(lambda p: np.exp(-np.sum(p ** 2, axis=1)), box, 10 ** 6, seed=7)
    assert abs(r.value - math.pi ** 1.5) < 1e-2
    assert r.tail_bound < 1e-2


def test_monte_carlo_is_deterministic_for_seed():
    f = lambda p: np.sin(p[:, 0]) ** 2 + p[:, 1]
    box = Box((1.0, 1.0))
    a = monte_carlo(f, box, 4096, seed=3)
    b = monte_carlo(f, box, 4096, seed=3)
    c = monte_carlo(f, box, 4096, seed=4)
    assert a.value == b.value
    assert a.value != c.value


def test_halton_points_range_and_seed():
    p = halton_points(3, 500, seed=2, lower=[-1, 0, 5], upper=[1, 2, 6])
    assert p.shape == (500, 3)
    assert np.all(p >= [-1, 0, 5]) and np.all(p <= [1, 2, 6])
    np.testing.assert_array_equal(p, halton_points(3, 500, seed=2, lower=[-1, 0, 5], upper=[1, 2, 6]))


# ---------------------------------------------------------------------------
# finite differences


def line(x, v):
    x, v = np.asarray(x, float), np.asarray(v, float)
    return lambda s: x + np.asarray(s)[:, None] * v


def test_directional_derivative_linear():
    f = lambda p: 2.0 * p[:, 0] - 3.0 * p[:, 1]
    d = directional_derivative(f, np.array([0.4, 1.0]), line([0.4, 1.0], [1.0, 1.0]))
    assert d == pytest.approx(-1.0, abs=1e-12)


def test_directional_derivative_second_order_square():
    d = directional_derivative(lambda p: p[:, 0] ** 2, np.zeros(1), line([0.0], [1.0]), order=2)
    assert d == pytest.approx(2.0, abs=1e-8)


def test_directional_derivative_third_order_exp():
    d = directional_derivative(lambda p: np.exp(p[:, 0]), np.zeros(1), line([0.0], [1.0]),
                               order=3, h=1e-2)
    assert d == pytest.approx(1.0, abs=1e-6)


def test_directional_derivative_checks_curve_origin():
    with pytest.raises(InputError):
        directional_derivative(lambda p: p[:, 0], np.zeros(1), line([1.0], [1.0]))


def test_mixed_partial_of_product():
    # ∂s ∂t of sin(s) e^{2t} at 0 is 2
    val = mixed_partial(lambda st_: np.sin(st_[:, 0]) * np.exp(2 * st_[:, 1]), (1, 1))
    assert val == pytest.approx(2.0, abs=1e-8)


def test_mixed_partial_rejects_high_order():
    with pytest.raises(InputError):
        mixed_partial(lambda s: s[:, 0], (5,))
    with pytest.raises(InputError):
        mixed_partial(lambda s: s[:, 0], (3, 2))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.floats(-1.0, 1.0))
def test_fd_matches_exponential_derivatives(order, x0):
    # d^k/ds^k e^{x0+s} = e^{x0}; roundoff grows like eps/h^k
    tol = {1: 1e-11, 2: 1e-8, 3: 1e-7, 4: 1e-5}[order]
    d = directional_derivative(lambda p: np.exp(p[:, 0]), np.array([x0]), line([x0], [1.0]),
                               order=order)
    assert d == pytest.approx(math.exp(x0), rel=tol)


# ---------------------------------------------------------------------------
# optimisation


def test_batched_nelder_mead_finds_shifted_minima():
    centers = np.array([[0.5, -1.0], [2.0, 0.3], [-1.5, 1.5]])
    f = lambda x, idx: np.sum((x - centers[idx]) ** 2, axis=1)
    x, val = batched_nelder_mead(f, np.zeros((3, 2)), 0.5, maxiter=400, xtol=1e-10)
    np.testing.assert_allclose(x, centers, atol=1e-5)
    assert np.all(val < 1e-9)
