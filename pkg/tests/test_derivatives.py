from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from solvschwartz.definitions import BUNDLED, load_group
from solvschwartz.errors import DepthExceededError, InputError
from solvschwartz.schwartz.derivatives import (
    coordinate_derivative,
    derivative_function,
    frame_change,
    left_derivative,
    multi_indices,
    right_derivative,
    runs,
    word_derivative,
    word_from_alpha,
)
from solvschwartz.schwartz.functions import gaussian

GROUPS = {name: load_group(name) for name in BUNDLED}


def points(m, n=5, seed=0):
    return np.random.default_rng(seed).uniform(-1, 1, (n, m))


def test_word_helpers():
    assert word_from_alpha((2, 0, 1)) == (0, 0, 2)
    assert runs((0, 0, 2, 2, 0)) == [(0, 2), (2, 2), (0, 1)]
    assert multi_indices(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    assert len(multi_indices(3, 3)) == math.comb(6, 3)
    with pytest.raises(InputError):
        word_from_alpha((-1, 0))


@pytest.mark.parametrize("name", BUNDLED)
def test_constant_has_zero_derivatives(name):
    r = GROUPS[name]
    one = lambda g: np.ones(np.shape(g)[:-1])
    g = points(r.dim)
    for alpha in multi_indices(r.dim, 3, 1):
        np.testing.assert_allclose(left_derivative(r, one, alpha, g), 0.0, atol=1e-12)
        np.testing.assert_allclose(right_derivative(r, one, alpha, g), 0.0, atol=1e-12)


def test_abelian_second_derivative_of_gaussian():
    r = GROUPS["r1"]
    f = lambda g: np.exp(-g[..., 0] ** 2)
    assert left_derivative(r, f, (2,), np.zeros(1)) == pytest.approx(-2.0, abs=1e-6)
    x = np.linspace(-2, 2, 9)[:, None]
    np.testing.assert_allclose(right_derivative(r, f, (3,), x), left_derivative(r, f, (3,), x),
                               atol=1e-12)


def test_heisenberg_left_field_on_z():
    r = GROUPS["heisenberg"]
    g = points(3, 20)
    d = left_derivative(r, lambda p: p[..., 2], (1, 0, 0), g)
    np.testing.assert_allclose(d, -g[:, 1] / 2, atol=1e-10)


def test_axb_right_field_on_y():
    r = GROUPS["axb"]
    g = points(2, 20)
    d = right_derivative(r, lambda p: p[..., 1], (1, 0), g)
    np.testing.assert_allclose(d, g[:, 1], atol=1e-9)


def test_depth_limit():
    r = GROUPS["axb"]
    with pytest.raises(DepthExceededError):
        left_derivative(r, lambda p: p[..., 0], (3, 2), np.zeros(2))
    with pytest.raises(InputError):
        left_derivative(r, lambda p: p[..., 0], (1,), np.zeros(2))


@pytest.mark.parametrize("name", BUNDLED)
@settings(max_examples=15, deadline=None)
@given(data=st.data())
def test_left_fields_commute_with_left_translation(name, data):
    r = GROUPS[name]
    f = gaussian(r, 0.5)
    h = data.draw(arrays(np.float64, (r.dim,), elements=st.floats(-1, 1)))
    g = data.draw(arrays(np.float64, (r.dim,), elements=st.floats(-1, 1)))
    j = data.draw(st.integers(0, r.dim - 1))
    shifted = lambda p: f(r.multiply(h, p))
    lhs = word_derivative(r, shifted, (j,), g)
    rhs = word_derivative(r, f, (j,), r.multiply(h, g))
    assert lhs == pytest.approx(rhs, abs=1e-8)


@pytest.mark.parametrize("name", BUNDLED)
@settings(max_examples=15, deadline=None)
@given(data=st.data())
def test_left_and_right_fields_commute(name, data):
    r = GROUPS[name]
    f = gaussian(r, 0.5)
    g = data.draw(arrays(np.float64, (r.dim,), elements=st.floats(-1, 1)))
    i, j = data.draw(st.integers(0, r.dim - 1)), data.draw(st.integers(0, r.dim - 1))
    left_then_right = word_derivative(r, lambda p: word_derivative(r, f, (i,), p), (j,), g, "right")
    right_then_left = word_derivative(r, lambda p: word_derivative(r, f, (j,), p, "right"), (i,), g)
    assert left_then_right == pytest.approx(right_then_left, abs=1e-6)


def test_bracket_relation_of_left_fields():
    # X_i X_j - X_j X_i = X_[i,j] on ax+b: [T, Y] = Y
    r = GROUPS["axb"]
    f = gaussian(r, 0.7)
    g = points(2, 6, 3)
    comm = word_derivative(r, f, (0, 1), g) - word_derivative(r, f, (1, 0), g)
    np.testing.assert_allclose(comm, word_derivative(r, f, (1,), g), atol=1e-7)


def test_coordinate_derivative():
    f = lambda p: np.sin(p[..., 0]) * p[..., 1] ** 2
    g = np.array([0.3, 1.5])
    assert coordinate_derivative(f, (1, 1), g) == pytest.approx(math.cos(0.3) * 3.0, abs=1e-8)
    assert coordinate_derivative(f, (0, 0), g) == pytest.approx(f(g))


def test_frame_change_at_identity():
    for r in GROUPS.values():
        m, cond = frame_change(r, r.identity())
        np.testing.assert_allclose(m, np.eye(r.dim), atol=1e-10)
        assert cond == pytest.approx(1.0)


def test_m2_frame_change():
    r = GROUPS["m2"]
    t = 0.7
    m, _ = frame_change(r, np.array([t, 0.3, -1.2]))
    # ∂/∂n1 = cos t X2 + sin t X3
    np.testing.assert_allclose(m[:, 1], [0.0, math.cos(t), math.sin(t)], atol=1e-10)


def test_heisenberg_frame_change_is_polynomial():
    r = GROUPS["heisenberg"]
    x, y, z = 0.7, 0.3, -1.2
    m, _ = frame_change(r, np.array([x, y, z]))
    # ∂x = X1 + (y/2) X3, ∂y = X2 - (x/2) X3, ∂z = X3
    np.testing.assert_allclose(m, [[1, 0, 0], [0, 1, 0], [y / 2, -x / 2, 1]], atol=1e-10)


def test_derivative_function_wraps_word():
    r = GROUPS["r1"]
    df = derivative_function(r, gaussian(r, 1.0), alpha=(1,))
    x = np.array([[0.5]])
    assert df(x)[0] == pytest.approx(-2 * 0.5 * math.exp(-0.25), abs=1e-9)
    assert df.decay == gaussian(r, 1.0).decay
