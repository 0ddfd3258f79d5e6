from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solvschwartz.definitions import load_group
from solvschwartz.distributions import (
    Embedded,
    StructureDecomposition,
    derivative,
    embed,
    evaluate_decomposition,
    flat_antiderivative,
    flat_grid,
    growth_order,
    load_decomposition,
    pair,
    slow_function,
    slowly_increasing_test,
    verify_flat_identity,
)
from solvschwartz.errors import DepthExceededError, InputError, SlowGrowthError
from solvschwartz.schwartz.convolution import mollifier
from solvschwartz.schwartz.derivatives import derivative_function
from solvschwartz.schwartz.functions import SmoothFunction, gaussian, tensor_bump
from solvschwartz.weights import Weight

R1, AXB, HEIS = (load_group(n) for n in ("r1", "axb", "heisenberg"))
W = {r.name: Weight(r) for r in (R1, AXB, HEIS)}


def slow(r, label):
    return slow_function(r, W[r.name], label)[0]


def test_constant_pairs_with_mollifier_to_one():
    rho, _, _ = mollifier(R1, 2)
    res = pair(embed(R1, W["r1"], slow(R1, "one"), 0), rho)
    assert res.value == pytest.approx(1.0, abs=1e-8)


def test_heaviside_derivative_is_point_evaluation():
    # ⟨X[H], φ⟩ = -∫ H φ' = φ(0)
    rho, _, _ = mollifier(R1, 1)
    T = derivative(embed(R1, W["r1"], slow(R1, "heaviside"), 0), alpha=(1,))
    assert pair(T, rho).value == pytest.approx(float(rho(np.zeros(1))), abs=1e-4)


def test_cos_against_gaussian_closed_form():
    # ∫ cos(x) e^{-x²} dx = √π e^{-1/4}
    res = pair(embed(R1, W["r1"], slow(R1, "cos"), 0), gaussian(R1, 1.0))
    assert res.value == pytest.approx(math.sqrt(math.pi) * math.exp(-0.25), abs=1e-8)
    assert not res.flagged


def test_second_derivative_of_quadratic():
    # X²[1 + x²] = [2], paired with e^{-x²}
    T = derivative(embed(R1, W["r1"], slow(R1, "quad"), 2), alpha=(2,))
    assert pair(T, gaussian(R1, 1.0)).value == pytest.approx(2 * math.sqrt(math.pi), abs=1e-6)


@pytest.mark.parametrize("word", [(0,), (1,), (0, 1), (1, 0)])
def test_derivative_matches_embedded_derivative_on_axb(word):
    w = W["axb"]
    f = gaussian(AXB, 0.5, center=[0.2, -0.1])
    phi = gaussian(AXB, 1.0, center=[-0.1, 0.3])
    lhs = pair(derivative(Embedded(AXB, f, 0), word=word), phi).value
    rhs = pair(Embedded(AXB, derivative_function(AXB, f, word=word), 0), phi).value
    assert lhs == pytest.approx(rhs, abs=1e-4)


@settings(max_examples=10, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_pairing_is_linear(a, b):
    w = W["r1"]
    S = embed(R1, w, slow(R1, "cos"), 0)
    T = derivative(embed(R1, w, slow(R1, "ramp"), 1), alpha=(1,))
    phi = gaussian(R1, 1.0, center=[0.3])
    combo = a * S + b * T
    expect = a * pair(S, phi).value + b * pair(T, phi).value
    assert pair(combo, phi).value == pytest.approx(expect, abs=1e-9)


def test_growth_checks():
    w = W["axb"]
    with pytest.raises(SlowGrowthError) as info:
        embed(AXB, w, slow(AXB, "exp2t"), 0)
    assert info.value.witness is not None
    assert not slowly_increasing_test(AXB, w, slow(AXB, "exp2t"), 1)["ok"]
    assert growth_order(R1, W["r1"], slow(R1, "quad")) == 2
    assert growth_order(R1, W["r1"], slow(R1, "cos")) == 0
    with pytest.raises(InputError):
        slow_function(R1, W["r1"], "exp2t")
    with pytest.raises(InputError):
        slow_function(R1, W["r1"], "nope")


def test_depth_limit():
    T = embed(AXB, W["axb"], slow(AXB, "one"), 0)
    T3 = derivative(T, alpha=(2, 1))
    assert T3.depth == 3
    assert derivative(T3, word=(0,)).depth == 4
    with pytest.raises(DepthExceededError):
        derivative(T3, alpha=(1, 1))
    with pytest.raises(InputError):
        derivative(T, word=(2,))


# ---------------------------------------------------------------------------
# antiderivatives and the flat identity


def test_flat_antiderivative_closed_forms():
    one = slow(R1, "one")
    x = np.array([[-2.0], [0.0], [1.5]])
    np.testing.assert_allclose(flat_antiderivative(R1, W["r1"], one, 0)(x), x[:, 0], atol=1e-13)
    # ∫_0^x (1 + |s|) ds = x + x|x|/2
    np.testing.assert_allclose(flat_antiderivative(R1, W["r1"], one, 1)(x),
                               x[:, 0] + x[:, 0] * np.abs(x[:, 0]) / 2, atol=1e-12)
    g = np.array([[0.5, -2.0], [1.0, 3.0]])
    np.testing.assert_allclose(flat_antiderivative(AXB, W["axb"], slow(AXB, "one"), 0)(g),
                               g[:, 0] * g[:, 1], atol=1e-13)


def test_flat_grid_matches_pointwise():
    h = slow(AXB, "cos")
    axes = [np.linspace(-1, 1, 5), np.linspace(-0.5, 1.5, 4)]
    pts = np.array(np.meshgrid(*axes, indexing="ij")).reshape(2, -1).T
    pointwise = flat_antiderivative(AXB, W["axb"], h, 1, points=16, panels=4)(pts)
    coarse = flat_grid(AXB, W["axb"], h, 1, axes).reshape(-1)
    fine = flat_grid(AXB, W["axb"], h, 1, axes, cell_points=12).reshape(-1)
    np.testing.assert_allclose(coarse, pointwise, atol=1e-5)
    np.testing.assert_allclose(fine, pointwise, atol=1e-9)


def test_flat_identity_r1():
    rep = verify_flat_identity(R1, W["r1"], slow(R1, "cos"), 1, tensor_bump(R1), points=16)
    assert rep["residual"] < 1e-5
    assert rep["frame_vs_direct"] < 1e-6


def test_flat_identity_needs_compact_support():
    with pytest.raises(InputError):
        verify_flat_identity(R1, W["r1"], slow(R1, "cos"), 1, gaussian(R1))


# ---------------------------------------------------------------------------
# decompositions


def test_decomposition_from_json_and_evaluation():
    data = {"order": 2, "components": [
        {"alpha": [0], "function": "cos", "growth_order": 0},
        {"alpha": [2], "function": "quad", "growth_order": 2}]}
    dec = load_decomposition(data, R1, W["r1"])
    val = evaluate_decomposition(R1, dec, gaussian(R1, 1.0)).value
    assert val == pytest.approx(math.sqrt(math.pi) * (math.exp(-0.25) + 2), abs=1e-6)
    assert dec.to_dict()["components"][1]["alpha"] == [2]


def test_decomposition_errors():
    with pytest.raises(InputError):
        load_decomposition("{not json", R1, W["r1"])
    with pytest.raises(InputError):
        load_decomposition({"order": 1}, R1, W["r1"])
    with pytest.raises(SlowGrowthError):
        load_decomposition({"order": 0, "components": [{"alpha": [0], "function": "quad"}]},
                           R1, W["r1"])
    with pytest.raises(InputError):
        StructureDecomposition(1, [((2,), slow(R1, "one"), 0, "one")])


def test_third_order_consistency_needs_finer_quadrature():
    # X^α of a bump near its support edge needs about 50 nodes per axis
    w = Weight(HEIS)
    f = slow_function(HEIS, w, "quad")[0]
    phi = tensor_bump(HEIS, [0.75, -0.75, 0.75])
    alpha = (1, 1, 1)
    df = derivative_function(HEIS, SmoothFunction(f, None, "quad", 3), alpha=alpha)
    rhs = pair(Embedded(HEIS, df, 2), phi).value
    lhs = pair(derivative(Embedded(HEIS, f, 2), alpha=alpha), phi, budget=1 << 17).value
    assert lhs == pytest.approx(rhs, abs=1e-4)
