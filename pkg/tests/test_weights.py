from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from solvschwartz.definitions import BUNDLED, load_group
from solvschwartz.errors import InputError
from solvschwartz.weights import (
    Weight,
    check_inverse_equivalence,
    check_modular_domination,
    check_subpolynomial,
    check_volume_compensation,
    compare_to_euclidean,
    fit_power_bound,
    property_report,
    sample_box,
    sigma,
    sufficient_volume_exponents,
)

WEIGHTS = {name: Weight(load_group(name)) for name in BUNDLED}


def elements(m, bound=5.0):
    return arrays(np.float64, (m,), elements=st.floats(-bound, bound, allow_nan=False))


def test_sigma_at_identity():
    for w in WEIGHTS.values():
        assert sigma(w, w.realization.identity()) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("t", [-3.0, -0.5, 0.0, 1.0, 4.0])
def test_axb_sigma_on_complement(t):
    w = WEIGHTS["axb"]
    assert sigma(w, np.array([t, 0.0])) == pytest.approx(math.exp(abs(t)) * (1 + abs(t)), rel=1e-13)


def test_abelian_sigma_is_length():
    w = WEIGHTS["r1"]
    x = np.linspace(-10, 10, 21)[:, None]
    np.testing.assert_allclose(sigma(w, x), 1 + np.abs(x[:, 0]), rtol=1e-15)


@pytest.mark.parametrize("name", BUNDLED)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_sigma_at_least_one_and_ad_factor_inverse_invariant(name, data):
    w = WEIGHTS[name]
    r = w.realization
    g = data.draw(elements(r.dim))
    assert sigma(w, g) >= 1.0
    assert w.ad_factor(r.inverse(g)) == pytest.approx(w.ad_factor(g), rel=1e-9)


@pytest.mark.parametrize("name", BUNDLED)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_modular_domination_pointwise(name, data):
    w = WEIGHTS[name]
    r = w.realization
    g = data.draw(elements(r.dim, 20.0))
    assert r.modular(g) <= sigma(w, g) ** r.dim * (1 + 1e-12)


def test_axb_modular_domination_example():
    w = WEIGHTS["axb"]
    g = np.array([5.0, 0.0])
    assert w.realization.modular(g) == pytest.approx(math.exp(5))
    assert sigma(w, g) ** 2 == pytest.approx(math.exp(10) * 36, rel=1e-12)
    assert check_modular_domination(w, g[None])["ok"]


# ---------------------------------------------------------------------------
# fits


def test_fit_power_bound_exact_power():
    # C·base would need C = 3·10⁴ > cap, so the exponent must rise to 2
    base = np.linspace(1, 1e4, 200)
    fit = fit_power_bound(3.0 * base ** 2, base)
    assert fit.exponent == 2 and fit.constant == pytest.approx(3.0) and fit.ok


def test_fit_power_bound_identity_sample():
    fit = fit_power_bound(np.ones(1), np.ones(1))
    assert (fit.exponent, fit.constant) == (1, 1.0)


def test_fit_power_bound_reports_failure():
    base = np.linspace(1, 2, 10)
    fit = fit_power_bound(np.exp(50 * base), base, max_exponent=4)
    assert not fit.ok


def test_fit_power_bound_input_checks():
    with pytest.raises(InputError):
        fit_power_bound(np.ones(3), np.ones(2))
    with pytest.raises(InputError):
        fit_power_bound(np.ones(2), np.array([0.5, 1.0]))


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (40,), elements=st.floats(1.0, 100.0)),
       arrays(np.float64, (40,), elements=st.floats(0.01, 100.0)),
       arrays(np.float64, (10,), elements=st.floats(1.0, 100.0)))
def test_fit_exponent_monotone_under_more_samples(base, lhs, extra):
    small = fit_power_bound(lhs, base)
    big = fit_power_bound(np.concatenate([lhs, extra]), np.concatenate([base, extra]))
    assert big.exponent >= small.exponent


def test_inverse_equivalence_examples():
    heis = WEIGHTS["heisenberg"]
    rep = check_inverse_equivalence(heis, sample_box(heis.realization, 8.0, 1000))
    assert rep["r"] == 1 and rep["ok"]
    axb = WEIGHTS["axb"]
    rep = check_inverse_equivalence(axb, sample_box(axb.realization, 8.0, 1000))
    assert rep["ok"] and rep["r"] <= 2
    ident = check_inverse_equivalence(axb, np.zeros((1, 2)))
    assert ident["forward"]["exponent"] == 1 and ident["forward"]["constant"] == 1.0


def test_subpolynomial_examples():
    r1 = WEIGHTS["r1"]
    g, h = sample_box(r1.realization, 64.0, 1000, 1), sample_box(r1.realization, 64.0, 1000, 2)
    rep = check_subpolynomial(r1, g, h)
    assert rep["s"] == 1 and rep["fit"]["constant"] <= 1.0
    heis = WEIGHTS["heisenberg"]
    g, h = sample_box(heis.realization, 8.0, 1000, 1), sample_box(heis.realization, 8.0, 1000, 2)
    assert check_subpolynomial(heis, g, h)["s"] <= 2


def test_volume_compensation_verdicts():
    heis = WEIGHTS["heisenberg"]
    assert check_volume_compensation(heis, 8)["verdict"] == "convergent"
    axb = WEIGHTS["axb"]
    rep = check_volume_compensation(axb, 4)
    assert rep["verdict"] == "convergent" and math.isfinite(rep["tail_bound"])
    assert check_volume_compensation(WEIGHTS["r1"], 0)["verdict"] == "divergent"


def test_volume_compensation_r1_closed_form():
    # ∫ (1+|x|)^{-3} dx = 1
    rep = check_volume_compensation(WEIGHTS["r1"], 3, levels=16, points=10)
    assert rep["value"] + rep["tail_bound"] == pytest.approx(1.0, abs=1e-4)


def test_sufficient_exponent_candidates():
    assert sufficient_volume_exponents(WEIGHTS["m2"], 2) == {"divided": 2.5, "multiplied": 10}


def test_heisenberg_polynomial_comparison():
    w = WEIGHTS["heisenberg"]
    rep = compare_to_euclidean(w, sample_box(w.realization, 8.0, 2000))
    assert rep["ok"]
    assert rep["norm_le_C_sigma_pow"]["exponent"] == 1


def test_property_report_fits_cached():
    w = Weight(load_group("axb"))
    rep = property_report(w, n_samples=2000, n_pairs=1000)
    assert rep["ok"]
    assert rep["modular_domination"]["violations"] == 0
    assert set(w.fits) >= {"p", "q", "r", "s"}
    assert w.fits["p"] in rep["volume_candidates"].values()
