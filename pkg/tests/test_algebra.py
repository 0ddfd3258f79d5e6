from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from solvschwartz.algebra import (
    LieAlgebra,
    Subspace,
    ad_matrix,
    bracket,
    derived_series,
    direct_sum,
    intersection,
    is_nilpotent,
    is_solvable,
    killing_form,
    lower_central_series,
    span,
    validate_nilradical,
)
from solvschwartz.definitions import BUNDLED, load_definition
from solvschwartz.errors import AlgebraValidationError, InputError, NilradicalError

ALGEBRAS = {name: load_definition(name).algebra() for name in BUNDLED}
NILRADICALS = {name: load_definition(name).nilradical_space() for name in BUNDLED}


def e(m, *idx):
    v = np.zeros(m)
    for i in idx:
        v[i] = 1.0
    return v


def vec(m):
    return arrays(np.float64, (m,), elements=st.floats(-2, 2, allow_nan=False))


# ---------------------------------------------------------------------------
# brackets and ad


def test_bracket_examples():
    heis, axb = ALGEBRAS["heisenberg"], ALGEBRAS["axb"]
    x = np.array([0.3, -1.2, 2.0])
    np.testing.assert_array_equal(bracket(heis, x, x), np.zeros(3))
    np.testing.assert_array_equal(bracket(heis, e(3, 0), e(3, 1)), e(3, 2))
    np.testing.assert_array_equal(bracket(axb, e(2, 0), e(2, 1)), e(2, 1))


def test_ad_matrix_examples():
    m2 = ALGEBRAS["m2"]
    np.testing.assert_array_equal(ad_matrix(m2, np.zeros(3)), np.zeros((3, 3)))
    ad1 = ad_matrix(m2, e(3, 0))
    np.testing.assert_array_equal(ad1 @ e(3, 1), e(3, 2))
    np.testing.assert_array_equal(ad1 @ e(3, 2), -e(3, 1))


def test_bracket_rejects_wrong_length():
    with pytest.raises(InputError):
        bracket(ALGEBRAS["axb"], np.zeros(3), np.zeros(2))


@pytest.mark.parametrize("name", BUNDLED)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_ad_is_a_homomorphism(name, data):
    a = ALGEBRAS[name]
    x, y = data.draw(vec(a.dim)), data.draw(vec(a.dim))
    lhs = ad_matrix(a, bracket(a, x, y))
    rhs = ad_matrix(a, x) @ ad_matrix(a, y) - ad_matrix(a, y) @ ad_matrix(a, x)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("name", BUNDLED)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_jacobi_on_random_triples(name, data):
    a = ALGEBRAS[name]
    x, y, z = (data.draw(vec(a.dim)) for _ in range(3))
    jac = (bracket(a, x, bracket(a, y, z)) + bracket(a, y, bracket(a, z, x))
           + bracket(a, z, bracket(a, x, y)))
    np.testing.assert_allclose(jac, 0.0, atol=1e-12)


@pytest.mark.parametrize("name", BUNDLED)
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_derived_algebra_lies_in_nilradical(name, data):
    a, n = ALGEBRAS[name], NILRADICALS[name]
    x, y = data.draw(vec(a.dim)), data.draw(vec(a.dim))
    assert n.contains(bracket(a, x, y), tol=1e-9)


# ---------------------------------------------------------------------------
# validation of structure constants


def test_antisymmetry_violation_has_witness():
    c = np.zeros((2, 2, 2))
    c[0, 1, 1] = 1.0
    with pytest.raises(AlgebraValidationError) as info:
        LieAlgebra(c)
    assert info.value.witness is not None


def test_jacobi_violation_is_rejected():
    # [X1,X2]=X3, [X2,X3]=X1, [X1,X3]=X1 fails Jacobi
    with pytest.raises(AlgebraValidationError):
        LieAlgebra.from_entries(3, [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (0, 2, 0, 1.0)])


def test_from_entries_schema():
    with pytest.raises(InputError):
        LieAlgebra.from_entries(2, [(1, 0, 1, 1.0)])
    with pytest.raises(InputError):
        LieAlgebra.from_entries(2, [(0, 1, 1, 1.0), (0, 1, 1, 2.0)])
    with pytest.raises(InputError):
        LieAlgebra.from_entries(2, [(0, 2, 1, 1.0)])


def test_basis_change_preserves_brackets():
    a = ALGEBRAS["m2"]
    b = np.array([[1.0, 0, 0], [0.5, 2.0, 0], [0, 1.0, 1.0]])
    new = a.basis_change(b)
    for i in range(3):
        for j in range(3):
            lhs = b @ new.bracket(e(3, i), e(3, j))
            np.testing.assert_allclose(lhs, a.bracket(b[:, i], b[:, j]), atol=1e-14)


# ---------------------------------------------------------------------------
# series


def test_abelian_derived_series():
    a = LieAlgebra.abelian(3)
    series = derived_series(a)
    assert [s.dim for s in series] == [3, 0]
    assert is_nilpotent(a) == (True, 1)


def test_heisenberg_lower_central_series():
    a = ALGEBRAS["heisenberg"]
    series = lower_central_series(a)
    assert [s.dim for s in series] == [3, 1, 0]
    assert series[1].equals(span(e(3, 2)[:, None]))
    assert is_nilpotent(a) == (True, 2)


def test_axb_derived_series():
    a = ALGEBRAS["axb"]
    series = derived_series(a)
    assert [s.dim for s in series] == [2, 1, 0]
    assert series[1].equals(span(e(2, 1)[:, None]))
    assert is_solvable(a)
    assert is_nilpotent(a)[0] is False


def test_m2_is_solvable_not_nilpotent():
    a = ALGEBRAS["m2"]
    assert is_solvable(a)
    assert not is_nilpotent(a)[0]
    assert [s.dim for s in lower_central_series(a)] == [3, 2]


def test_non_solvable_algebra_detected():
    # sl2 in the basis H, E, F
    sl2 = LieAlgebra.from_entries(3, [(0, 1, 1, 2.0), (0, 2, 2, -2.0), (1, 2, 0, 1.0)])
    assert not is_solvable(sl2)
    assert killing_form(sl2, e(3, 0), e(3, 0)) == pytest.approx(8.0)


# ---------------------------------------------------------------------------
# subspaces


def test_subspace_operations():
    u = Subspace.from_vectors([[1, 0, 0], [0, 1, 0]], 3)
    v = Subspace.from_vectors([[0, 1, 0], [0, 0, 1]], 3)
    w = intersection(u, v)
    assert w.dim == 1 and w.contains(e(3, 1))
    assert u.contains_subspace(w) and not u.contains(e(3, 2))
    np.testing.assert_allclose(u.projector() @ np.array([1.0, 2.0, 3.0]), [1.0, 2.0, 0.0])
    with pytest.raises(InputError):
        Subspace(np.array([[1.0, 2.0], [2.0, 4.0]]))


# ---------------------------------------------------------------------------
# nilradical validation and Killing form


def test_heisenberg_whole_algebra_is_nilradical():
    rep = validate_nilradical(ALGEBRAS["heisenberg"], Subspace.whole(3))
    assert rep.valid and rep.nilpotency_class == 2
    assert rep.maximality_evidence == []


def test_axb_nilradical_and_trace_evidence():
    rep = validate_nilradical(ALGEBRAS["axb"], span(e(2, 1)[:, None]))
    assert rep.valid and rep.maximality_supported
    (ev,) = rep.maximality_evidence
    assert ev["traces"][1] == pytest.approx(1.0, abs=1e-14)


def test_axb_wrong_nilradical_is_rejected():
    with pytest.raises(NilradicalError) as info:
        validate_nilradical(ALGEBRAS["axb"], span(e(2, 0)[:, None]))
    assert info.value.axiom == "ideal"
    assert info.value.witness is not None
    with pytest.warns(UserWarning):
        rep = validate_nilradical(ALGEBRAS["axb"], span(e(2, 0)[:, None]), raise_on_failure=False)
    assert not rep.valid


def test_too_small_nilradical_misses_derived_algebra():
    with pytest.raises(NilradicalError) as info:
        validate_nilradical(ALGEBRAS["axb"], Subspace.zero(2))
    assert info.value.axiom == "derived"


def test_non_maximal_nilradical_warns():
    # span(Y, Z) is a nilpotent ideal containing [g, g], but ad X is nilpotent
    with pytest.warns(UserWarning):
        rep = validate_nilradical(ALGEBRAS["heisenberg"],
                                  Subspace.from_vectors([[0, 1, 0], [0, 0, 1]], 3))
    assert rep.valid and not rep.maximality_supported


def test_killing_forms():
    heis, axb = ALGEBRAS["heisenberg"], ALGEBRAS["axb"]
    for i in range(3):
        for j in range(3):
            assert killing_form(heis, e(3, i), e(3, j)) == 0.0
    assert killing_form(axb, e(2, 0), e(2, 0)) == pytest.approx(1.0)
    assert killing_form(axb, e(2, 0), e(2, 1)) == 0.0
    assert killing_form(axb, e(2, 1), e(2, 1)) == 0.0


def test_direct_sum_blocks():
    s = direct_sum(ALGEBRAS["axb"], ALGEBRAS["heisenberg"])
    assert s.dim == 5
    np.testing.assert_array_equal(s.bracket(e(5, 0), e(5, 1)), e(5, 1))
    np.testing.assert_array_equal(s.bracket(e(5, 2), e(5, 3)), e(5, 4))
    np.testing.assert_array_equal(s.bracket(e(5, 0), e(5, 2)), np.zeros(5))
