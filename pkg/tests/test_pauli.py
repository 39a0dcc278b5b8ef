import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_expr, dense_label
from liouvex.errors import NumericalIntegrityError
from liouvex.pauli import (
    ExprBank,
    FullPauliBank,
    ObservableExpr,
    PauliString,
    apply_expr,
    apply_word,
    commutator,
    commutator_expectation,
    expectation,
    expr_product,
    pauli_mul,
)
from liouvex.propagator import random_state

labels = st.integers(1, 4).flatmap(
    lambda n: st.tuples(st.text("IXYZ", min_size=n, max_size=n),
                        st.text("IXYZ", min_size=n, max_size=n)))


def test_label_round_trip_and_masks():
    w = PauliString.from_label("XIYZ")
    assert w.label == "XIYZ"
    assert (w.x_mask, w.z_mask) == (0b0101, 0b1100)
    assert w.support == (0, 2, 3)
    assert w.compact() == "X0Y2Z3"
    assert PauliString.from_sites(4, {0: "X", 2: "Y", 3: "Z"}) == w


def test_identity_and_bad_letters():
    assert PauliString.identity(3).is_identity
    with pytest.raises(ValueError):
        PauliString.from_label("XA")


@pytest.mark.parametrize("a,b,phase,res", [
    ("X", "Y", 1j, "Z"),
    ("Y", "X", -1j, "Z"),
    ("Y", "Z", 1j, "X"),
    ("Z", "X", 1j, "Y"),
    ("X", "Z", -1j, "Y"),
    ("XX", "YY", -1, "ZZ"),
    ("XY", "YX", 1, "ZZ"),
])
def test_single_site_products(a, b, phase, res):
    ph, w = pauli_mul(PauliString.from_label(a), PauliString.from_label(b))
    assert ph == phase and w.label == res


@settings(max_examples=200, deadline=None)
@given(labels)
def test_mul_matches_dense(pair):
    a, b = pair
    ph, w = pauli_mul(PauliString.from_label(a), PauliString.from_label(b))
    np.testing.assert_allclose(ph * dense_label(w.label), dense_label(a) @ dense_label(b),
                               atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(labels)
def test_commutes_with_agrees_with_dense(pair):
    a, b = pair
    pa, pb = dense_label(a), dense_label(b)
    assert PauliString.from_label(a).commutes_with(PauliString.from_label(b)) == \
        np.allclose(pa @ pb, pb @ pa)


def test_length_mismatch():
    with pytest.raises(ValueError):
        pauli_mul(PauliString.from_label("X"), PauliString.from_label("XX"))


def test_expr_merges_and_drops_zeros():
    x0 = PauliString.from_label("XI")
    e = ObservableExpr([(1.0, x0), (-1.0, x0), (2.0, PauliString.from_label("IZ"))])
    assert len(e) == 1 and e.terms[0][0] == 2.0


def test_expr_rejects_complex_coefficient():
    with pytest.raises(ValueError):
        ObservableExpr([(1j, PauliString.from_label("X"))])


def test_product_hermiticity_guard():
    x = ObservableExpr.word("X")
    z = ObservableExpr.word("Z")
    with pytest.raises(ValueError):
        expr_product(x, z)
    zz = expr_product(ObservableExpr.word("ZI"), ObservableExpr.word("IZ"))
    assert zz.terms == ((1.0, PauliString.from_label("ZZ")),)


def test_commutator_is_i_times_bracket():
    h = ObservableExpr([(1.0, PauliString.from_label("XX")), (0.5, PauliString.from_label("ZI"))])
    o = ObservableExpr.word("ZI")
    hd, od = dense_expr(h), dense_expr(o)
    np.testing.assert_allclose(dense_expr(commutator(h, o)), 1j * (hd @ od - od @ hd), atol=1e-14)


def test_apply_word_and_expr_match_dense(rng):
    psi = random_state(4, 3)
    for label in ("XIYZ", "YYII", "IIIZ", "ZXZX"):
        np.testing.assert_allclose(apply_word(PauliString.from_label(label), psi),
                                   dense_label(label) @ psi, atol=1e-14)
    e = ObservableExpr([(0.3, PauliString.from_label("XYII")), (-1.2, PauliString.from_label("IZZI"))])
    np.testing.assert_allclose(apply_expr(e, psi), dense_expr(e) @ psi, atol=1e-14)


def test_expectation_and_commutator_expectation():
    psi = random_state(3, 11)
    h = ObservableExpr([(1.0, PauliString.from_label("XXI")), (1.0, PauliString.from_label("YYI")),
                        (0.7, PauliString.from_label("IZZ"))])
    o = ObservableExpr.word("ZII")
    hd, od = dense_expr(h), dense_expr(o)
    assert abs(expectation(psi, o) - np.vdot(psi, od @ psi).real) < 1e-14
    ref = (1j * np.vdot(psi, (hd @ od - od @ hd) @ psi)).real
    assert abs(commutator_expectation(psi, h, o) - ref) < 1e-14


def test_hermiticity_guard_on_corrupted_operator(monkeypatch):
    # a non-Hermitian "observable" smuggled in through a complex phase
    psi = random_state(2, 0)
    import liouvex.pauli as pauli_mod
    orig = pauli_mod.apply_expr
    monkeypatch.setattr(pauli_mod, "apply_expr", lambda o, p: 1j * orig(o, p))
    with pytest.raises(NumericalIntegrityError):
        expectation(psi, ObservableExpr.word("ZI"))


def test_banks_agree_with_direct_evaluation():
    n = 3
    psis = np.array([random_state(n, s) for s in range(4)])
    h = ObservableExpr([(1.0, PauliString.from_label("XXI")), (0.4, PauliString.from_label("ZIZ"))])
    hps = np.array([dense_expr(h) @ p for p in psis])
    exprs = [ObservableExpr.word(PauliString(n, x, z)) for z in range(8) for x in range(8)
             if x or z]
    full = FullPauliBank(n)
    bank = ExprBank(exprs)
    np.testing.assert_allclose(full.expectations(psis), bank.expectations(psis), atol=1e-14)
    np.testing.assert_allclose(full.derivatives(psis, hps), bank.derivatives(psis, hps), atol=1e-13)
    for i, e in enumerate(exprs):
        assert abs(bank.expectations(psis)[2, i] - expectation(psis[2], e)) < 1e-14
