"""Tests for Gaussian-rational scalars and truncated jets."""

import math

import pytest
from hypothesis import given, strategies as st

from tractorlab.exactnum import (
    EXACT, FLOAT, Jet, QI, QI_I, QI_ONE, QI_ZERO,
    jets_agree, poly_from_terms, rational, scalar_is_zero,
)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=11)
gaussians = st.builds(QI, rationals, rationals)


@given(gaussians, gaussians, gaussians)
def test_qi_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@given(gaussians)
def test_qi_conjugation(a):
    assert a.conjugate().conjugate() == a
    norm = a * a.conjugate()
    assert norm.im == 0
    assert (a + a.conjugate()).im == 0


@given(gaussians, gaussians)
def test_qi_division_inverts_multiplication(a, b):
    if not b:
        return
    assert (a / b) * b == a


def test_qi_basics():
    assert QI(2) + 3 == QI(5)
    assert 1 - QI(0, 1) == QI(1, -1)
    assert QI_I * QI_I == QI(-1)
    assert QI(rational(3, 4), rational(-1, 2)).conjugate() == QI(rational(3, 4), rational(1, 2))
    with pytest.raises(ZeroDivisionError):
        QI(1) / QI_ZERO
    assert complex(QI(rational(1, 2), 1)) == 0.5 + 1j
    assert abs(QI(3, 4)) == pytest.approx(5.0)


def test_qi_str_format():
    assert str(QI(rational(3, 4), rational(-1, 2))) in ("3/4-1/2i", "3/4 - 1/2i")
    assert str(QI_ZERO) == "0"


def _x(k, num_vars=2):
    return Jet.coordinate(num_vars, k)


def test_polynomial_product_is_exact():
    one = Jet.constant(2, QI_ONE)
    p = (one + _x(0)) * (one - _x(0))
    assert p.order is None
    assert p.coeffs == {(0, 0): QI_ONE, (2, 0): QI(-1)}


def test_partial_derivative_of_polynomial():
    p = _x(0) * _x(0) * _x(1)  # x^2 y
    d = p.partial(0)
    assert d.order is None
    assert d.coeffs == {(1, 1): QI(2)}
    assert p.partial(0).partial(1).coeffs == {(1, 0): QI(2)}


def test_finite_order_caps_products():
    p = (_x(0) + _x(1)).truncate(2)
    q = p * p * p
    assert q.order == 2
    assert all(sum(k) <= 2 for k in q.coeffs)


def test_partial_decrements_finite_order():
    p = (_x(0) * _x(0)).truncate(2)
    d = p.partial(0)
    assert d.order == 1
    d2 = d.partial(0)
    assert d2.order == 0
    with pytest.raises(ValueError, match="reliable order"):
        d2.partial(0)


def test_invert_newton_iteration():
    a = Jet.constant(2, QI(2)) + _x(0) + _x(1) * _x(1)
    inv = a.invert(5)
    assert inv.order == 5
    prod = a * inv
    assert prod == Jet.constant(2, QI_ONE, order=5)


def test_invert_needs_nonzero_constant_term():
    with pytest.raises(ZeroDivisionError):
        _x(0).invert(3)


def test_invert_of_complete_polynomial_needs_cap():
    a = Jet.constant(2, QI_ONE) + _x(0)
    with pytest.raises(ValueError):
        a.invert(None)


def test_compose_exp():
    u = (_x(0) + _x(1)).truncate(4)
    e = u.compose_exp()
    eminus = (-u).compose_exp()
    assert e * eminus == Jet.constant(2, QI_ONE, order=4)
    # d/dx exp(u) = u_x exp(u), reliable one order lower
    lhs = e.partial(0)
    rhs = u.partial(0) * e
    assert jets_agree(lhs.truncate(3), rhs.truncate(3))


def test_compose_exp_rejects_constant_term():
    u = Jet.constant(1, QI_ONE, order=3)
    with pytest.raises(ValueError):
        u.compose_exp()


def test_min_order_propagation():
    a = (_x(0)).truncate(3)
    b = (_x(1)).truncate(5)
    assert (a + b).order == 3
    assert (a * b).order == 3
    c = _x(0)  # complete
    assert (c + b).order == 5
    assert (c * c).order is None


def test_conjugate_is_coefficientwise():
    p = _x(0).scale(QI_I) + Jet.constant(2, QI(1, 2))
    q = p.conjugate()
    assert q.coeffs[(1, 0)] == QI(0, -1)
    assert q.coeffs[(0, 0)] == QI(1, -2)


def test_shape_and_backend_mismatch_errors():
    with pytest.raises(ValueError, match="variables"):
        _ = Jet.coordinate(2, 0) + Jet.coordinate(3, 0)
    with pytest.raises(ValueError, match="backend"):
        _ = Jet.coordinate(2, 0) + Jet.coordinate(2, 0, backend=FLOAT)


def test_float_backend_tracks_exact():
    terms = [((1, 0), QI(rational(1, 3))), ((0, 2), QI(0, rational(-2, 7)))]
    p = poly_from_terms(2, terms)
    q = poly_from_terms(2, [(k, complex(v)) for k, v in terms], backend=FLOAT)
    pp, qq = p * p, q * q
    for key, val in pp.coeffs.items():
        assert abs(complex(val) - qq.coeffs[key]) < 1e-12


def test_jets_agree_relative_tolerance():
    p = poly_from_terms(1, [((1,), 1.0)], backend=FLOAT)
    q = poly_from_terms(1, [((1,), 1.0 + 1e-13)], backend=FLOAT)
    assert jets_agree(p, q, rel_tol=1e-9)
    assert not jets_agree(p, q.scale(2.0), rel_tol=1e-9)


small_polys = st.lists(
    st.tuples(st.tuples(st.integers(0, 2), st.integers(0, 2)),
              st.builds(QI, rationals)),
    min_size=0, max_size=4,
).map(lambda terms: poly_from_terms(2, terms))


@given(small_polys, small_polys, small_polys)
def test_jet_multiplication_associates(a, b, c):
    assert (a * b) * c == a * (b * c)


@given(small_polys, small_polys)
def test_jet_product_rule(a, b):
    lhs = (a * b).partial(0)
    rhs = a.partial(0) * b + a * b.partial(0)
    assert lhs == rhs


def test_scalar_is_zero_tolerance():
    assert scalar_is_zero(QI_ZERO)
    assert not scalar_is_zero(QI(rational(1, 10 ** 9)))
    assert scalar_is_zero(1e-15 + 0j, tol=1e-12)
    assert not scalar_is_zero(1e-3 + 0j, tol=1e-12)
