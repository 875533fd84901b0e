"""
Laurent polynomial tests over F2
"""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.laurent import ONE, ZERO, LaurentPolyF2, PolyMatrixF2

polys = st.builds(
    LaurentPolyF2,
    bits=st.integers(min_value=0, max_value=255),
    low=st.integers(min_value=-4, max_value=4),
)
matrices = st.builds(PolyMatrixF2, polys, polys, polys, polys)


def test_normalizes_trailing_zeros():
    p = LaurentPolyF2(0b100, 1)
    assert (p.bits, p.low) == (1, 3)
    assert p.monomial_degree() == 3


def test_zero_has_canonical_form():
    assert LaurentPolyF2(0, 7) == ZERO
    assert ZERO.exponents() == []
    assert str(ZERO) == "0"


def test_negative_bits_are_rejected():
    with pytest.raises(ValueError):
        LaurentPolyF2(-1, 0)


def test_frobenius_square():
    p = LaurentPolyF2.from_exponents([0, 1])
    assert (p * p).exponents() == [0, 2]


def test_inverse_monomials_cancel():
    assert LaurentPolyF2.monomial(-1) * LaurentPolyF2.monomial(1) == ONE


def test_rendering():
    assert str(LaurentPolyF2.from_exponents([-1, 0, 1])) == "z^-1 + 1 + z"


def test_non_monomials_have_no_degree():
    assert LaurentPolyF2.from_exponents([0, 3]).monomial_degree() is None
    assert ZERO.monomial_degree() is None


@given(polys)
def test_addition_is_its_own_inverse(p):
    assert p + p == ZERO


@given(polys, polys, polys)
def test_ring_laws(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a


@given(matrices, matrices)
def test_determinant_is_multiplicative(m, n):
    assert (m @ n).det() == m.det() * n.det()


def test_identity_matrix():
    ident = PolyMatrixF2(ONE, ZERO, ZERO, ONE)
    assert ident.det() == ONE
    assert ident.to_dict() == {"entries": [["1", "0"], ["0", "1"]], "det": "1"}
