from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jordan_lab.errors import NotUnimodular
from jordan_lab.exact_linalg import (BASE_MATRIX, BLOCK_MATRIX, IntegerMatrix, IntPolynomial, Verdict,
                                     char_poly, classify, power_minus_identity_det, smith_form,
                                     verify_block_form)

DIAG = IntegerMatrix([[2, 1, 0, 0], [1, 1, 0, 0], [0, 0, 2, 1], [0, 0, 1, 1]])
COMPANION = IntegerMatrix([[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 1, 0, 0]])

small_ints = st.integers(-6, 6)
matrices = st.lists(small_ints, min_size=16, max_size=16).map(IntegerMatrix.from_flat)


def test_char_poly_matches_oracle(oracles):
    for name, m in (("base", BASE_MATRIX), ("block", BLOCK_MATRIX), ("diag_control", DIAG),
                    ("companion", COMPANION)):
        assert list(char_poly(m).coeffs) == oracles[name]["char_poly_ascending"]


def test_classify_base():
    c = classify(BASE_MATRIX)
    assert c.verdict == Verdict.JORDAN_ANOSOV
    assert str(c.q) == "t^2 - 3t + 1"
    assert c.is_hyperbolic and c.has_jordan_block
    lo, hi = c.lambda_bounds
    assert hi - lo < Fraction(1, 10 ** 11)
    assert lo < (3 + 5 ** 0.5) / 2 < hi


def test_classify_block_matrix():
    c = classify(BLOCK_MATRIX)
    assert c.verdict == Verdict.JORDAN_ANOSOV
    assert str(c.q) == "t^2 - 6t + 1"


def test_diagonalizable_control_rejected():
    c = classify(DIAG)
    assert c.verdict == Verdict.DIAGONALIZABLE_ANOSOV
    assert c.q.at_matrix(DIAG).is_zero()


def test_irreducible_quartic_not_applicable():
    c = classify(COMPANION)
    assert c.verdict == Verdict.NOT_APPLICABLE
    assert c.q is None


def test_non_hyperbolic_square():
    # q = t^2 - 2t + 1 = (t - 1)^2 has q(1) = 0
    m = IntegerMatrix([[1, 1, 1, 0], [0, 1, 0, 1], [0, 0, 1, 1], [0, 0, 0, 1]])
    assert classify(m).verdict == Verdict.NOT_ANOSOV


@pytest.mark.parametrize("n", range(1, 9))
def test_fixed_point_counts(oracles, n):
    assert abs(power_minus_identity_det(BASE_MATRIX, n)) == oracles["base"]["abs_det_power_minus_identity"][str(n)]


@pytest.mark.parametrize("n", range(1, 5))
def test_block_counts(oracles, n):
    assert abs(power_minus_identity_det(BLOCK_MATRIX, n)) == oracles["block"]["abs_det_power_minus_identity"][str(n)]


@pytest.mark.parametrize("n", range(1, 7))
def test_smith_form_matches_oracle(oracles, n):
    m = (BASE_MATRIX ** n) - IntegerMatrix.identity()
    sf = smith_form(m)
    assert sf.check(m)
    assert sorted(abs(d) for d in sf.d) == oracles["base"]["smith_power_minus_identity"][str(n)]


def test_inverse_matches_oracle(oracles):
    assert [list(r) for r in BASE_MATRIX.inverse().rows] == oracles["base"]["inverse"]
    assert (BASE_MATRIX @ BASE_MATRIX.inverse()) == IntegerMatrix.identity()
    assert BASE_MATRIX ** -2 == BASE_MATRIX.inverse() @ BASE_MATRIX.inverse()


def test_not_unimodular():
    with pytest.raises(NotUnimodular):
        IntegerMatrix([[2, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]).inverse()


def test_polynomial_printing_and_eval():
    p = IntPolynomial([1, -3, 1])
    assert str(p) == "t^2 - 3t + 1"
    assert p(0) == 1 and p(1) == -1
    assert (p * p).coeffs == tuple(char_poly(BASE_MATRIX).coeffs)


def test_block_form_verdict():
    v = verify_block_form(BASE_MATRIX, IntegerMatrix.identity())
    assert v.passed and not v.reasons
    assert verify_block_form(IntegerMatrix.from_flat([1, 2, 0, 0, 0, 1, 0, 0, 3, 0, 1, 0, 0, 0, 0, 1]),
                             IntegerMatrix.identity()).passed is False


@given(matrices)
@settings(max_examples=60, deadline=None)
def test_det_agrees_with_float(m):
    assert abs(m.det() - np.linalg.det(m.to_numpy())) < 1e-6 * max(1.0, abs(m.det()))


@given(matrices)
@settings(max_examples=60, deadline=None)
def test_char_poly_cayley_hamilton(m):
    assert char_poly(m).at_matrix(m).is_zero()


@given(matrices)
@settings(max_examples=40, deadline=None)
def test_smith_form_invariants(m):
    sf = smith_form(m)
    assert sf.check(m)
    assert abs(sf.U.det()) == 1 and abs(sf.V.det()) == 1
    d = [abs(v) for v in sf.d]
    nz = [v for v in d if v]
    assert d[: len(nz)] == nz  # zeros trail
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))
    assert abs(m.det()) == (np.prod(d, dtype=object) if all(d) else 0)


@given(matrices, st.integers(0, 3))
@settings(max_examples=30, deadline=None)
def test_adjugate_identity(m, k):
    adj = m.adjugate()
    assert m @ adj == IntegerMatrix.identity().scale(m.det())
    assert (m ** k) @ (m ** 1) == m ** (k + 1)
