import numpy as np
import pytest

from jordan_lab.errors import NotJordan
from jordan_lab.exact_linalg import BASE_MATRIX, BLOCK_MATRIX, IntegerMatrix
from jordan_lab.linearization import linear_data, stable_frame, unstable_frame

DIAG = IntegerMatrix([[2, 1, 0, 0], [1, 1, 0, 0], [0, 0, 2, 1], [0, 0, 1, 1]])


@pytest.mark.parametrize("m", [BASE_MATRIX, BLOCK_MATRIX])
def test_chain_relations(m):
    L = m.to_numpy()
    for f in (unstable_frame(m), stable_frame(m)):
        assert np.allclose(L @ f.e1, f.lam * f.e1, atol=1e-12 * f.lam)
        assert np.allclose(L @ f.chain_e2, f.lam * f.chain_e2 + f.e1, atol=1e-12 * f.lam)
        assert abs(np.linalg.norm(f.e1) - 1) < 1e-14 and abs(np.linalg.norm(f.e2) - 1) < 1e-14
        assert abs(f.e1 @ f.e2) < 1e-12


def test_eigenvalues(lin):
    assert lin.lam == pytest.approx((3 + 5 ** 0.5) / 2, rel=1e-15)
    assert lin.fs.lam == pytest.approx(1 / lin.lam, rel=1e-14)
    assert unstable_frame(BLOCK_MATRIX).lam == pytest.approx(3 + 2 * 2 ** 0.5, rel=1e-15)


def test_projectors(lin):
    P = lin.proj
    L = lin.Lf
    assert np.allclose(P.Pu @ P.Pu, P.Pu, atol=1e-12)
    assert np.allclose(P.Pu + P.Ps, np.eye(4))
    assert np.allclose(P.Pu @ L, L @ P.Pu, atol=1e-12)
    assert np.allclose(P.Pu @ lin.fu.e1, lin.fu.e1) and np.allclose(P.Pu @ lin.fs.e1, 0, atol=1e-12)
    # adapted basis turns L into two Jordan blocks
    block = P.Tinv @ L @ P.T
    expect = np.zeros((4, 4))
    expect[:2, :2] = [[lin.lam, 1], [0, lin.lam]]
    expect[2:, 2:] = [[1 / lin.lam, 1], [0, 1 / lin.lam]]
    assert np.allclose(block, expect, atol=1e-12)


def test_rejects_diagonalizable():
    with pytest.raises(NotJordan):
        linear_data(DIAG)


def test_frame_is_deterministic():
    a, b = unstable_frame(BASE_MATRIX), unstable_frame(BASE_MATRIX)
    assert np.array_equal(a.e1, b.e1) and np.array_equal(a.e2, b.e2)
