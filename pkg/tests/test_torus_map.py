import numpy as np
import pytest

from jordan_lab.errors import CannotCertify, NotDiffeo
from jordan_lab.exact_linalg import BASE_MATRIX, BLOCK_MATRIX
from jordan_lab.families import standard_perturbation, standard_phi
from jordan_lab.fourier import FourierField, torus_delta
from jordan_lab.linearization import linear_data
from jordan_lab.torus_map import PullbackMap, SmoothMap, anosov_certify, cone_basis

L = BASE_MATRIX.to_numpy()


@pytest.fixture(scope="module")
def additive():
    return SmoothMap(BASE_MATRIX, 1e-3, standard_perturbation())


def test_linear_map_trivia(rng):
    F = SmoothMap(BASE_MATRIX)
    assert np.array_equal(F.eval(np.zeros(4)), np.zeros((1, 4)))
    x = rng.random((20, 4))
    assert np.allclose(F.eval(x), np.mod(x @ L.T, 1.0))
    assert np.allclose(F.inverse_eval(x), np.mod(x @ BASE_MATRIX.inverse().to_numpy().T, 1.0))
    assert np.array_equal(F.jacobian(x)[3], L.astype(float))


@pytest.mark.parametrize("which", ["additive", "pullback"])
def test_lift_equivariance(which, additive, pullback, rng):
    F = additive if which == "additive" else pullback
    x = rng.random((200, 4))
    base = F.eval_lift(x)
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        assert np.abs(F.eval_lift(x + e) - base - L[:, k]).max() < 1e-13


def test_single_term_jacobian():
    v = np.array([0.3, -0.1, 0.2, 0.5])
    P = FourierField([[1, 0, 0, 0]], [np.zeros(4)], [v])
    F = SmoothMap(BASE_MATRIX, 0.01, P)
    expect = L + 0.01 * 2 * np.pi * np.outer(v, [1, 0, 0, 0])
    assert np.allclose(F.jacobian(np.zeros(4))[0], expect, atol=1e-15)


@pytest.mark.parametrize("which", ["additive", "pullback"])
def test_jacobian_central_difference_order(which, additive, pullback, rng):
    F = additive if which == "additive" else pullback
    x = rng.random((5, 4))
    u = rng.normal(size=4)
    u /= np.linalg.norm(u)
    J = F.jacobian(x) @ u
    errs = []
    for d in (1e-3, 1e-4, 1e-5):
        fd = (F.eval_lift(x + d * u) - F.eval_lift(x - d * u)) / (2 * d)
        errs.append(np.abs(fd - J).max())
    # errors shrink like d^2 until round-off takes over
    order = np.log10(errs[0] / errs[1])
    assert order >= 1.9 or errs[1] < 1e-9
    fwd = (F.eval_lift(x + 1e-6 * u) - F.eval_lift(x)) / 1e-6
    assert np.abs(fwd - J).max() < 1e-6 * 10


@pytest.mark.parametrize("which", ["additive", "pullback"])
def test_inverse_roundtrips(which, additive, pullback, rng):
    F = additive if which == "additive" else pullback
    y = rng.random((100, 4))
    assert np.abs(torus_delta(F.eval(F.inverse_eval(y)), y)).max() < 1e-12
    assert np.abs(torus_delta(F.inverse_eval(F.eval(y)), y)).max() < 1e-12


def test_pullback_conjugates(pullback, rng):
    x = rng.random((100, 4))
    lhs = pullback.eval_lift(pullback.phi(x))
    rhs = pullback.phi(x @ L.T)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_pullback_nonlinear_matches_definition(pullback, rng):
    y = rng.random((50, 4))
    assert np.abs(pullback.nonlinear(y) - (pullback.eval_lift(y) - y @ L.T)).max() < 1e-12


def test_pullback_eps_zero_is_linear(rng):
    F = PullbackMap(BASE_MATRIX, 0.0, standard_phi())
    x = rng.random((10, 4))
    assert np.array_equal(F.eval_lift(x), x @ L.T)


def test_not_diffeo():
    with pytest.raises(NotDiffeo):
        PullbackMap(BASE_MATRIX, 1.0, standard_phi())


@pytest.mark.parametrize("m", [BASE_MATRIX, BLOCK_MATRIX])
def test_certify_linear(m):
    lin = linear_data(m)
    cert = anosov_certify(SmoothMap(m), lin, 16, 0.2)
    assert cert.certified
    # expansion of lam * [[1, s], [0, 1]] on the cone: lam * sigma_min minus the
    # theta-weighted off-diagonal block (zero for a linear map)
    T, Tinv = cone_basis(lin)
    s = (Tinv @ m.to_numpy() @ T)[0, 1] / lin.lam
    sigma_min = (np.sqrt(s * s + 4) - abs(s)) / 2
    assert cert.mu == pytest.approx(lin.lam * sigma_min, rel=1e-2)


@pytest.mark.slow
def test_certify_additive_at_32(additive, lin):
    assert anosov_certify(additive, lin, 32).certified


def test_cannot_certify_large_eps(lin):
    with pytest.raises(CannotCertify) as err:
        anosov_certify(SmoothMap(BASE_MATRIX, 0.05, standard_perturbation()), lin, 16)
    assert err.value.worst_point is not None
    assert not err.value.record.certified and err.value.record.margin < 0


def test_certify_grid_precondition(lin):
    with pytest.raises(ValueError):
        anosov_certify(SmoothMap(BASE_MATRIX), lin, 8)
