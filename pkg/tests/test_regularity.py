import numpy as np
import pytest

from jordan_lab.errors import ResolutionFloor
from jordan_lab.exact_linalg import BASE_MATRIX
from jordan_lab.regularity import (classify_growth, default_scales, flow_relation, growth_dichotomy,
                                   holder_exponent, slow_leaf_intertwine)
from jordan_lab.torus_map import SmoothMap

LINEAR = SmoothMap(BASE_MATRIX)


def test_classify_synthetic(lin):
    n = np.arange(1, 26, dtype=float)
    lam = lin.lam
    assert classify_growth(n, 3e-10 * lam ** n, lam)[0] == "slow"
    assert classify_growth(n, 3e-10 * n * lam ** n, lam)[0] == "generic"
    assert classify_growth(n, 3e-10 * (n + 40) * lam ** n, lam)[0] == "slow"


def test_linear_growth_laws(lin, rng):
    lam = lin.lam
    for _ in range(10):
        x = rng.random(4)
        slow = growth_dichotomy(LINEAR, x, x + 1e-10 * lin.fu.e1, 25, lam)
        assert slow.label == "slow" and slow.slow_drift < 0.01
        v = lin.fu.chain_e2 / np.linalg.norm(lin.fu.chain_e2)
        gen = growth_dichotomy(LINEAR, x, x + 1e-10 * v, 25, lam)
        assert gen.label == "generic"
        c2 = (lin.proj.Tinv @ v)[1]
        ratio = gen.dist[-1] / (25 * lam ** 24 * 1e-10 * c2)
        assert abs(ratio - 1) < 0.03


def test_growth_guard_and_precondition(lin):
    x = np.full(4, 0.3)
    g = growth_dichotomy(LINEAR, x, x + 1e-4 * lin.fu.e1, 25, lin.lam, guard=1e-2)
    assert g.stopped_early and g.dist.max() <= 1e-2
    with pytest.raises(ValueError):
        growth_dichotomy(LINEAR, x, x + 0.1, 5, lin.lam)


@pytest.mark.parametrize("a", [0.3, 0.5, 0.7, 1.0])
def test_holder_calibration(a):
    def h(x):
        x = np.atleast_2d(x)
        return (np.abs(np.sin(np.pi * x[:, :1])) ** a) * np.array([1.0, 0, 0, 0])
    pts = np.random.default_rng(0).random((64, 4))
    pts[0, 0] = 0.0
    est = holder_exponent(h, [1.0, 0, 0, 0], points=pts)
    assert est.exponent == pytest.approx(a, abs=0.02)
    assert est.stderr < 0.02


def test_holder_pullback(pullback_u, lin):
    for v in (lin.fu.e1, lin.fu.e2):
        est = holder_exponent(pullback_u, v, samples=128)
        assert 0.9 <= est.exponent <= 1.1


def test_resolution_floor(pullback_u):
    with pytest.raises(ResolutionFloor):
        holder_exponent(pullback_u, [1, 0, 0, 0], scales=np.logspace(-7, -2, 6))
    assert default_scales()[0] == pytest.approx(1e-4)


def test_slow_leaf_intertwine(pullback_u, pullback_framing, lin, rng):
    x = rng.random((2, 4))
    res = slow_leaf_intertwine(pullback_u, pullback_framing, x, [0.1, -0.1], lin.fu.e1)
    assert res.deviation < 1e-6
    control = slow_leaf_intertwine(pullback_u, pullback_framing, x, [0.1, -0.1], lin.fu.e1, use_e2=True)
    assert control.deviation > 1e-2
    with pytest.raises(ValueError):
        slow_leaf_intertwine(pullback_u, pullback_framing, x, [0.1], lin.fu.e1, step=1e-2)


def test_flow_relation(pullback, pullback_framing, rng):
    res = flow_relation(pullback, pullback_framing, rng.random((5, 4)), 0.2)
    assert res.discrepancy < 1e-4 + res.integrator_error
    assert [r["n"] for r in res.per_n] == [1, 2, 3]


def test_flow_relation_linear(linear_framing, rng):
    res = flow_relation(LINEAR, linear_framing, rng.random((5, 4)), 0.3)
    assert res.discrepancy < 1e-12
