import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jordan_lab.errors import DegenerateData
from jordan_lab.fourier import FourierField, grid_points
from jordan_lab.framing import build_framing, permutation
from jordan_lab.jordan_data import (JordanDataTable, JordanRow, ProjectiveVerdict, framing_table,
                                    linear_table, livsic_constant_check, orbit_alpha_sum, projective_compare)


def random_trig(rng, terms=3, maxfreq=2):
    return FourierField(rng.integers(-maxfreq, maxfreq + 1, (terms, 4)),
                        rng.normal(size=(terms, 1)) * 0.1, rng.normal(size=(terms, 1)) * 0.1)


@pytest.fixture(scope="module")
def orbits4(pullback_orbits):
    return [o for o in pullback_orbits if o.period <= 4]


@pytest.fixture(scope="module")
def tables(seeds5, pullback_framing, pullback_orbits):
    return linear_table(seeds5), framing_table(pullback_framing, pullback_orbits)


def test_linear_table_is_periods(seeds5, linear_framing):
    t = linear_table(seeds5)
    assert all(r.alpha_sum == r.period for r in t.rows)
    # the computed standard framing of L agrees
    for o in seeds5[:50]:
        assert orbit_alpha_sum(linear_framing, o) == pytest.approx(o.period, abs=1e-10)


def test_pullback_same(tables):
    rep = projective_compare(*tables)
    assert rep.verdict is ProjectiveVerdict.SAME
    assert rep.max_residual < 1e-4
    assert len(rep.per_orbit) == len(tables[0].rows)
    assert rep.to_dict()["verdict"] == "Same"


def test_compare_symmetric(tables):
    a, b = projective_compare(*tables), projective_compare(tables[1], tables[0])
    assert a.C * b.C == pytest.approx(1.0, rel=1e-8)


def test_self_and_scaled(tables):
    t = tables[1]
    rep = projective_compare(t, t)
    assert rep.C == 1.0 and rep.max_residual == 0.0
    rep = projective_compare(t, t.scaled(3.0))
    assert rep.C == pytest.approx(1 / 3, rel=1e-14)
    assert rep.max_residual < 1e-12


def test_different_detected(tables):
    lt = tables[0]
    rows = [JordanRow(r.orbit_id, r.period, r.alpha_sum + (0.5 if r.orbit_id == 3 else 0.0)) for r in lt.rows]
    assert projective_compare(JordanDataTable(rows), lt).verdict is ProjectiveVerdict.DIFFERENT


def test_degenerate_and_matching(tables):
    lt = tables[0]
    zero = JordanDataTable([JordanRow(r.orbit_id, r.period, 0.0) for r in lt.rows])
    with pytest.raises(DegenerateData):
        projective_compare(lt, zero)
    with pytest.raises(DegenerateData):
        projective_compare(lt, lt, matching={})
    with pytest.raises(ValueError):
        projective_compare(lt, lt, matching={0: 1})  # period 1 against period 2


def test_csv_roundtrip(tables, tmp_path):
    p = tmp_path / "t.csv"
    tables[1].to_csv(p)
    back = JordanDataTable.from_csv(p)
    assert back.rows == tables[1].rows


def test_coboundary_invariance(pullback_framing, orbits4):
    fr = pullback_framing
    base = framing_table(fr, orbits4).sums()
    rng = np.random.default_rng(11)
    x = grid_points(fr.n)
    perm = permutation(fr.M, fr.n)
    for _ in range(5):
        psi = random_trig(rng)(x)[:, 0]
        moved = dataclasses.replace(fr, alpha=fr.alpha + psi[perm] - psi, _fields=None)
        assert np.abs(framing_table(moved, orbits4).sums() - base).max() < 1e-9


def test_grid_refinement(pullback, pullback_u, pullback_framing, orbits4):
    # framing grid 12 against 24; the coarse grid misses frame_tol, so the
    # check is switched off and only the orbit sums are compared
    coarse = build_framing(pullback, pullback_u, 12, 5, frame_tol=0)
    a = framing_table(coarse, orbits4).sums()
    b = framing_table(pullback_framing, orbits4).sums()
    assert np.abs(a / b - 1).max() < 1e-5


def test_livsic_constant(seeds5, lin):
    orbits = [o for o in seeds5 if o.period <= 4]
    rep = livsic_constant_check(lambda p: np.full(len(p), 0.7), orbits)
    assert rep.constant == 0.7 and rep.max_deviation == 0.0
    g = FourierField([[1, 0, 0, 0], [0, 1, 1, -1]], [[0.2], [0.1]], [[0.0], [0.3]])
    L = lin.Lf
    rep = livsic_constant_check(lambda p: 0.7 + g(p @ L.T)[:, 0] - g(p)[:, 0], orbits)
    assert rep.max_deviation < 1e-9
    rep = livsic_constant_check(lambda p: 0.7 + np.cos(2 * np.pi * p[:, 0]), orbits)
    assert rep.max_deviation > 1e-3
    assert rep.worst_orbit >= 0


@given(st.floats(0.1, 10.0), st.lists(st.floats(-5, 5), min_size=3, max_size=12))
@settings(max_examples=50, deadline=None)
def test_scaling_law(c, sums):
    rows = [JordanRow(i, 1 + i % 3, s + 1.0) for i, s in enumerate(sums)]
    t = JordanDataTable(rows)
    if np.abs(t.sums()).max() < 1e-6:
        return
    rep = projective_compare(t.scaled(c), t)
    assert rep.C == pytest.approx(c, rel=1e-10)
    assert rep.verdict is ProjectiveVerdict.SAME
