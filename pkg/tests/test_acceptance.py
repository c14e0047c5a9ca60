"""Acceptance criteria 1-9 at their stated tolerances; one PASS/FAIL line each."""

import dataclasses
import filecmp
import json
import time
from pathlib import Path

import numpy as np
import pytest

from jordan_lab.config import load
from jordan_lab.conjugacy import conjugacy_residual, solve_conjugacy
from jordan_lab.errors import ObstructionDetected
from jordan_lab.exact_linalg import BASE_MATRIX, BLOCK_MATRIX, IntegerMatrix, Verdict, classify
from jordan_lab.fourier import FourierField, grid_points, torus_delta
from jordan_lab.framing import build_framing, livsic_rescale, permutation, slow_line_field, unstable_plane_field
from jordan_lab.jordan_data import ProjectiveVerdict, framing_table, linear_table, projective_compare
from jordan_lab.periodic_orbits import enumerate_linear_fixed
from jordan_lab.regularity import flow_relation, growth_dichotomy, holder_exponent
from jordan_lab.runner import run
from jordan_lab.torus_map import SmoothMap

CONFIGS = Path(__file__).parents[1] / "configs"


@pytest.fixture
def report(capsys):
    def emit(n, name, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] criterion {n} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok
    return emit


def test_criterion_1_exact_counts(oracles, report):
    counts, want, t6 = [], [], 0.0
    for n in range(1, 7):
        t = time.perf_counter()
        counts.append(len(enumerate_linear_fixed(BASE_MATRIX, n)))
        t6 = time.perf_counter() - t
        want.append(oracles["base"]["abs_det_power_minus_identity"][str(n)])
    ok = counts == want and counts[:2] == [1, 25] and t6 < 60
    assert report(1, "exact counts", ok, f"counts {counts} vs oracle {want}; n=6 in {t6:.2f}s < 60s")


def test_criterion_2_classification(report):
    diag = IntegerMatrix([[2, 1, 0, 0], [1, 1, 0, 0], [0, 0, 2, 1], [0, 0, 1, 1]])
    a, r, d = classify(BASE_MATRIX), classify(BLOCK_MATRIX), classify(diag)
    ok = (a.verdict == r.verdict == Verdict.JORDAN_ANOSOV and str(a.q) == "t^2 - 3t + 1"
          and str(r.q) == "t^2 - 6t + 1" and d.verdict == Verdict.DIAGONALIZABLE_ANOSOV
          and d.q.at_matrix(diag).is_zero())
    assert report(2, "classification", ok, f"{a.verdict.value} {a.q}; {r.verdict.value} {r.q}; control "
                                          f"{d.verdict.value} with q(M)=0")


def test_criterion_3_framing_fidelity(pullback, pullback_framing, linear_framing, report):
    dev = float(np.abs(linear_framing.alpha - 1).max())
    vn = 2 * pullback_framing.n
    x = np.random.default_rng(0).integers(0, vn, (4096, 4)) / vn
    res = pullback_framing.invariance_residual(pullback, x)
    ok = dev < 1e-10 and max(res.values()) < 1e-7
    assert report(3, "framing fidelity", ok, f"eps=0 alpha dev {dev:.1e} < 1e-10; pullback residual e1 "
                                             f"{res['e1']:.1e}, e2 {res['e2']:.1e} < 1e-7 on 4096 points of "
                                             f"the {vn}-grid")


def test_criterion_4_livsic(lin, pullback_framing, pullback_orbits, report):
    # (a) synthetic coboundary recovery
    line = slow_line_field(unstable_plane_field(SmoothMap(BASE_MATRIX), None, 16))
    g = line.plane.grid
    trig = FourierField([[1, 0, 0, 0], [0, 1, -1, 0], [1, 0, 1, 1]], [[0.3], [0.0], [-0.1]],
                        [[0.2], [0.15], [0.05]])
    gv = trig(g.x)[:, 0]
    res = livsic_rescale(dataclasses.replace(line, multiplier=lin.lam * np.exp(gv[g.perm] - gv)), 7)
    pts = np.random.default_rng(1).random((1000, 4))
    rec_err = float(np.abs(res.psi.psi(pts)[:, 0] - trig(pts)[:, 0]).max())
    # (b) orbit sums unchanged by adding a coboundary to alpha
    fr = pullback_framing
    orbits = [o for o in pullback_orbits if o.period <= 4]
    psi = trig(grid_points(fr.n))[:, 0]
    moved = dataclasses.replace(fr, alpha=fr.alpha + psi[permutation(fr.M, fr.n)] - psi, _fields=None)
    inv_err = float(np.abs(framing_table(moved, orbits).sums() - framing_table(fr, orbits).sums()).max())
    # (c) a non-coboundary is caught by a periodic sum
    bad = lin.lam * np.exp(0.1 * np.cos(2 * np.pi * g.x[:, 0]))
    try:
        livsic_rescale(dataclasses.replace(line, multiplier=bad))
        obstruction = 0.0
    except ObstructionDetected as exc:
        obstruction = float(str(exc).split()[-1])
    ok = rec_err < 1e-6 and inv_err < 1e-9 and obstruction > 1e-3
    assert report(4, "Livsic machinery", ok, f"recovery {rec_err:.1e} < 1e-6; orbit-sum change {inv_err:.1e} "
                                             f"< 1e-9; obstruction {obstruction:.2e} > 1e-3")


def test_criterion_5_conjugacy(pullback, lin, pullback_orbits, report):
    t = time.perf_counter()
    u = solve_conjugacy(pullback, lin.proj, 12, 32, pin_point=pullback_orbits[0].points[0])
    elapsed = time.perf_counter() - t
    off = conjugacy_residual(pullback, u, 67, samples=4096, seed=5)   # odd grid, disjoint from the solve grid
    x = np.random.default_rng(2).random((4096, 4))
    phi_err = float(np.abs(torus_delta(u.h_lift(x), pullback.phi(x))).max())
    ok = max(u.residual, off) < 1e-8 and phi_err < 1e-6 and elapsed < 300
    assert report(5, "conjugacy recovery", ok, f"residual {u.residual:.1e} (64-grid), {off:.1e} (67-grid) < 1e-8; "
                                               f"|h - phi| {phi_err:.1e} < 1e-6; {elapsed:.1f}s < 300s")


def test_criterion_6_jordan_rigidity(seeds5, pullback_framing, pullback_orbits, pullback_u, lin, report):
    rep = projective_compare(linear_table(seeds5), framing_table(pullback_framing, pullback_orbits))
    est = holder_exponent(pullback_u, lin.fu.e2)
    ok = rep.verdict is ProjectiveVerdict.SAME and rep.max_residual < 1e-4 and 0.9 <= est.exponent <= 1.1
    assert report(6, "Jordan data rigidity", ok, f"{rep.verdict.value}, C={rep.C:.7f}, max residual "
                                                 f"{rep.max_residual:.1e} < 1e-4 over {len(rep.per_orbit)} orbits "
                                                 f"to period 5; Holder along e2 {est.exponent:.4f} in [0.9, 1.1]")


def test_criterion_7_growth(lin, report):
    L = SmoothMap(BASE_MATRIX)
    lam, n_max, delta = lin.lam, 25, 1e-10
    rng = np.random.default_rng(7)
    correct, drift, ratio_err = 0, 0.0, 0.0
    for _ in range(50):
        x = rng.random(4)
        s = growth_dichotomy(L, x, x + delta * lin.fu.e1, n_max, lam)
        correct += s.label == "slow"
        drift = max(drift, s.slow_drift)
        a = rng.uniform(-np.pi / 18, np.pi / 18)
        v = np.cos(a) * lin.fu.chain_e2 + np.sin(a) * lin.fu.e1
        v /= np.linalg.norm(v)
        gen = growth_dichotomy(L, x, x + delta * v, n_max, lam)
        correct += gen.label == "generic"
        c2 = abs((lin.proj.Tinv @ v)[1])
        ratio_err = max(ratio_err, abs(gen.dist[-1] / (n_max * lam ** (n_max - 1) * delta * c2) - 1))
    ok = drift < 0.01 and ratio_err < 0.03 and correct == 100
    assert report(7, "growth dichotomy", ok, f"slow drift {drift:.1e} < 1%; n lam^n fit error {ratio_err:.2%} "
                                             f"< 3% at n=25; classifier {correct}/100")


def test_criterion_8_flow_relation(pullback, pullback_framing, report):
    y = np.random.default_rng(8).random((20, 4))
    res = flow_relation(pullback, pullback_framing, y, 0.2, (1, 2, 3))
    ok = res.discrepancy < 1e-4 + res.integrator_error
    assert report(8, "flow relation", ok, f"discrepancy {res.discrepancy:.1e} < 1e-4 + integrator "
                                          f"{res.integrator_error:.1e}; 20 points, n <= 3")


def test_criterion_9_determinism(tmp_path, report):
    cfg = load(CONFIGS / "pullback_full.yaml")
    a, b = tmp_path / "a", tmp_path / "b"
    run(cfg, a)
    run(cfg, b)
    names = sorted(p.name for p in a.iterdir() if p.suffix in (".json", ".csv") and p.name != "timings.json")
    same, diff, _ = filecmp.cmpfiles(a, b, names, shallow=False)
    rep = json.loads((a / "report.json").read_text())
    full_ok = rep["conjugacy"]["residual"] < 1e-8 and rep["jordan"]["verdict"] == "Same"
    ok = not diff and len(same) == len(names) and full_ok
    assert report(9, "determinism", ok, f"{len(same)}/{len(names)} outputs byte-identical ({', '.join(names)}); "
                                        f"full run residual {rep['conjugacy']['residual']:.1e}, verdict "
                                        f"{rep['jordan']['verdict']}")
