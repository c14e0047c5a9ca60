"""Pullback family over a range of eps: conjugacy residual, |h - phi|, and the
projective constant C between the Jordan data of L and F (orbits to period 3).

    python3 scripts/epsilon_sweep.py --eps 1e-4 3e-4 1e-3 3e-3
"""

import argparse

import numpy as np

from jordan_lab.conjugacy import pullback_map, solve_conjugacy
from jordan_lab.exact_linalg import BASE_MATRIX
from jordan_lab.families import standard_phi
from jordan_lab.fourier import torus_delta
from jordan_lab.framing import build_framing
from jordan_lab.jordan_data import framing_table, linear_table, projective_compare
from jordan_lab.linearization import linear_data
from jordan_lab.periodic_orbits import continue_orbits, linear_orbits_up_to


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-4, 3e-4, 1e-3, 3e-3])
    ap.add_argument("--max-period", type=int, default=3)
    args = ap.parse_args()
    lin = linear_data(BASE_MATRIX)
    seeds = linear_orbits_up_to(BASE_MATRIX, args.max_period)
    x = np.random.default_rng(0).random((2000, 4))
    print(f"{'eps':>8} {'residual':>10} {'|h-phi|':>10} {'C':>12} {'max_res':>10} verdict")
    for eps in args.eps:
        F = pullback_map(standard_phi(), eps, BASE_MATRIX)
        orbits = continue_orbits(F, seeds)
        u = solve_conjugacy(F, lin.proj, 12, 32, pin_point=orbits[0].points[0])
        fr = build_framing(F, u, 24, 11)
        rep = projective_compare(linear_table(seeds), framing_table(fr, orbits))
        err = np.abs(torus_delta(u.h_lift(x), F.phi(x))).max()
        print(f"{eps:8.1e} {u.residual:10.2e} {err:10.2e} {rep.C:12.9f} {rep.max_residual:10.2e} {rep.verdict.value}")


if __name__ == "__main__":
    main()
