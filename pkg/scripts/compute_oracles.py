"""Recompute the frozen exact values in tests/data/oracles.json with sympy.

This is an independent route (sympy's determinant, factorization and Smith
normal form) used only to freeze reference values; the package itself never
imports sympy.

    python3 scripts/compute_oracles.py > tests/data/oracles.json
"""

import json

import sympy as sp
from sympy.matrices.normalforms import smith_normal_form

MATRICES = {
    "base": [[2, 1, 1, 0], [1, 1, 0, 1], [0, 0, 2, 1], [0, 0, 1, 1]],
    "block": [[3, 2, 1, 0], [4, 3, 0, 1], [0, 0, 0, 1], [0, 0, -1, 6]],
    "diag_control": [[2, 1, 0, 0], [1, 1, 0, 0], [0, 0, 2, 1], [0, 0, 1, 1]],
    "companion": [[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 1, 0, 0]],
}


def order_mod(M, n):
    I = sp.eye(4)
    P = M.applyfunc(lambda v: v % n)
    k = 1
    while P != I:
        P = (P * M).applyfunc(lambda v: v % n)
        k += 1
    return k


def main():
    t = sp.symbols("t")
    out = {}
    for name, rows in MATRICES.items():
        M = sp.Matrix(rows)
        cp = M.charpoly(t).as_expr()
        entry = {
            "char_poly_ascending": [int(c) for c in reversed(sp.Poly(cp, t).all_coeffs())],
            "factors": [[str(f), int(e)] for f, e in sp.factor_list(cp)[1]],
            "det": int(M.det()),
        }
        if name in ("base", "block"):
            entry["abs_det_power_minus_identity"] = {
                str(n): int(abs((M ** n - sp.eye(4)).det())) for n in range(1, 9 if name == "base" else 5)}
            entry["lambda"] = str(sp.nsimplify(max(sp.Poly(cp, t).nroots(), key=abs)))
        if name == "base":
            entry["smith_power_minus_identity"] = {}
            for n in range(1, 7):
                D = smith_normal_form(M ** n - sp.eye(4), domain=sp.ZZ)
                entry["smith_power_minus_identity"][str(n)] = sorted(abs(int(D[i, i])) for i in range(4))
            entry["order_mod"] = {str(n): order_mod(M, n) for n in (8, 16, 24, 32)}
            entry["inverse"] = [[int(v) for v in r] for r in M.inv().tolist()]
        out[name] = entry
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
