"""Periodic points of ``L`` (exact enumeration) and their continuation to ``F``."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import Degenerate, FrameUnavailable, NoConvergence
from .exact_linalg import IntegerMatrix, smith_form
from .torus_map import TorusMap

DISC_TOL = 1e-4
DEFECT_TOL = 1e-3


@dataclass
class OrbitRecord:
    period: int
    points: np.ndarray                      # (k, 4) in [0, 1)
    shifts: np.ndarray                      # (k, 4) ints: F~(x_i) = x_{i+1} + m_i
    numerators: Optional[np.ndarray] = None  # exact linear seed: points = numerators / denom
    denom: Optional[int] = None
    orbit_id: int = -1
    residual: float = 0.0
    return_diff: Optional[np.ndarray] = None
    unstable_block: Optional[np.ndarray] = None
    eig: Optional[np.ndarray] = None
    jordan_defect: Optional[float] = None
    tag: str = ""
    alpha_sum: Optional[float] = None

    @property
    def representative(self) -> np.ndarray:
        return self.points[0]


@dataclass(frozen=True)
class FixedPointSet:
    """Solutions of (L^n - I) x = 0 mod Z^4 as exact rationals ``numerators / denom``."""

    n: int
    denom: int
    numerators: np.ndarray
    det: int

    @property
    def points(self) -> np.ndarray:
        return self.numerators / self.denom

    def __len__(self) -> int:
        return len(self.numerators)


def enumerate_linear_fixed(L: IntegerMatrix, n: int) -> FixedPointSet:
    M = (L ** n) - IntegerMatrix.identity()
    det = M.det()
    if det == 0:
        raise Degenerate(f"det(L^{n} - I) = 0")
    sf = smith_form(M)
    d = [abs(v) for v in sf.d]
    D = d[-1]
    V = np.array(sf.V.rows, dtype=object)
    # coset representatives a_i / d_i of (Z/d_i), mapped back by V
    grids = np.indices(d).reshape(4, -1).T.astype(object)
    scale = np.array([D // di for di in d], dtype=object)
    num = (grids * scale) @ V.T
    num = np.mod(num, D).astype(np.int64)
    order = np.lexsort(num.T[::-1])
    return FixedPointSet(n, D, num[order], det)


def _orbit_key(num: np.ndarray, D: int) -> np.ndarray:
    num = num.astype(np.int64)
    return ((num[:, 0] * D + num[:, 1]) * D + num[:, 2]) * D + num[:, 3]


def group_into_orbits(fps: FixedPointSet, L: IntegerMatrix) -> list:
    """Partition Fix(L^n) into L-orbits (least periods divide n)."""
    D = fps.denom
    Li = np.array(L.rows, dtype=np.int64)
    num = fps.numerators
    img = num @ Li.T
    img_red = np.mod(img, D)
    keys = _orbit_key(num, D)
    order = np.argsort(keys)
    pos = np.searchsorted(keys[order], _orbit_key(img_red, D))
    nxt = order[pos]
    if not np.array_equal(keys[nxt], _orbit_key(img_red, D)):
        raise Degenerate("fixed point set not closed under L")
    seen = np.zeros(len(num), bool)
    orbits = []
    for start in range(len(num)):
        if seen[start]:
            continue
        cyc = [start]
        seen[start] = True
        j = nxt[start]
        while j != start:
            cyc.append(j)
            seen[j] = True
            j = nxt[j]
        cyc = np.array(cyc)
        nums = num[cyc]
        nxt_nums = np.roll(nums, -1, axis=0)
        shifts = (img[cyc] - nxt_nums) // D
        orbits.append(OrbitRecord(len(cyc), nums / D, shifts.astype(np.int64), nums, D))
    return orbits


def linear_orbits_up_to(L: IntegerMatrix, max_period: int) -> list:
    """All L-orbits of least period k <= max_period, ids assigned in order."""
    out = []
    for k in range(1, max_period + 1):
        out.extend(o for o in group_into_orbits(enumerate_linear_fixed(L, k), L) if o.period == k)
    for i, o in enumerate(out):
        o.orbit_id = i
    return out


def _residual(F: TorusMap, X: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    b, k, _ = X.shape
    img = F.eval_lift(X.reshape(-1, 4)).reshape(b, k, 4)
    return img - np.roll(X, -1, axis=1) - shifts


def continue_orbits(F: TorusMap, seeds: list, tol: float = 1e-12, maxiter: int = 30) -> list:
    """Newton continuation of linear seeds to periodic orbits of ``F`` with the
    integer shifts frozen. Orbits of equal period are solved as one batch."""
    out = [None] * len(seeds)
    by_period = {}
    for i, s in enumerate(seeds):
        by_period.setdefault(s.period, []).append(i)
    for k, idx in sorted(by_period.items()):
        X = np.stack([seeds[i].points for i in idx]).astype(float)
        S = np.stack([seeds[i].shifts for i in idx]).astype(float)
        b = len(idx)
        r = _residual(F, X, S)
        it = 0
        while np.abs(r).max() >= tol:
            if it == maxiter:
                raise NoConvergence(f"period {k}: residual {np.abs(r).max():.2e} after {maxiter} iterations")
            J = F.jacobian(X.reshape(-1, 4)).reshape(b, k, 4, 4)
            big = np.zeros((b, 4 * k, 4 * k))
            for i in range(k):
                j = (i + 1) % k
                big[:, 4 * i:4 * i + 4, 4 * i:4 * i + 4] += J[:, i]
                big[:, 4 * i:4 * i + 4, 4 * j:4 * j + 4] -= np.eye(4)
            dx = np.linalg.solve(big, r.reshape(b, 4 * k, 1))[..., 0]
            X = X - dx.reshape(b, k, 4)
            r = _residual(F, X, S)
            it += 1
        # bring representatives to [0,1) while keeping the shift bookkeeping exact
        fl = np.floor(X)
        X = X - fl
        S = S + fl @ F.Lf.T - np.roll(fl, -1, axis=1)
        res = np.abs(r).max(axis=(1, 2))
        for n, i in enumerate(idx):
            out[i] = replace(seeds[i], points=X[n], shifts=np.rint(S[n]).astype(np.int64),
                             residual=float(res[n]))
    return out


def continue_orbit(F: TorusMap, seed: OrbitRecord, tol: float = 1e-12) -> OrbitRecord:
    return continue_orbits(F, [seed], tol)[0]


def attach_return_diffs(F: TorusMap, orbits: list) -> None:
    for o in orbits:
        J = F.jacobian(o.points)
        R = np.eye(4)
        for i in range(o.period):
            R = J[i] @ R
        o.return_diff = R


Frame = Callable[[np.ndarray], tuple]


def linear_frame(fu) -> Frame:
    """Constant Jordan frame of L as a frame-transport callable."""
    def frame(pts):
        n = len(np.atleast_2d(pts))
        return np.tile(fu.e1, (n, 1)), np.tile(fu.chain_e2, (n, 1))
    return frame


def periodic_eigen_data(rec: OrbitRecord, frame: Optional[Frame], lam: float,
                        disc_tol: float = DISC_TOL, defect_tol: float = DEFECT_TOL) -> OrbitRecord:
    if frame is None:
        raise FrameUnavailable("periodic_eigen_data needs a frame")
    if rec.return_diff is None:
        raise ValueError("return_diff not computed")
    e1, e2 = frame(rec.points[:1])
    E = np.column_stack([e1[0], e2[0]])
    block, *_ = np.linalg.lstsq(E, rec.return_diff @ E, rcond=None)
    eig = np.linalg.eigvals(block)
    half_tr = np.trace(block) / 2
    disc = half_tr ** 2 - np.linalg.det(block)
    if abs(disc) < disc_tol * lam ** (2 * rec.period):
        defect = float(np.linalg.norm(block - half_tr * np.eye(2), 2))
        tag = "Jordan" if defect > defect_tol else "Scalar"
    else:
        defect, tag = 0.0, "Diagonalizable"
    rec.unstable_block, rec.eig, rec.jordan_defect, rec.tag = block, eig, defect, tag
    return rec


def write_orbit_table(path, orbits: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["orbit_id", "period", "x0", "x1", "x2", "x3", "eig1_re", "eig1_im",
                    "eig2_re", "eig2_im", "jordan_defect", "tag", "alpha_sum"])
        for o in orbits:
            eig = o.eig if o.eig is not None else [np.nan, np.nan]
            w.writerow([o.orbit_id, o.period, *[repr(float(v)) for v in o.representative],
                        *[repr(float(np.real(e))) for e in (eig[0],)], repr(float(np.imag(eig[0]))),
                        repr(float(np.real(eig[1]))), repr(float(np.imag(eig[1]))),
                        "" if o.jordan_defect is None else repr(o.jordan_defect), o.tag,
                        "" if o.alpha_sum is None else repr(o.alpha_sum)])
