"""U_lambda framing of the unstable bundle of ``F``.

All fields are carried on the rational grid ``(1/n) Z^4``, which ``L`` permutes
exactly.  Through the conjugacy ``h`` its image is a finite ``F``-invariant set
of periodic points, and the derivative cocycle over ``F`` becomes the matrix
cocycle ``B(x) = DF(h(x))`` over that permutation.  Invariant objects on a
finite set of periodic points are computed without any interpolation; fields
are interpolated spectrally (in the ``x`` coordinate) only for off-grid use.

Pipeline: plane field by graph transform, slow line as the eigendirection of
the return product, orientation by continuity, two scalar coboundary solves
(slow line, then quotient), and the shear coefficient ``alpha``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .conjugacy import DisplacementField
from .errors import IllPosed, NoConvergence, ObstructionDetected, OrientationError, SlowConvergence
from .exact_linalg import IntegerMatrix
from .fourier import FourierField, flat_index, grid_eval, grid_index, grid_points
from .linearization import LinearData, linear_data
from .torus_map import TorusMap

PLANE_TOL = 1e-12
FRAME_TOL = 1e-9
LIVSIC_TOL = 1e-6
LSQ_BUDGET = 1e-6
FIELD_PRUNE = 1e-11
JORDAN_DISC = 1e-10


# -- grid and cocycle ----------------------------------------------------------

@dataclass
class FramingGrid:
    n: int
    M: IntegerMatrix          # base automorphism: L, or L^-1 for the stable bundle
    x: np.ndarray             # (N, 4) grid points
    perm: np.ndarray          # index of M x
    y: np.ndarray             # h(x), lifts
    cocycle: np.ndarray       # (N, 4, 4) derivative at y
    u: Optional[DisplacementField] = None

    @property
    def size(self) -> int:
        return len(self.x)

    def cycles(self) -> list:
        seen = np.zeros(self.size, bool)
        out = []
        for s in range(self.size):
            if seen[s]:
                continue
            cyc = [s]
            seen[s] = True
            j = self.perm[s]
            while j != s:
                cyc.append(j)
                seen[j] = True
                j = self.perm[j]
            out.append(np.array(cyc))
        return out

    def period(self) -> int:
        """Least common multiple of the cycle lengths (order of M on the grid)."""
        idx = np.arange(self.size)
        j = self.perm.copy()
        p = 1
        while not np.array_equal(j, idx):
            j = self.perm[j]
            p += 1
        return p


def permutation(M: IntegerMatrix, n: int) -> np.ndarray:
    Mi = np.array(M.rows, dtype=np.int64)
    return flat_index(grid_index(n) @ Mi.T, n)


def framing_grid(F: TorusMap, u: Optional[DisplacementField], n: int, stable: bool = False) -> FramingGrid:
    M = F.L.inverse() if stable else F.L
    x = grid_points(n)
    y = u.h_lift(x) if u is not None else x.copy()
    J = F.inverse_jacobian(y) if stable else F.jacobian(y)
    return FramingGrid(n, M, x, permutation(M, n), y, J, u)


def _fourier(values: np.ndarray, n: int) -> FourierField:
    return FourierField.from_grid(values, n, rel_tol=0.0).pruned(FIELD_PRUNE)


# -- plane field ---------------------------------------------------------------

@dataclass
class PlaneField:
    """Unstable plane as the graph of ``G(x): E^u_L -> E^s_L`` in adapted coordinates."""

    grid: FramingGrid
    lin: LinearData
    G: np.ndarray                  # (N, 2, 2)
    history: list = field(default_factory=list)
    _gfield: Optional[FourierField] = None

    @property
    def T(self) -> np.ndarray:
        return self.lin.proj.T

    def basis_from_graph(self, G: np.ndarray) -> np.ndarray:
        T = self.T
        return T[:, :2] + np.einsum("ij,njk->nik", T[:, 2:], G)

    @property
    def basis(self) -> np.ndarray:
        """(N, 4, 2) spanning pair; equals ``[e1u, chain e2u]`` when G = 0."""
        return self.basis_from_graph(self.G)

    def orthonormal(self) -> np.ndarray:
        q, _ = np.linalg.qr(self.basis)
        return q

    def in_plane_cocycle(self) -> np.ndarray:
        """2x2 matrices ``A`` with ``B(x) Q(x) = Q(Mx) A(x)``."""
        C = np.einsum("ij,njk->nik", self.lin.proj.Tinv, self.grid.cocycle)
        C = np.einsum("nij,jk->nik", C, self.T)
        return C[:, :2, :2] + C[:, :2, 2:] @ self.G

    def graph_field(self) -> FourierField:
        if self._gfield is None:
            self._gfield = _fourier(self.G.reshape(-1, 4), self.grid.n)
        return self._gfield

    def basis_at(self, x: np.ndarray) -> np.ndarray:
        G = self.graph_field()(x).reshape(-1, 2, 2)
        return self.basis_from_graph(G)

    def rate(self) -> float:
        h = np.array([v for v in self.history if v > 0])
        if len(h) < 3:
            return 0.0
        return float(np.exp(np.polyfit(np.arange(len(h)), np.log(h), 1)[0]))


def unstable_plane_field(F: TorusMap, u: Optional[DisplacementField], grid_n: int = 16, iters: int = 200,
                         plane_tol: float = PLANE_TOL, stable: bool = False,
                         lin: Optional[LinearData] = None, grid: Optional[FramingGrid] = None) -> PlaneField:
    """Graph transform ``plane(Mx) = B(x) plane(x)`` started from the linear plane."""
    grid = grid or framing_grid(F, u, grid_n, stable)
    lin = lin or linear_data(grid.M)
    T, Tinv = lin.proj.T, lin.proj.Tinv
    C = np.einsum("ij,njk,kl->nil", Tinv, grid.cocycle, T)
    G = np.zeros((grid.size, 2, 2))
    history = []
    for _ in range(iters):
        Wu = C[:, :2, :2] + C[:, :2, 2:] @ G
        Ws = C[:, 2:, :2] + C[:, 2:, 2:] @ G
        Gn = np.empty_like(G)
        Gn[grid.perm] = Ws @ np.linalg.inv(Wu)
        change = float(np.abs(Gn - G).max())
        G = Gn
        history.append(change)
        if change < plane_tol:
            break
        if len(history) > 20 and change > 0.5 * history[-11]:
            raise NoConvergence(f"plane graph transform stalled at change {change:.2e}")
    else:
        raise NoConvergence(f"plane graph transform: change {history[-1]:.2e} after {iters} iterations")
    return PlaneField(grid, lin, G, history)


def plane_invariance_residual(F: TorusMap, pf: PlaneField, x: np.ndarray) -> float:
    """Largest sine of the principal angle between ``B plane(x)`` and ``plane(Mx)``."""
    g = pf.grid
    Mi = g.M.to_numpy()
    y = g.u.h_lift(x) if g.u is not None else x
    B = F.inverse_jacobian(y) if g.M != F.L else F.jacobian(y)
    img = B @ pf.basis_at(x)
    q_img, _ = np.linalg.qr(img)
    q_tgt, _ = np.linalg.qr(pf.basis_at(x @ Mi.T))
    off = q_img - q_tgt @ np.einsum("nji,njk->nik", q_tgt, q_img)
    return float(np.linalg.norm(off, axis=(1, 2), ord=2).max())


# -- slow line -----------------------------------------------------------------

@dataclass
class SlowLine:
    plane: PlaneField
    ell: np.ndarray          # (N, 2) coefficients in the plane basis, oriented
    e1: np.ndarray           # (N, 4) unit vectors
    multiplier: np.ndarray   # N(x) = <B e1(x), e1(Mx)>
    residual: float
    return_period: int


def _return_products(A: np.ndarray, perm: np.ndarray, P: int, scale: float) -> np.ndarray:
    R = np.broadcast_to(np.eye(2), A.shape).copy()
    j = np.arange(len(A))
    for _ in range(P):
        R = (A[j] / scale) @ R
        j = perm[j]
    return R


def _dominant_direction(R: np.ndarray) -> np.ndarray:
    """Eigendirection of the larger eigenvalue; for (numerically) Jordan blocks
    the range of the nilpotent part."""
    half = np.trace(R, axis1=1, axis2=2) / 2
    disc = half ** 2 - np.linalg.det(R)
    root = np.sqrt(np.maximum(disc, 0.0))
    root[disc < JORDAN_DISC * half ** 2] = 0.0
    mu = half - root
    Nmat = R - mu[:, None, None] * np.eye(2)
    norms = np.linalg.norm(Nmat, axis=1)
    col = np.argmax(norms, axis=1)
    v = Nmat[np.arange(len(R)), :, col]
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def orient_by_continuity(v: np.ndarray, n: int, reference: np.ndarray) -> np.ndarray:
    """Flip signs so that neighbouring grid vectors agree; the origin is oriented
    along ``reference``.  Raises when the propagated orientation does not close up."""
    V = v.reshape(n, n, n, n, -1).copy()
    if V[0, 0, 0, 0] @ reference < 0:
        V[0, 0, 0, 0] *= -1
    for axis in (3, 2, 1, 0):
        # propagate along ``axis`` on the slab where all later axes are free and
        # earlier axes are 0
        sl = [0] * 4
        for a in range(axis + 1, 4):
            sl[a] = slice(None)
        for j in range(1, n):
            cur = list(sl)
            prev = list(sl)
            cur[axis], prev[axis] = j, j - 1
            dot = np.sum(V[tuple(cur)] * V[tuple(prev)], axis=-1)
            V[tuple(cur)] *= np.where(dot < 0, -1.0, 1.0)[..., None]
    for axis in range(4):
        dot = np.sum(V * np.roll(V, 1, axis=axis), axis=-1)
        if dot.min() <= 0:
            raise OrientationError(f"orientation does not close up along axis {axis} (min dot {dot.min():.2e})")
    return V.reshape(v.shape)


def slow_line_field(pf: PlaneField, frame_tol: float = FRAME_TOL) -> SlowLine:
    g = pf.grid
    lam = pf.lin.lam
    A = pf.in_plane_cocycle()
    P = g.period()
    ell = _dominant_direction(_return_products(A, g.perm, P, lam))
    Q = pf.basis
    e1 = np.einsum("nij,nj->ni", Q, ell)
    nrm = np.linalg.norm(e1, axis=1)
    e1 = e1 / nrm[:, None]
    ell = ell / nrm[:, None]
    sign = np.sign(np.einsum("ni,ni->n", orient_by_continuity(e1, g.n, pf.lin.fu.e1), e1))
    e1 *= sign[:, None]
    ell *= sign[:, None]
    Be1 = np.einsum("nij,nj->ni", g.cocycle, e1)
    mult = np.einsum("ni,ni->n", Be1, e1[g.perm])
    if mult.min() <= 0:
        raise OrientationError("slow-line multiplier changes sign; orientation is not preserved")
    res = float(np.abs(Be1 - mult[:, None] * e1[g.perm]).max() / lam)
    if res > frame_tol:
        raise SlowConvergence(f"slow-line invariance residual {res:.2e} after {P}-step return products")
    return SlowLine(pf, ell, e1, mult, res, P)


def forward_alignment(pf: PlaneField, line: SlowLine, steps: int, start: np.ndarray | None = None) -> np.ndarray:
    """Angle between ``DF^k(F^-k x) v`` and the slow line, max over the grid, k = 1..steps.

    ``start`` is a vector in plane coordinates (default: the chain direction)."""
    A = pf.in_plane_cocycle()
    perm = pf.grid.perm
    w = np.tile(np.array([0.0, 1.0]) if start is None else np.asarray(start, float), (len(A), 1))
    Q = pf.basis
    out = []
    for _ in range(steps):
        nw = np.empty_like(w)
        nw[perm] = np.einsum("nij,nj->ni", A, w)
        w = nw / np.linalg.norm(nw, axis=1, keepdims=True)
        v = np.einsum("nij,nj->ni", Q, w)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        cos = np.abs(np.einsum("ni,ni->n", v, line.e1))
        out.append(float(np.arccos(np.clip(cos, -1, 1)).max()))
    return np.array(out)


# -- scalar coboundary equation -----------------------------------------------

@dataclass
class CoboundarySolution:
    psi: FourierField
    lsq_residual: float       # sup |psi o M - psi - g| on the grid
    chain_obstruction: float  # sum over frequency chains of |sum of g along the chain|
    mean: float               # grid mean of g (must vanish for a coboundary)


def _box(K: int) -> np.ndarray:
    ax = np.arange(-K, K + 1)
    return np.stack(np.meshgrid(ax, ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 4)


def _box_index(k: np.ndarray, K: int) -> np.ndarray:
    inside = np.all(np.abs(k) <= K, axis=1)
    w = 2 * K + 1
    s = k + K
    return np.where(inside, ((s[:, 0] * w + s[:, 1]) * w + s[:, 2]) * w + s[:, 3], -1)


def _propagate(start: np.ndarray, link: np.ndarray, step, limit: int) -> np.ndarray:
    """Iterate ``v <- step(v, v[link])`` to its fixed point (chains are finite)."""
    v = start
    for _ in range(limit):
        vn = step(v)
        if np.array_equal(vn, v):
            return v
        v = vn
    raise NoConvergence("frequency chain propagation did not terminate")


def solve_coboundary(g: np.ndarray, n: int, M: IntegerMatrix, maxfreq: int) -> CoboundarySolution:
    """Least-squares solution of ``psi(Mx) - psi(x) = g(x)`` for grid samples ``g``.

    In frequency space the equation couples ``k`` only to ``M^T k``; on each
    chain of the truncation box the normal equations have a closed form.
    The equivalent form ``psi(M^-1 x) - psi(x) = -g(M^-1 x)`` is solved instead
    when ``M^-T`` spreads frequencies less (less aliasing of ``g`` on the grid).
    """
    Mi = np.array(M.rows, dtype=np.int64)
    Minv = M.inverse()
    if np.abs(np.array(Minv.rows)).sum(axis=0).max() < np.abs(Mi).sum(axis=0).max():
        g_alt = -np.asarray(g, float).reshape(-1)[permutation(Minv, n)]
        sol = _solve_chains(g_alt, n, Minv, maxfreq)
        pg = grid_eval(sol.psi, n)[:, 0]
        sol.lsq_residual = float(np.abs(pg[permutation(M, n)] - pg - np.asarray(g).reshape(-1)).max())
        return sol
    return _solve_chains(g, n, M, maxfreq)


def _solve_chains(g: np.ndarray, n: int, M: IntegerMatrix, maxfreq: int) -> CoboundarySolution:
    K = min(maxfreq, n // 2 - 1)
    ghat_full = np.fft.fftn(np.asarray(g, float).reshape((n,) * 4)) / n ** 4
    box = _box(K)
    ghat = ghat_full[tuple(np.mod(box[:, i], n) for i in range(4))]
    B = len(box)
    Mi = np.array(M.rows, dtype=np.int64)
    nxt = _box_index(box @ Mi, K)                               # M^T k
    prv = _box_index(box @ np.array(M.inverse().rows, dtype=np.int64), K)
    zero = B // 2
    nxt[zero] = prv[zero] = -1
    nxt = np.where(nxt < 0, B, nxt)
    prv = np.where(prv < 0, B, prv)
    pad = lambda a: np.concatenate([a, np.zeros(1, a.dtype)])  # noqa: E731
    g0 = ghat.copy()
    g0[zero] = 0.0
    limit = 16 * K + 64
    # partial sums and depths from the chain start
    S = _propagate(pad(np.zeros(B, complex)), prv, lambda v: pad(g0 + v[prv]), limit)[:-1]
    D = _propagate(pad(np.zeros(B)), prv, lambda v: pad(1.0 + v[prv]), limit)[:-1]
    D[zero] = 0.0
    end = nxt == B
    O = _propagate(pad(np.where(end, S, 0)), nxt, lambda v: pad(np.where(end, S, v[nxt])), limit)[:-1]
    Ln = _propagate(pad(np.where(end, D, 0)), nxt, lambda v: pad(np.where(end, D, v[nxt])), limit)[:-1]
    c = -S + D * O / (Ln + 1.0)
    c[zero] = 0.0
    starts = (prv == B)
    starts[zero] = False
    obstruction = float(np.abs(O[starts]).sum())
    psi = FourierField.from_complex(box, c[:, None], rel_tol=0.0).pruned(1e-15)
    pg = grid_eval(psi, n)[:, 0]
    perm = permutation(M, n)
    res = float(np.abs(pg[perm] - pg - np.asarray(g).reshape(-1)).max())
    return CoboundarySolution(psi, res, obstruction, float(ghat[zero].real))


def cycle_sums(g: np.ndarray, grid: FramingGrid) -> np.ndarray:
    """Birkhoff sums of grid samples ``g`` over each cycle of the grid permutation."""
    return np.array([g[c].sum() for c in grid.cycles()])


@dataclass
class Rescaled:
    vec: np.ndarray
    psi: CoboundarySolution
    post_residual: float
    worst_cycle_sum: float


def livsic_rescale(line: SlowLine, maxfreq_transfer: int = 8, livsic_tol: float = LIVSIC_TOL,
                   lsq_budget: float = LSQ_BUDGET) -> Rescaled:
    """Rescale ``e1`` by ``exp(psi)`` with ``psi(Mx) - psi(x) = log N(x) - log lam``,
    so that ``B e1 = lam e1 o M`` exactly in the limit."""
    g = line.plane.grid
    lam = line.plane.lin.lam
    target = np.log(line.multiplier) - np.log(lam)
    return _rescale(target, g, line.e1, line.multiplier, lam, maxfreq_transfer, livsic_tol, lsq_budget)


def _rescale(target, g, vec, mult, lam, maxfreq, livsic_tol, lsq_budget) -> Rescaled:
    sums = cycle_sums(target, g)
    worst = float(np.abs(sums).max())
    if worst > livsic_tol:
        raise ObstructionDetected(f"periodic Birkhoff sum deviates from k log(lambda) by {worst:.2e}")
    sol = solve_coboundary(target, g.n, g.M, maxfreq)
    if sol.lsq_residual > lsq_budget:
        raise IllPosed(f"coboundary least-squares residual {sol.lsq_residual:.2e} > {lsq_budget:.1e}")
    psi = grid_eval(sol.psi, g.n)[:, 0]
    scale = np.exp(psi)
    new_mult = mult * scale / scale[g.perm]
    return Rescaled(vec * scale[:, None], sol, float(np.abs(new_mult - lam).max()), worst)


# -- the framing ---------------------------------------------------------------

@dataclass
class UFraming:
    n: int
    M: IntegerMatrix
    lam: float
    e1: np.ndarray        # (N, 4) at grid point x, tangent at h(x)
    e2: np.ndarray
    alpha: np.ndarray     # (N,)
    u: Optional[DisplacementField] = None
    diagnostics: dict = field(default_factory=dict)
    _fields: Optional[tuple] = None

    def fields(self) -> tuple:
        if self._fields is None:
            self._fields = (_fourier(self.e1, self.n), _fourier(self.e2, self.n),
                            _fourier(self.alpha[:, None], self.n))
        return self._fields

    def at_x(self, x: np.ndarray) -> tuple:
        """``(e1, e2, alpha)`` at ``h(x)``, spectrally interpolated in ``x``."""
        E1, E2, AL = self.fields()
        return E1(x), E2(x), AL(x)[:, 0]

    def to_x(self, y: np.ndarray) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, float))
        return self.u.h_inverse_lift(y) if self.u is not None else y

    def at(self, y: np.ndarray) -> tuple:
        return self.at_x(self.to_x(y))

    def frame(self, y: np.ndarray) -> tuple:
        e1, e2, _ = self.at(y)
        return e1, e2

    def invariance_residual(self, F: TorusMap, x: np.ndarray) -> dict:
        """Residuals of ``B e1 = lam e1 o M`` and ``B e2 = lam e2 o M + alpha e1 o M`` at ``h(x)``,
        relative to ``lam``."""
        Mi = self.M.to_numpy()
        y = self.u.h_lift(x) if self.u is not None else x
        B = F.jacobian(y) if self.M == F.L else F.inverse_jacobian(y)
        e1, e2, al = self.at_x(x)
        f1, f2, _ = self.at_x(x @ Mi.T)
        r1 = np.einsum("nij,nj->ni", B, e1) - self.lam * f1
        r2 = np.einsum("nij,nj->ni", B, e2) - self.lam * f2 - al[:, None] * f1
        return {"e1": float(np.abs(r1).max() / self.lam), "e2": float(np.abs(r2).max() / self.lam)}

    def scaled(self, c: float) -> "UFraming":
        return UFraming(self.n, self.M, self.lam, c * self.e1, c * self.e2, self.alpha.copy(), self.u)

    def to_json(self) -> str:
        data = {
            "n": self.n, "M": [list(r) for r in self.M.rows], "lambda": repr(self.lam),
            "e1": [[repr(float(v)) for v in r] for r in self.e1],
            "e2": [[repr(float(v)) for v in r] for r in self.e2],
            "alpha": [repr(float(v)) for v in self.alpha],
            "u": None if self.u is None else {"maxfreq": self.u.maxfreq, "grid_n": self.u.grid_n,
                                              "coefficients": self.u.to_records()},
        }
        return json.dumps(data, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "UFraming":
        d = json.loads(text)
        u = None
        if d["u"] is not None:
            u = DisplacementField.from_records(d["u"]["coefficients"], d["u"]["maxfreq"], d["u"]["grid_n"])
        arr = lambda a: np.array([[float(v) for v in r] for r in a])  # noqa: E731
        return cls(d["n"], IntegerMatrix(tuple(tuple(r) for r in d["M"])), float(d["lambda"]),
                   arr(d["e1"]), arr(d["e2"]), np.array([float(v) for v in d["alpha"]]), u)


def build_U_framing(line: SlowLine, rescaled: Rescaled, maxfreq_transfer: int = 8,
                    livsic_tol: float = LIVSIC_TOL, lsq_budget: float = LSQ_BUDGET,
                    frame_tol: float = 1e-7) -> UFraming:
    """Complete the rescaled slow line to a U_lambda framing and extract ``alpha``."""
    pf = line.plane
    g = pf.grid
    lam = pf.lin.lam
    perm = g.perm
    B = g.cocycle
    e1 = rescaled.vec
    e2raw = pf.basis[:, :, 1]   # graph lift of the chain vector
    # B e2raw = a * e1(Mx) + d * e2raw(Mx)
    Be2 = np.einsum("nij,nj->ni", B, e2raw)
    basis_next = np.stack([e1[perm], e2raw[perm]], axis=2)
    coef, *_ = _lstsq_batched(basis_next, Be2)
    d = coef[:, 1]
    if d.min() <= 0:
        raise OrientationError("quotient multiplier is not positive")
    q = _rescale(np.log(d) - np.log(lam), g, e2raw, d, lam, maxfreq_transfer, livsic_tol, lsq_budget)
    e2 = q.vec
    basis_next = np.stack([e1[perm], e2[perm]], axis=2)
    coef, res = _lstsq_batched(basis_next, np.einsum("nij,nj->ni", B, e2))
    alpha = coef[:, 0]
    beta_dev = float(np.abs(coef[:, 1] - lam).max() / lam)
    cosang = np.abs(np.einsum("ni,ni->n", e1, e2)) / (np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1))
    min_angle = float(np.arccos(np.clip(cosang.max(), -1, 1)))
    if min_angle <= 0.1:
        raise IllPosed(f"e1 and e2 nearly parallel (angle {min_angle:.3f} rad)")
    diag = {
        "plane_iterations": len(pf.history), "plane_rate": pf.rate(), "plane_change": pf.history[-1],
        "slow_residual": line.residual, "return_period": line.return_period,
        "e1_post_residual": rescaled.post_residual, "e2_post_residual": q.post_residual,
        "e1_worst_cycle_sum": rescaled.worst_cycle_sum, "e2_worst_cycle_sum": q.worst_cycle_sum,
        "e1_lsq_residual": rescaled.psi.lsq_residual, "e2_lsq_residual": q.psi.lsq_residual,
        "beta_deviation": beta_dev, "alpha_fit_residual": res, "min_angle": min_angle,
    }
    if max(beta_dev, res / lam) > frame_tol and frame_tol > 0:
        raise IllPosed(f"framing residual {max(beta_dev, res / lam):.2e} exceeds {frame_tol:.1e}")
    return UFraming(g.n, g.M, lam, e1, e2, alpha, g.u, diag)


def _lstsq_batched(Bm: np.ndarray, rhs: np.ndarray) -> tuple:
    """Least squares ``Bm c = rhs`` row-wise (Bm is (N, 4, 2)); returns (c, sup residual)."""
    BtB = np.einsum("nki,nkj->nij", Bm, Bm)
    Btr = np.einsum("nki,nk->ni", Bm, rhs)
    c = np.linalg.solve(BtB, Btr[..., None])[..., 0]
    r = np.einsum("nij,nj->ni", Bm, c) - rhs
    return c, float(np.abs(r).max())


def build_framing(F: TorusMap, u: Optional[DisplacementField], grid_n: int = 16, maxfreq_transfer: int = 8,
                  stable: bool = False, plane_tol: float = PLANE_TOL, frame_tol: float = 1e-7,
                  livsic_tol: float = LIVSIC_TOL, lsq_budget: float = LSQ_BUDGET) -> UFraming:
    """Plane field, slow line, Livsic rescaling and completion in one call."""
    pf = unstable_plane_field(F, u, grid_n, plane_tol=plane_tol, stable=stable)
    line = slow_line_field(pf, frame_tol=max(FRAME_TOL, frame_tol * 1e-2))
    resc = livsic_rescale(line, maxfreq_transfer, livsic_tol, lsq_budget)
    return build_U_framing(line, resc, maxfreq_transfer, livsic_tol, lsq_budget, frame_tol)


def regauge(fr: UFraming, shear: FourierField, scale: float = 1.0) -> UFraming:
    """Replace ``(e1, e2)`` by ``scale * (e1, e2 + f e1)``; ``alpha`` changes by the
    coboundary ``lam (f - f o M)``."""
    x = grid_points(fr.n)
    f = shear(x)[:, 0]
    perm = permutation(fr.M, fr.n)
    e2 = fr.e2 + f[:, None] * fr.e1
    alpha = fr.alpha + fr.lam * (f - f[perm])
    return UFraming(fr.n, fr.M, fr.lam, scale * fr.e1, scale * e2, alpha, fr.u)
