"""Spectral computation of the conjugacy ``h = id + u`` with ``F o h = h o L``.

Writing ``F~(y) = L y + N(y)`` the displacement solves

    u(L x) = L u(x) + N(x + u(x)).

For a fixed right-hand side ``g = N o (id + u)`` this is linear and diagonal
along orbits of ``k -> L^T k`` in frequency space: the coefficient of
``u o L`` at ``k`` is the coefficient of ``u`` at ``L^-T k``.  The stable part
is summed forward along the chain and the unstable part backward, so every
step contracts.  The outer loop re-samples ``g`` on a grid until ``u``
stops moving.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, TruncationBudgetExceeded
from .exact_linalg import IntegerMatrix
from .fourier import FourierField, grid_points, torus_delta, torus_reduce
from .linearization import SplittingProjectors
from .torus_map import PullbackMap, TorusMap

SOLVER_TOL = 1e-13
TRUNCATION_BUDGET = 1e-9
VERIFY_SAMPLES = 4096
PRUNE_MASS = 1e-12


def pullback_map(phi_field: FourierField, eps_phi: float, L: IntegerMatrix) -> PullbackMap:
    """``F = phi o L o phi^-1``; the exact conjugacy is ``F.phi``."""
    return PullbackMap(L, eps_phi, phi_field)


def _box(K: int) -> np.ndarray:
    ax = np.arange(-K, K + 1)
    return np.stack(np.meshgrid(ax, ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 4)


def _box_index(k: np.ndarray, K: int) -> np.ndarray:
    """Flat box index of each row, or -1 if outside ``|k|_inf <= K``."""
    inside = np.all(np.abs(k) <= K, axis=1)
    w = 2 * K + 1
    s = k + K
    idx = ((s[:, 0] * w + s[:, 1]) * w + s[:, 2]) * w + s[:, 3]
    return np.where(inside, idx, -1)


@dataclass
class DisplacementField:
    """``u`` with ``h = id + u``; coefficients up to ``maxfreq``."""

    field: FourierField
    maxfreq: int
    grid_n: int
    residual: float = float("nan")
    truncation_mass: float = 0.0
    iterations: int = 0
    pin_drift: float = 0.0
    history: list = field(default_factory=list)
    rate_fit: dict = field(default_factory=dict)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.field(x)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return self.field.jacobian(x)

    def h_lift(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x + self.field(x)

    def h(self, x: np.ndarray) -> np.ndarray:
        return torus_reduce(self.h_lift(x))

    def dh(self, x: np.ndarray) -> np.ndarray:
        return np.eye(4) + self.field.jacobian(x)

    def h_inverse_lift(self, y: np.ndarray, tol: float = 1e-14, maxiter: int = 50) -> np.ndarray:
        """Newton inverse of ``h`` on lifts, seeded at ``y - u(y)``."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        x = y - self.field(y)
        for _ in range(maxiter):
            r = self.h_lift(x) - y
            if np.abs(r).max() < tol:
                return x
            x = x - np.linalg.solve(self.dh(x), r[..., None])[..., 0]
        if np.abs(self.h_lift(x) - y).max() > 1e-11:
            raise NoConvergence("h^-1: Newton did not converge")
        return x

    def sup_norm(self) -> float:
        return float(np.abs(self.field(grid_points(16))).max())

    def to_records(self) -> list:
        return self.field.to_records()

    @classmethod
    def from_records(cls, records: list, maxfreq: int, grid_n: int) -> "DisplacementField":
        return cls(FourierField.from_records(records), maxfreq, grid_n)


def _eval_chunked(fun, x: np.ndarray, workers: int, chunk: int = 65536) -> np.ndarray:
    if workers <= 1 or len(x) <= chunk:
        return fun(x)
    parts = [x[s:s + chunk] for s in range(0, len(x), chunk)]
    with ThreadPoolExecutor(workers) as ex:
        return np.concatenate(list(ex.map(fun, parts)))


class _SpectralOperator:
    """Linear solve of ``u o L = L u + g`` on the coefficient box."""

    def __init__(self, L: np.ndarray, Linv: np.ndarray, proj: SplittingProjectors, K: int):
        self.K = K
        self.k = _box(K)
        B = len(self.k)
        nxt = _box_index(self.k @ np.rint(L).astype(np.int64), K)      # rows: (L^T k)
        prv = _box_index(self.k @ np.rint(Linv).astype(np.int64), K)   # rows: (L^-T k)
        self.zero = B // 2
        nxt[self.zero] = -1
        prv[self.zero] = -1
        # out-of-box neighbours point at a padding row of zeros
        self.nxt = np.where(nxt < 0, B, nxt)
        self.prv = np.where(prv < 0, B, prv)
        self.B = B
        self.L, self.Linv = L, Linv
        self.Ps, self.Pu = proj.Ps, proj.Pu
        self.LPs_T = (L @ proj.Ps).T
        self.LinvPu_T = (Linv @ proj.Pu).T
        self.I_minus_L = np.eye(4) - L
        self.max_chain = 8 * K + 64

    def _pad(self, a):
        return np.vstack([a, np.zeros((1, a.shape[1]), dtype=a.dtype)])

    def solve(self, g: np.ndarray) -> np.ndarray:
        g = g.copy()
        g0 = g[self.zero].copy()
        g[self.zero] = 0.0
        gs_next = self._pad(g @ self.Ps.T)[self.nxt]
        W = np.zeros((self.B + 1, 4), dtype=complex)
        for _ in range(self.max_chain):
            Wn = gs_next + W[self.nxt] @ self.LPs_T
            Wn = self._pad(Wn)
            if np.array_equal(Wn, W):
                break
            W = Wn
        else:
            raise NoConvergence("stable chain sum did not terminate")
        V = np.zeros((self.B + 1, 4), dtype=complex)
        for _ in range(self.max_chain):
            Vn = self._pad((V[self.prv] - g) @ self.LinvPu_T)
            if np.array_equal(Vn, V):
                break
            V = Vn
        else:
            raise NoConvergence("unstable chain sum did not terminate")
        u = W[:-1] + V[:-1]
        u[self.zero] = np.linalg.solve(self.I_minus_L, g0)
        return u


def _fit_rate(history: list) -> dict:
    """Fit ``log d_n = c + a log n + n log r`` to the sup-change history."""
    d = np.array([h for h in history if h > 0])
    if len(d) < 4:
        return {}
    n = np.arange(1, len(d) + 1, dtype=float)
    A = np.column_stack([np.ones_like(n), np.log(n), n])
    coef, *_ = np.linalg.lstsq(A, np.log(d), rcond=None)
    return {"c": float(np.exp(coef[0])), "a": float(coef[1]), "r": float(np.exp(coef[2]))}


def solve_conjugacy(F: TorusMap, projectors: SplittingProjectors, maxfreq_u: int = 12, grid_n: int = 32,
                    max_iters: int = 60, solver_tol: float = SOLVER_TOL,
                    truncation_budget: float = TRUNCATION_BUDGET, pin_point: np.ndarray | None = None,
                    verify: bool = True, verify_samples: int = VERIFY_SAMPLES, seed: int = 0,
                    workers: int = 1) -> DisplacementField:
    """Spectral fixed-point solve for ``u``.

    ``pin_point`` is the continued fixed point of ``F`` near the origin; the
    constant mode is shifted so that ``h(0)`` equals it, and the size of that
    shift is reported as ``pin_drift``.
    """
    K, n = maxfreq_u, grid_n
    if n < 2 * K + 2:
        raise ValueError(f"grid_n={n} cannot resolve maxfreq_u={K}")
    L, Linv = F.Lf, np.rint(np.linalg.inv(F.Lf))
    op = _SpectralOperator(L, Linv, projectors, K)
    box = op.k
    fidx = tuple(np.mod(box[:, i], n) for i in range(4))
    kgrid = np.rint(np.fft.fftfreq(n) * n).astype(np.int64)
    outside = np.ones((n,) * 4, bool)
    inb = np.abs(kgrid) <= K
    outside[np.ix_(inb, inb, inb, inb)] = False
    X = grid_points(n)

    coef = np.zeros((op.B, 4), dtype=complex)
    history = []
    trunc = 0.0
    for it in range(1, max_iters + 1):
        spec = np.zeros((n,) * 4 + (4,), dtype=complex)
        spec[fidx] = coef
        u_grid = np.fft.ifftn(spec, axes=(0, 1, 2, 3)).real.reshape(-1, 4) * n ** 4
        g = _eval_chunked(F.nonlinear, X + u_grid, workers)
        ghat = np.fft.fftn(g.reshape((n,) * 4 + (4,)), axes=(0, 1, 2, 3)) / n ** 4
        mass = np.abs(ghat).sum(axis=-1)
        total = mass.sum()
        trunc = float(mass[outside].sum() / total) if total > 0 else 0.0
        new = op.solve(ghat[fidx])
        change = float(np.abs(new - coef).sum(axis=0).max())  # bounds the sup change
        coef = new
        history.append(change)
        if change < solver_tol:
            break
    else:
        raise NoConvergence(f"conjugacy iteration: last change {history[-1]:.2e} after {max_iters} iterations",)
    if trunc > truncation_budget:
        raise TruncationBudgetExceeded(f"dropped coefficient mass {trunc:.2e} > budget {truncation_budget:.1e}")
    ufield = FourierField.from_complex(box, coef, rel_tol=0.0).pruned(PRUNE_MASS)
    u = DisplacementField(ufield, K, n,
                          truncation_mass=trunc, iterations=it, history=history, rate_fit=_fit_rate(history))
    if pin_point is not None:
        shift = torus_delta(np.asarray(pin_point, float), u.h_lift(np.zeros((1, 4)))[0])
        u.pin_drift = float(np.abs(shift).max())
        if u.pin_drift > 0:
            u.field = _add_constant(u.field, shift)
    if verify:
        u.residual = conjugacy_residual(F, u, 2 * n, verify_samples, seed, workers)
    return u


def _add_constant(f: FourierField, c: np.ndarray) -> FourierField:
    zero = np.flatnonzero(~f.freqs.any(axis=1))
    if len(zero):
        cos = f.cos.copy()
        cos[zero[0]] += c
        return FourierField(f.freqs, cos, f.sin)
    return FourierField(np.vstack([np.zeros((1, 4)), f.freqs]), np.vstack([c, f.cos]),
                        np.vstack([np.zeros(4), f.sin]))


def conjugacy_residual(F: TorusMap, u: DisplacementField, verify_n: int, samples: int = VERIFY_SAMPLES,
                       seed: int = 0, workers: int = 1) -> float:
    """sup |F(h(x)) - h(L x)| mod Z^4 over a seeded subset of the ``verify_n`` grid."""
    rng = np.random.default_rng(seed)
    total = verify_n ** 4
    if samples >= total:
        x = grid_points(verify_n)
    else:
        x = rng.integers(0, verify_n, size=(samples, 4)) / verify_n
    lhs = _eval_chunked(lambda p: F.eval_lift(u.h_lift(p)), x, workers)
    rhs = u.h_lift(x @ F.Lf.T)
    return float(np.abs(torus_delta(lhs, rhs)).max())


def delallave_iterate(F: TorusMap, k, x: np.ndarray, n: int) -> np.ndarray:
    """``F^-n(k(L^n x))`` computed on lifts; ``k`` maps lifts to lifts and
    commutes with integer translations."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    Ln = (F.L ** n).to_numpy()
    Lmn = (F.L ** (-n)).to_numpy()
    y = x @ Ln.T
    m = np.floor(y)
    z = k(y - m)
    for _ in range(n):
        z = F.inverse_lift(z)
    return torus_reduce(z + m @ Lmn.T)
