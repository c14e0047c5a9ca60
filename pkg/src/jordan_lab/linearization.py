"""Spectral data of a Jordan-block automorphism: Jordan-chain frames of the
unstable and stable planes and the associated splitting projectors."""

from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .errors import IllConditioned, NotJordan
from .exact_linalg import IntegerMatrix, JordanClassification, Verdict, classify

FRAME_TOL = 1e-12


@dataclass(frozen=True)
class JordanFrame:
    """Constant frame ``(e1, e2)`` with ``L e1 = lam e1`` and
    ``L (chain_scale * e2) = lam (chain_scale * e2) + e1``.

    ``e1`` and ``e2`` are unit vectors; ``chain_e2`` is the rescaled second
    vector presenting ``L`` on the plane as ``[[lam, 1], [0, lam]]``.
    """

    lam: float
    e1: np.ndarray
    e2: np.ndarray
    chain_scale: float

    @property
    def chain_e2(self) -> np.ndarray:
        return self.chain_scale * self.e2

    @property
    def basis(self) -> np.ndarray:
        """4x2 matrix ``[e1, chain_e2]``."""
        return np.column_stack([self.e1, self.chain_e2])


@dataclass(frozen=True)
class SplittingProjectors:
    Pu: np.ndarray
    Ps: np.ndarray
    # adapted basis [e1u, chain e2u, e1s, chain e2s] and its inverse
    T: np.ndarray
    Tinv: np.ndarray


def _roots(cls: JordanClassification) -> tuple:
    c, b, _ = cls.q.coeffs
    s = sqrt(b * b - 4 * c)
    r1, r2 = (-b + s) / 2, (-b - s) / 2
    return (r1, r2) if abs(r1) > abs(r2) else (r2, r1)


def _orient(v: np.ndarray) -> np.ndarray:
    k = int(np.flatnonzero(np.abs(v) > 1e-14)[0])
    return v if v[k] > 0 else -v


def _chain(L: np.ndarray, lam: float, other: float) -> JordanFrame:
    eye = np.eye(4)
    # generalized eigenspace of lam = range of (L - other)^2;
    # eigenvector = range of (L - lam)(L - other)^2
    gen = (L - other * eye) @ (L - other * eye)
    eig_map = (L - lam * eye) @ gen
    j = int(np.argmax(np.linalg.norm(eig_map, axis=0)))
    e1 = _orient(eig_map[:, j] / np.linalg.norm(eig_map[:, j]))
    Q, _ = np.linalg.qr(gen)
    sv = np.linalg.svd(gen, compute_uv=False)
    if sv[1] < 1e-8 * sv[0]:
        raise IllConditioned("generalized eigenspace is not two-dimensional")
    G = Q[:, :2] if np.linalg.matrix_rank(gen[:, :2]) == 2 else np.linalg.svd(gen)[0][:, :2]
    # solve (L - lam) G y = e1 with G y orthogonal to e1
    sysm = np.vstack([(L - lam * eye) @ G, e1 @ G])
    rhs = np.concatenate([e1, [0.0]])
    y, *_ = np.linalg.lstsq(sysm, rhs, rcond=None)
    chain = G @ y
    scale = float(np.linalg.norm(chain))
    e2 = chain / scale
    frame = JordanFrame(float(lam), e1, e2, scale)
    r1 = np.linalg.norm(L @ e1 - lam * e1) / abs(lam)
    r2 = np.linalg.norm(L @ frame.chain_e2 - lam * frame.chain_e2 - e1) / abs(lam)
    if max(r1, r2) > 1e-10:
        raise IllConditioned(f"Jordan chain residuals {r1:.2e}, {r2:.2e}")
    return frame


def _require_jordan(L: IntegerMatrix, cls: JordanClassification | None) -> JordanClassification:
    cls = cls or classify(L)
    if cls.verdict != Verdict.JORDAN_ANOSOV:
        raise NotJordan(f"verdict is {cls.verdict.value}")
    return cls


def unstable_frame(L: IntegerMatrix, cls: JordanClassification | None = None) -> JordanFrame:
    cls = _require_jordan(L, cls)
    lam, mu = _roots(cls)
    if lam <= 0:
        raise NotJordan("expanding eigenvalue is negative; only lam > 1 is supported")
    return _chain(L.to_numpy(), lam, mu)


def stable_frame(L: IntegerMatrix, cls: JordanClassification | None = None) -> JordanFrame:
    """Chain frame of the contracting plane: ``L e1 = mu e1``,
    ``L chain_e2 = mu chain_e2 + e1`` with ``mu = 1/lam``."""
    cls = _require_jordan(L, cls)
    lam, mu = _roots(cls)
    return _chain(L.to_numpy(), mu, lam)


def splitting_projectors(L: IntegerMatrix, frame_u: JordanFrame, frame_s: JordanFrame) -> SplittingProjectors:
    T = np.column_stack([frame_u.e1, frame_u.chain_e2, frame_s.e1, frame_s.chain_e2])
    sv = np.linalg.svd(np.column_stack([frame_u.e1, frame_u.e2, frame_s.e1, frame_s.e2]),
                       compute_uv=False)
    if sv[-1] < 1e-6:
        raise IllConditioned(f"frame vectors nearly dependent (sigma_min={sv[-1]:.2e})")
    Tinv = np.linalg.inv(T)
    Pu = T[:, :2] @ Tinv[:2, :]
    Ps = np.eye(4) - Pu
    return SplittingProjectors(Pu, Ps, T, Tinv)


@dataclass(frozen=True)
class LinearData:
    """Everything the numerical stages need to know about ``L``."""

    L: IntegerMatrix
    cls: JordanClassification
    fu: JordanFrame
    fs: JordanFrame
    proj: SplittingProjectors

    @property
    def lam(self) -> float:
        return self.fu.lam

    @property
    def Lf(self) -> np.ndarray:
        return self.L.to_numpy()

    @property
    def Linv(self) -> np.ndarray:
        return self.L.inverse().to_numpy()


def linear_data(L: IntegerMatrix) -> LinearData:
    cls = _require_jordan(L, None)
    fu, fs = unstable_frame(L, cls), stable_frame(L, cls)
    return LinearData(L, cls, fu, fs, splitting_projectors(L, fu, fs))
