"""Smooth maps of T^4 homotopic to a linear automorphism ``L``.

Two concrete families share one interface:

* :class:`SmoothMap`: ``F(x) = L x + eps * P(x)`` (additive family);
* :class:`PullbackMap`: ``F = phi o L o phi^-1`` with ``phi = id + eps * p``,
  whose conjugacy to ``L`` is known exactly.

All evaluation routines are vectorized over an (N, 4) array of points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CannotCertify, NoConvergence, NotDiffeo
from .exact_linalg import IntegerMatrix
from .fourier import FourierField, grid_points, torus_reduce
from .linearization import LinearData

NEWTON_TOL = 1e-13
NEWTON_MAXITER = 50


def _newton(fun, jac, y, x0, what: str):
    """Solve fun(x) = y row-wise; ``fun`` maps lifts to lifts."""
    x = np.array(x0, dtype=float)
    for _ in range(NEWTON_MAXITER):
        r = fun(x) - y
        err = np.abs(r).max() if r.size else 0.0
        if err < NEWTON_TOL:
            return x
        x = x - np.linalg.solve(jac(x), r[..., None])[..., 0]
    r = fun(x) - y
    if r.size and np.abs(r).max() > 1e3 * NEWTON_TOL:
        raise NoConvergence(f"{what}: Newton residual {np.abs(r).max():.2e}")
    return x


class TorusMap:
    """Common interface. Subclasses define ``eval_lift``, ``jacobian`` and
    ``inverse_lift``; everything else derives from those."""

    L: IntegerMatrix
    epsilon: float

    @property
    def Lf(self) -> np.ndarray:
        return self.L.to_numpy()

    def eval_lift(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse_lift(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian_lipschitz(self) -> float:
        raise NotImplementedError

    def eval(self, x: np.ndarray) -> np.ndarray:
        return torus_reduce(self.eval_lift(np.atleast_2d(x)))

    def inverse_eval(self, y: np.ndarray) -> np.ndarray:
        return torus_reduce(self.inverse_lift(np.atleast_2d(y)))

    def inverse_jacobian(self, y: np.ndarray) -> np.ndarray:
        """Derivative of F^-1 at y."""
        return np.linalg.inv(self.jacobian(self.inverse_lift(np.atleast_2d(y))))

    def inverse_adapted_lipschitz(self, T: np.ndarray, Tinv: np.ndarray):
        """Lipschitz bound of ``y -> T^-1 D(F^-1)(y) T`` if available in closed form."""
        return None

    def nonlinear(self, x: np.ndarray) -> np.ndarray:
        """Z^4-periodic part ``F~(x) - L x``."""
        x = np.atleast_2d(x)
        return self.eval_lift(x) - x @ self.Lf.T


class SmoothMap(TorusMap):
    def __init__(self, L: IntegerMatrix, epsilon: float = 0.0, P: FourierField | None = None):
        self.L = L
        self.epsilon = float(epsilon)
        self.P = P if P is not None else FourierField.zero(4)
        self._Linv = L.inverse().to_numpy()

    def eval_lift(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = x @ self.Lf.T
        if self.epsilon:
            out = out + self.epsilon * self.P(x)
        return out

    def jacobian(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        J = np.broadcast_to(self.Lf, (len(x), 4, 4)).copy()
        if self.epsilon:
            J += self.epsilon * self.P.jacobian(x)
        return J

    def inverse_lift(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        x0 = y @ self._Linv.T
        if not self.epsilon:
            return x0
        return _newton(self.eval_lift, self.jacobian, y, x0, "inverse_eval")

    def jacobian_lipschitz(self) -> float:
        return self.epsilon * self.P.c2_bound()

    def adapted_lipschitz(self, T: np.ndarray, Tinv: np.ndarray) -> float:
        """Lipschitz bound of ``x -> T^-1 DF(x) T`` (displacements in original coordinates)."""
        return self.epsilon * _adapted_c2(self.P, T, Tinv, np.eye(4))


class PullbackMap(TorusMap):
    """``F = phi o L o phi^-1`` with ``phi(x) = x + eps * p(x)``."""

    def __init__(self, L: IntegerMatrix, epsilon: float, phi_field: FourierField):
        self.L = L
        self.epsilon = float(epsilon)
        self.phi_field = phi_field
        self._Linv = L.inverse().to_numpy()
        if self.epsilon * phi_field.c1_bound() >= 1.0:
            raise NotDiffeo(f"eps * |Dp| = {self.epsilon * phi_field.c1_bound():.3f} >= 1")

    # conjugacy and its inverse
    def phi(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x + self.epsilon * self.phi_field(x)

    def dphi(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.eye(4) + self.epsilon * self.phi_field.jacobian(x)

    def phi_inv(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if not self.epsilon:
            return y.copy()
        x0 = y - self.epsilon * self.phi_field(y)
        return _newton(self.phi, self.dphi, y, x0, "phi^-1")

    def eval_lift(self, y):
        return self.phi(self.phi_inv(y) @ self.Lf.T)

    def jacobian(self, y):
        x = self.phi_inv(y)
        return self.dphi(x @ self.Lf.T) @ self.Lf @ np.linalg.inv(self.dphi(x))

    def inverse_lift(self, y):
        return self.phi(self.phi_inv(y) @ self._Linv.T)

    def nonlinear(self, y):
        # phi(L x) - L phi(x) with x = phi^-1(y), written without cancellation
        x = self.phi_inv(y)
        return self.epsilon * (self.phi_field(x @ self.Lf.T) - self.phi_field(x) @ self.Lf.T)

    def jacobian_lipschitz(self) -> float:
        k = self.epsilon * self.phi_field.c2_bound()
        a = 1.0 + self.epsilon * self.phi_field.c1_bound()
        b = 1.0 / (2.0 - a)
        nl = np.linalg.norm(self.Lf, 2)
        # product rule on Dphi(L phi^-1) . L . (Dphi o phi^-1)^-1
        return k * nl * b * nl * b + a * nl * k * b ** 3

    def inverse_jacobian(self, y):
        x = self.phi_inv(y)
        return self.dphi(x @ self._Linv.T) @ self._Linv @ np.linalg.inv(self.dphi(x))

    def adapted_lipschitz(self, T: np.ndarray, Tinv: np.ndarray, lin_map: np.ndarray | None = None) -> float:
        """Same product-rule bound, with every factor measured in adapted coordinates."""
        Lm = self.Lf if lin_map is None else lin_map
        e = self.epsilon
        f = self.phi_field
        tc = np.linalg.norm(Tinv @ f.cos.T, axis=0) + np.linalg.norm(Tinv @ f.sin.T, axis=0)
        tm = np.linalg.norm(f.freqs @ T, axis=1) * 2 * np.pi
        d1 = e * float((tc * tm).sum())           # |T^-1 Dp T| * eps
        b = 1.0 / (1.0 - e * self.phi_field.c1_bound())  # Lip(phi^-1)
        lam_norm = np.linalg.norm(Tinv @ Lm @ T, 2)
        lip_outer = e * _adapted_c2(f, T, Tinv, Lm) * b
        lip_inner = e * _adapted_c2(f, T, Tinv, np.eye(4)) * b
        inv_inner = 1.0 / (1.0 - d1)
        return lip_outer * lam_norm * inv_inner + (1.0 + d1) * lam_norm * lip_inner * inv_inner ** 2

    def inverse_adapted_lipschitz(self, T, Tinv):
        return self.adapted_lipschitz(T, Tinv, self._Linv)


def _adapted_c2(f: FourierField, T, Tinv, M) -> float:
    """Lipschitz bound (original-coordinate displacement) of x -> T^-1 Df(Mx) T."""
    tc = np.linalg.norm(Tinv @ f.cos.T, axis=0) + np.linalg.norm(Tinv @ f.sin.T, axis=0)
    mt = f.freqs @ M  # rows: M^T m
    return float((tc * (2 * np.pi) ** 2 * np.linalg.norm(mt, axis=1)
                  * np.linalg.norm(f.freqs @ T, axis=1)).sum())


@dataclass
class Certificate:
    certified: bool
    mu: float
    mu_stable: float
    slack: float
    theta: float
    grid_n: int
    worst_point: list
    margin: float

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _cone_stats(M: np.ndarray, theta: float, slack: float):
    """For block matrices M = [[A, B], [C, D]] (adapted coordinates, first block
    expanding), return expansion lower bound and cone-invariance margin."""
    A, B, C, D = M[:, :2, :2], M[:, :2, 2:], M[:, 2:, :2], M[:, 2:, 2:]
    smin = np.linalg.svd(A, compute_uv=False)[:, -1] - slack
    nB = np.linalg.norm(B, 2, axis=(1, 2)) + slack
    nC = np.linalg.norm(C, 2, axis=(1, 2)) + slack
    nD = np.linalg.norm(D, 2, axis=(1, 2)) + slack
    mu = smin - theta * nB
    margin = theta * mu - (nC + theta * nD)
    return mu, margin


SHEAR = 0.3


def cone_basis(lin: LinearData, shear: float = SHEAR):
    """Adapted basis in which each Jordan block reads ``mu [[1, shear], [0, 1]]``."""
    fu, fs = lin.fu, lin.fs
    T = np.column_stack([fu.e1, shear * fu.lam * fu.chain_e2, fs.e1, shear * fs.lam * fs.chain_e2])
    return T, np.linalg.inv(T)


def anosov_certify(F: TorusMap, lin: LinearData, grid_n: int = 16, theta: float = 0.2,
                   raise_on_failure: bool = True, chunk: int = 1 << 15) -> Certificate:
    """Sufficient cone-field check for hyperbolicity of ``F``.

    On every grid point the unstable cone ``{|v_s| <= theta |v_u|}`` (adapted
    coordinates) must map strictly inside itself under DF with expansion > 1,
    and likewise the stable cone under D(F^-1). Variation of the derivatives
    between grid points is absorbed by a Lipschitz slack.
    """
    if grid_n < 16:
        raise ValueError("grid_n must be >= 16")
    T, Tinv = cone_basis(lin)
    half_diag = np.sqrt(4.0) / (2 * grid_n)
    slack_u = F.adapted_lipschitz(T, Tinv) * half_diag
    perm = [2, 3, 0, 1]
    mu_u = mu_s = np.inf
    worst_margin, worst = np.inf, None
    pts = grid_points(grid_n)
    # first pass for |DF^-1| bound used in the inverse slack
    inv_norm = 0.0
    records = []
    for s in range(0, len(pts), chunk):
        x = pts[s:s + chunk]
        J = F.jacobian(x)
        Jinv = F.inverse_jacobian(x)
        Ms = Tinv @ Jinv @ T
        inv_norm = max(inv_norm, float(np.linalg.norm(Ms, 2, axis=(1, 2)).max()))
        records.append((x, Tinv @ J @ T, Ms[:, perm][:, :, perm]))
    # |M^-1(x') - M^-1(x)| <= |M^-1(x)| |M(x') - M(x)| |M^-1(x')|
    slack_s = (inv_norm * 1.05) ** 2 * slack_u
    direct = F.inverse_adapted_lipschitz(T, Tinv)
    if direct is not None:
        slack_s = min(slack_s, direct * half_diag)
    for x, Mu, Ms in records:
        mu1, m1 = _cone_stats(Mu, theta, slack_u)
        mu2, m2 = _cone_stats(Ms, theta, slack_s)
        mu_u, mu_s = min(mu_u, mu1.min()), min(mu_s, mu2.min())
        m = np.minimum(np.minimum(m1, mu1 - 1.0), np.minimum(m2, mu2 - 1.0))
        i = int(np.argmin(m))
        if m[i] < worst_margin:
            worst_margin, worst = float(m[i]), x[i].tolist()
    cert = Certificate(bool(worst_margin > 0), float(mu_u), float(mu_s),
                       float(max(slack_u, slack_s)), theta, grid_n, worst, worst_margin)
    if not cert.certified and raise_on_failure:
        raise CannotCertify(f"cone condition fails (margin {worst_margin:.3e}) near {worst}",
                            worst_point=worst, record=cert)
    return cert
