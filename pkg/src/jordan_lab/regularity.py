"""Probes of the slow-foliation structure and of the regularity of ``h``:
pair growth along the unstable plane, Hölder exponents, slow-leaf
intertwining and the flow relation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ResolutionFloor
from .fourier import torus_delta
from .torus_map import TorusMap

OVERFLOW_GUARD = 1e3
SLOPE_SPLIT = 0.5
SPECTRAL_RESOLUTION = 1e-6


# -- growth dichotomy ----------------------------------------------------------

@dataclass
class GrowthRecord:
    n: np.ndarray
    dist: np.ndarray
    lam: float
    label: str
    slope: float          # d log(dist_n / lam^n) / d log n on the upper half window
    slow_drift: float     # max |dist_n / (lam^n dist_0) - 1|
    stopped_early: bool = False

    def to_dict(self) -> dict:
        return {"label": self.label, "slope": self.slope, "slow_drift": self.slow_drift,
                "n_max": int(self.n[-1]), "stopped_early": self.stopped_early}


def classify_growth(n: np.ndarray, dist: np.ndarray, lam: float) -> tuple:
    r = dist / lam ** n
    hi = n >= max(1, n[-1] // 2)
    slope = float(np.polyfit(np.log(n[hi]), np.log(r[hi]), 1)[0]) if hi.sum() >= 2 else 0.0
    label = "generic" if slope > SLOPE_SPLIT else "slow"
    return label, slope, float(np.abs(r / r[0] - 1).max())


def growth_dichotomy(F: TorusMap, x: np.ndarray, y: np.ndarray, n_max: int, lam: float,
                     guard: float = OVERFLOW_GUARD) -> GrowthRecord:
    """Distances ``|F^n x - F^n y|`` on lifts for ``n = 0..n_max``.

    The separation is propagated as ``d -> L d + N(x + d) - N(x)`` so that its
    relative precision does not degrade as the base point is reduced mod 1.
    """
    x = np.asarray(x, float).reshape(1, 4)
    d = (np.asarray(y, float).reshape(1, 4) - x)
    if np.linalg.norm(d) >= 1e-3:
        raise ValueError("pair must be closer than 1e-3")
    Lf = F.Lf
    dist = [float(np.linalg.norm(d))]
    stopped = False
    for _ in range(n_max):
        d = d @ Lf.T + (F.nonlinear(x + d) - F.nonlinear(x))
        x = np.mod(F.eval_lift(x), 1.0)
        nd = float(np.linalg.norm(d))
        if nd > guard:
            stopped = True
            break
        dist.append(nd)
    n = np.arange(len(dist), dtype=float)
    dist = np.array(dist)
    label, slope, drift = classify_growth(n[1:], dist[1:], lam) if len(n) > 2 else ("slow", 0.0, 0.0)
    return GrowthRecord(n, dist, lam, label, slope, drift, stopped)


# -- Hölder exponent -----------------------------------------------------------

@dataclass
class HolderEstimate:
    direction: np.ndarray
    scales: np.ndarray
    distances: np.ndarray
    exponent: float
    stderr: float

    def to_dict(self) -> dict:
        return {"direction": [float(v) for v in self.direction], "exponent": self.exponent,
                "stderr": self.stderr, "scales": [float(s) for s in self.scales],
                "distances": [float(d) for d in self.distances]}


def default_scales() -> np.ndarray:
    return np.logspace(-4, -1, 13)


def holder_exponent(h, direction: np.ndarray, samples: int = 256, scales: Optional[np.ndarray] = None,
                    seed: int = 0, resolution: Optional[float] = None,
                    points: Optional[np.ndarray] = None) -> HolderEstimate:
    """Slope of the log modulus of continuity ``max_x |h(x + s v) - h(x)|``
    against ``log s`` (ordinary least squares).

    ``h`` is a lift map or an object with ``h_lift``.  Spectral fields resolve
    every scale down to round-off; ``resolution`` overrides that floor.
    """
    fun: Callable = h.h_lift if hasattr(h, "h_lift") else h
    if resolution is None:
        resolution = getattr(h, "resolution", SPECTRAL_RESOLUTION)
    scales = default_scales() if scales is None else np.asarray(scales, float)
    if scales.min() < 10 * resolution:
        raise ResolutionFloor(f"scale {scales.min():.1e} below 10 x resolution {resolution:.1e}")
    v = np.asarray(direction, float)
    v = v / np.linalg.norm(v)
    if points is None:
        points = np.random.default_rng(seed).random((samples, 4))
    base = np.asarray(fun(points))
    dists = np.empty(len(scales))
    for i, s in enumerate(scales):
        diff = np.asarray(fun(points + s * v)) - base
        dists[i] = np.linalg.norm(diff.reshape(len(points), -1), axis=1).max()
    X = np.log(scales)
    Y = np.log(dists)
    A = np.column_stack([X, np.ones_like(X)])
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - A @ coef
    dof = max(1, len(X) - 2)
    s2 = float(resid @ resid) / dof
    stderr = float(np.sqrt(s2 / np.sum((X - X.mean()) ** 2)))
    return HolderEstimate(v, scales, dists, float(coef[0]), stderr)


# -- integration along framing fields ----------------------------------------

def _rk4(fieldfun, z: np.ndarray, total: float, max_step: float) -> np.ndarray:
    steps = max(1, int(np.ceil(abs(total) / max_step)))
    h = total / steps
    for _ in range(steps):
        k1 = fieldfun(z)
        k2 = fieldfun(z + 0.5 * h * k1)
        k3 = fieldfun(z + 0.5 * h * k2)
        k4 = fieldfun(z + h * k3)
        z = z + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return z


def _unit(fieldfun):
    def f(z):
        v = fieldfun(z)
        return v / np.linalg.norm(v, axis=1, keepdims=True)
    return f


def _curve_length(c: Callable, t: float, pieces: int = 2048) -> float:
    s = np.linspace(0.0, t, pieces + 1)
    pts = c(s)
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


@dataclass
class IntertwineResult:
    deviation: float
    integrator_error: float
    per_t: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"deviation": self.deviation, "integrator_error": self.integrator_error, "per_t": self.per_t}


def slow_leaf_intertwine(h_field, framing, x: np.ndarray, t_list, e1_lin: np.ndarray,
                         step: float = 1e-3, use_e2: bool = False) -> IntertwineResult:
    """Follow the ``e1`` field of ``F`` from ``h(x)`` for the arclength of the curve
    ``s -> h(x + s e1_L)``, ``s in [0, t]``, and measure the endpoint mismatch.

    ``use_e2`` swaps in the ``e2`` field (a negative control)."""
    if step > 1e-3:
        raise ValueError("integrator step must be at most 1e-3")
    x = np.atleast_2d(np.asarray(x, float))
    hl = h_field.h_lift if h_field is not None else (lambda p: np.atleast_2d(p))
    idx = 1 if use_e2 else 0
    fld = _unit(lambda z: framing.at(z)[idx])
    e1_lin = np.asarray(e1_lin, float)
    worst, worst_int, per = 0.0, 0.0, []
    for t in t_list:
        ends = []
        for p in x:
            c = lambda s, p=p: hl(p[None, :] + np.asarray(s)[:, None] * e1_lin[None, :])  # noqa: E731
            ell = np.sign(t) * _curve_length(c, t)
            z0 = hl(p[None, :])
            z = _rk4(fld, z0, ell, step)
            z_half = _rk4(fld, z0, ell, step / 2)
            dev = float(np.linalg.norm(torus_delta(z_half, c(np.array([t])))))
            ends.append((dev, float(np.linalg.norm(z - z_half))))
        d = max(e[0] for e in ends)
        ie = max(e[1] for e in ends)
        per.append({"t": float(t), "deviation": d, "integrator_error": ie})
        worst, worst_int = max(worst, d), max(worst_int, ie)
    return IntertwineResult(worst, worst_int, per)


@dataclass
class FlowRelationResult:
    discrepancy: float
    integrator_error: float
    per_n: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"discrepancy": self.discrepancy, "integrator_error": self.integrator_error, "per_n": self.per_n}


def flow_relation(F: TorusMap, framing, y: np.ndarray, t: float, n_list=(1, 2, 3),
                  step: float = 1e-3) -> FlowRelationResult:
    """Compare the time-``t`` flow of ``e1`` with ``F^n o flow_{lam^-n t} o F^-n``."""
    y = np.atleast_2d(np.asarray(y, float))
    lam = framing.lam
    e1 = lambda z: framing.at(z)[0]  # noqa: E731
    lhs = _rk4(e1, y, t, step)
    lhs_half = _rk4(e1, y, t, step / 2)
    integ = float(np.abs(torus_delta(lhs, lhs_half)).max())
    per, worst = [], 0.0
    for n in n_list:
        z = y.copy()
        for _ in range(n):
            z = F.inverse_lift(z)
        z = _rk4(e1, z, t / lam ** n, step)
        for _ in range(n):
            z = F.eval_lift(z)
        d = float(np.linalg.norm(torus_delta(z, lhs_half), axis=1).max())
        per.append({"n": int(n), "discrepancy": d})
        worst = max(worst, d)
    return FlowRelationResult(worst, integ, per)
