"""Jordan periodic data: orbit sums of the shear coefficient ``alpha`` and
their comparison up to a common positive factor."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateData

PROJ_TOL = 1e-3
DEGENERATE_FLOOR = 1e-12


@dataclass(frozen=True)
class JordanRow:
    orbit_id: int
    period: int
    alpha_sum: float


@dataclass
class JordanDataTable:
    rows: list
    source: str = ""

    def sums(self) -> np.ndarray:
        return np.array([r.alpha_sum for r in self.rows])

    def by_id(self) -> dict:
        return {r.orbit_id: r for r in self.rows}

    def scaled(self, c: float) -> "JordanDataTable":
        return JordanDataTable([JordanRow(r.orbit_id, r.period, c * r.alpha_sum) for r in self.rows],
                               f"{c}*{self.source}")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["orbit_id", "period", "alpha_sum"])
            for r in self.rows:
                w.writerow([r.orbit_id, r.period, repr(float(r.alpha_sum))])

    @classmethod
    def from_csv(cls, path, source: str = "") -> "JordanDataTable":
        with open(path, newline="") as fh:
            rows = [JordanRow(int(r["orbit_id"]), int(r["period"]), float(r["alpha_sum"]))
                    for r in csv.DictReader(fh)]
        return cls(rows, source)


def orbit_alpha_sum(framing, orbit) -> float:
    """Sum of ``alpha`` over the orbit points (points are on the F side)."""
    _, _, al = framing.at(orbit.points)
    return float(al.sum())


def linear_table(orbits: list) -> JordanDataTable:
    """Table of ``L`` in its standard frame, where ``alpha`` is identically 1."""
    return JordanDataTable([JordanRow(o.orbit_id, o.period, float(o.period)) for o in orbits], "L")


def framing_table(framing, orbits: list, source: str = "F") -> JordanDataTable:
    pts = np.vstack([o.points for o in orbits])
    _, _, al = framing.at(pts)
    rows, s = [], 0
    for o in orbits:
        val = float(al[s:s + o.period].sum())
        o.alpha_sum = val
        rows.append(JordanRow(o.orbit_id, o.period, val))
        s += o.period
    return JordanDataTable(rows, source)


class ProjectiveVerdict(enum.Enum):
    SAME = "Same"
    DIFFERENT = "Different"


@dataclass
class ComparisonReport:
    C: float
    max_residual: float
    verdict: ProjectiveVerdict
    per_orbit: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"C": self.C, "max_residual": self.max_residual, "verdict": self.verdict.value,
                "per_orbit": self.per_orbit}


def projective_compare(t1: JordanDataTable, t2: JordanDataTable, matching: Optional[dict] = None,
                       proj_tol: float = PROJ_TOL) -> ComparisonReport:
    """Least-squares ``C`` with ``sum1 ~ C * sum2``; verdict from the worst orbit."""
    b2 = t2.by_id()
    pairs = []
    for r in t1.rows:
        j = matching.get(r.orbit_id) if matching is not None else r.orbit_id
        if j is None or j not in b2:
            continue
        if b2[j].period != r.period:
            raise ValueError(f"matching pairs orbits of periods {r.period} and {b2[j].period}")
        pairs.append((r, b2[j]))
    if not pairs:
        raise DegenerateData("no matched orbits")
    s1 = np.array([a.alpha_sum for a, _ in pairs])
    s2 = np.array([b.alpha_sum for _, b in pairs])
    if np.abs(s2).max() < DEGENERATE_FLOOR:
        raise DegenerateData("all sums of the second table vanish")
    C = float(s1 @ s2 / (s2 @ s2))
    res = s1 - C * s2
    max_res = float(np.abs(res).max())
    verdict = ProjectiveVerdict.SAME if max_res < proj_tol * np.abs(s1).max() else ProjectiveVerdict.DIFFERENT
    per = [{"orbit_id": a.orbit_id, "period": a.period, "sum1": float(a.alpha_sum), "sum2": float(b.alpha_sum),
            "residual": float(r)} for (a, b), r in zip(pairs, res)]
    return ComparisonReport(C, max_res, verdict, per)


@dataclass
class LivsicReport:
    constant: float
    deviations: np.ndarray
    worst_orbit: int

    @property
    def max_deviation(self) -> float:
        return float(np.abs(self.deviations).max()) if len(self.deviations) else 0.0

    def to_dict(self) -> dict:
        return {"constant": self.constant, "max_deviation": self.max_deviation, "worst_orbit": self.worst_orbit}


def livsic_constant_check(values: Callable[[np.ndarray], np.ndarray], orbits: list) -> LivsicReport:
    """Birkhoff sum minus ``k * c`` on every orbit, ``c`` the value at a fixed point."""
    pts = np.vstack([o.points for o in orbits])
    v = np.asarray(values(pts), float).reshape(-1)
    sums, s = [], 0
    for o in orbits:
        sums.append(v[s:s + o.period].sum())
        s += o.period
    sums = np.array(sums)
    periods = np.array([o.period for o in orbits])
    fixed = np.flatnonzero(periods == 1)
    c = float(sums[fixed[0]]) if len(fixed) else float(sums.sum() / periods.sum())
    dev = sums - periods * c
    worst = int(orbits[int(np.argmax(np.abs(dev)))].orbit_id) if len(dev) else -1
    return LivsicReport(c, dev, worst)
