"""Declarative experiment runner: stages in dependency order, one report."""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .conjugacy import DisplacementField, conjugacy_residual, pullback_map, solve_conjugacy
from .errors import JordanLabError, NotJordan
from .exact_linalg import IntegerMatrix, Verdict, classify, power_minus_identity_det
from .families import STANDARD_P_RECORDS, STANDARD_PHI_RECORDS
from .fourier import FourierField, torus_delta
from .framing import UFraming, build_framing, plane_invariance_residual, unstable_plane_field
from .jordan_data import framing_table, linear_table, projective_compare
from .linearization import linear_data
from .periodic_orbits import (attach_return_diffs, continue_orbits, linear_frame, linear_orbits_up_to,
                              periodic_eigen_data, write_orbit_table)
from .regularity import flow_relation, growth_dichotomy, holder_exponent, slow_leaf_intertwine
from .torus_map import SmoothMap, anosov_certify

log = logging.getLogger("jordan_lab")

STAGES = {
    "classify": ("classify",),
    "periodic": ("classify", "orbits"),
    "conjugacy": ("classify", "certify", "conjugacy"),
    "framing": ("classify", "certify", "conjugacy", "framing"),
    "jordan_data": ("classify", "certify", "conjugacy", "framing", "orbits", "jordan"),
    "probes": ("classify", "certify", "conjugacy", "framing", "probes"),
    "full": ("classify", "certify", "conjugacy", "framing", "orbits", "jordan", "probes"),
}


class StageError(Exception):
    def __init__(self, stage: str, exc: JordanLabError):
        super().__init__(f"stage {stage}: {type(exc).__name__}: {exc}")
        self.stage = stage
        self.exc = exc
        self.exit_code = exc.exit_code


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


class Runner:
    def __init__(self, cfg: ExperimentConfig, out_dir, workers: int = 1,
                 conjugacy_cache: Optional[str] = None, framing_cache: Optional[str] = None):
        self.cfg = cfg
        self.out = Path(out_dir)
        self.workers = workers
        self.conjugacy_cache = conjugacy_cache
        self.framing_cache = framing_cache
        self.report: dict = {"config": cfg.to_dict(), "version": __version__, "stages": {}}
        self.timings: dict = {}
        self.L = IntegerMatrix.from_flat(cfg.matrix)
        self.F = None
        self.lin = None
        self.u: Optional[DisplacementField] = None
        self.framing: Optional[UFraming] = None
        self.orbits = None
        self.seeds = None

    # -- plumbing ------------------------------------------------------------
    def _write(self, name: str, text: str) -> None:
        (self.out / name).write_text(text)

    def _save(self) -> None:
        self._write("report.json", dump_json(self.report))
        self._write("timings.json", dump_json(self.timings))

    def run(self) -> dict:
        self.out.mkdir(parents=True, exist_ok=True)
        for stage in STAGES[self.cfg.mode]:
            t0 = time.perf_counter()
            log.info("stage %s", stage)
            try:
                result = getattr(self, f"stage_{stage}")()
            except JordanLabError as exc:
                self.report["stages"][stage] = "failed"
                self.report["error"] = {"stage": stage, "type": type(exc).__name__, "message": str(exc),
                                        "exit_code": exc.exit_code}
                self.timings[stage] = time.perf_counter() - t0
                log.error("stage %s failed: %s: %s", stage, type(exc).__name__, exc)
                self._save()
                raise StageError(stage, exc) from exc
            self.report[stage] = result
            self.report["stages"][stage] = "ok"
            self.timings[stage] = time.perf_counter() - t0
            log.info("stage %s done in %.2fs", stage, self.timings[stage])
            self._save()
        return self.report

    def _map(self):
        if self.F is None:
            cfg = self.cfg
            if cfg.family == "pullback":
                field = FourierField.from_records(cfg.perturbation or STANDARD_PHI_RECORDS)
                self.F = pullback_map(field, cfg.epsilon, self.L)
            else:
                field = FourierField.from_records(cfg.perturbation or STANDARD_P_RECORDS)
                self.F = SmoothMap(self.L, cfg.epsilon, field)
        return self.F

    def _linear(self):
        if self.lin is None:
            self.lin = linear_data(self.L)
        return self.lin

    # -- stages --------------------------------------------------------------
    def stage_classify(self) -> dict:
        cls = classify(self.L)
        out = cls.to_dict()
        out["matrix"] = [list(r) for r in self.L.rows]
        if cls.verdict == Verdict.JORDAN_ANOSOV:
            out["fixed_point_counts"] = {str(n): abs(power_minus_identity_det(self.L, n))
                                         for n in range(1, self.cfg.max_period + 1)}
        if self.cfg.mode != "classify" and cls.verdict != Verdict.JORDAN_ANOSOV:
            raise NotJordan(f"verdict {cls.verdict.value}; later stages need a Jordan block")
        return out

    def stage_certify(self) -> dict:
        cert = anosov_certify(self._map(), self._linear(), self.cfg.certify_grid_n,
                              self.cfg.tolerances.cone_theta)
        return cert.to_dict()

    def _seeds(self):
        if self.seeds is None:
            self.seeds = linear_orbits_up_to(self.L, self.cfg.max_period)
        return self.seeds

    def stage_orbits(self) -> dict:
        seeds = self._seeds()
        F = self._map()
        self.orbits = continue_orbits(F, seeds, tol=self.cfg.tolerances.newton_tol)
        attach_return_diffs(F, self.orbits)
        frame = self.framing.frame if self.framing is not None else None
        if frame is None and self.cfg.epsilon == 0:
            frame = linear_frame(self._linear().fu)
        tol = self.cfg.tolerances
        tags = {}
        if frame is not None:
            for o in self.orbits:
                periodic_eigen_data(o, frame, self._linear().lam, tol.disc_tol, tol.defect_tol)
                tags[o.tag] = tags.get(o.tag, 0) + 1
        write_orbit_table(self.out / "orbits.csv", self.orbits)
        counts = {}
        for o in self.orbits:
            counts[str(o.period)] = counts.get(str(o.period), 0) + 1
        lam = self._linear().lam
        eig_dev = None
        if frame is not None:
            eig_dev = max(float(np.abs(o.eig - lam ** o.period).max() / lam ** o.period) for o in self.orbits)
        return {"orbit_counts": counts, "n_orbits": len(self.orbits), "max_period": self.cfg.max_period,
                "max_newton_residual": max(o.residual for o in self.orbits), "newton_tol": tol.newton_tol,
                "eigen_tags": tags, "max_relative_eig_deviation": eig_dev, "table": "orbits.csv"}

    def stage_conjugacy(self) -> dict:
        cfg, tol = self.cfg, self.cfg.tolerances
        F = self._map()
        fixed = continue_orbits(F, linear_orbits_up_to(self.L, 1), tol=tol.newton_tol)[0]
        if self.conjugacy_cache:
            d = json.loads(Path(self.conjugacy_cache).read_text())
            self.u = DisplacementField.from_records(d["coefficients"], d["maxfreq"], d["grid_n"])
            self.u.residual = conjugacy_residual(F, self.u, 2 * self.u.grid_n, cfg.verify_samples, cfg.seed,
                                                 self.workers)
            cached = True
        else:
            budget = tol.truncation_budget if cfg.strict_truncation else float("inf")
            self.u = solve_conjugacy(F, self._linear().proj, cfg.maxfreq_u, cfg.grid_n, cfg.max_iters,
                                     tol.solver_tol, budget, fixed.points[0], True, cfg.verify_samples,
                                     cfg.seed, self.workers)
            cached = False
        u = self.u
        out = {"residual": u.residual, "residual_tol": tol.residual_tol, "residual_ok": u.residual < tol.residual_tol,
               "verify_grid_n": 2 * u.grid_n, "verify_samples": cfg.verify_samples,
               "grid_n": u.grid_n, "maxfreq_u": u.maxfreq, "iterations": u.iterations,
               "truncation_mass": u.truncation_mass, "truncation_budget": tol.truncation_budget,
               "pin_drift": u.pin_drift, "solver_tol": tol.solver_tol, "rate_fit": u.rate_fit,
               "sup_u": u.sup_norm(), "n_terms": u.field.n_terms, "cached": cached}
        if cfg.family == "pullback":
            x = np.random.default_rng(cfg.seed).random((1000, 4))
            out["phi_error"] = float(np.abs(torus_delta(u.h(x), F.phi(x))).max())
        self._write("conjugacy.json", dump_json({"maxfreq": u.maxfreq, "grid_n": u.grid_n,
                                                 "coefficients": u.to_records()}))
        return out

    def stage_framing(self) -> dict:
        cfg, tol = self.cfg, self.cfg.tolerances
        F = self._map()
        if self.framing_cache:
            self.framing = UFraming.from_json(Path(self.framing_cache).read_text())
            if self.framing.u is None:
                self.framing.u = self.u
        else:
            self.framing = build_framing(F, self.u, cfg.framing_grid_n, cfg.maxfreq_transfer,
                                         plane_tol=tol.plane_tol, frame_tol=tol.frame_tol,
                                         livsic_tol=tol.livsic_tol, lsq_budget=tol.lsq_budget)
        fr = self.framing
        vn = 2 * fr.n
        x = np.random.default_rng(cfg.seed + 1).integers(0, vn, (2000, 4)) / vn
        inv = fr.invariance_residual(F, x)
        pf = unstable_plane_field(F, self.u, fr.n, plane_tol=tol.plane_tol)
        plane_res = plane_invariance_residual(F, pf, x)
        self._write("framing.json", fr.to_json() + "\n")
        return {"grid_n": fr.n, "maxfreq_transfer": cfg.maxfreq_transfer, "verify_grid_n": vn,
                "verify_points": len(x), "frame_residual": inv, "frame_tol": tol.frame_tol,
                "frame_ok": max(inv.values()) < tol.frame_tol, "plane_residual": plane_res,
                "alpha_min": float(fr.alpha.min()), "alpha_max": float(fr.alpha.max()),
                "alpha_mean": float(fr.alpha.mean()), "diagnostics": fr.diagnostics}

    def stage_jordan(self) -> dict:
        tol = self.cfg.tolerances
        tl = linear_table(self._seeds())
        tf = framing_table(self.framing, self.orbits, "F")
        tl.to_csv(self.out / "jordan_L.csv")
        tf.to_csv(self.out / "jordan_F.csv")
        write_orbit_table(self.out / "orbits.csv", self.orbits)
        rep = projective_compare(tl, tf, proj_tol=tol.proj_tol)
        back = projective_compare(tf, tl, proj_tol=tol.proj_tol)
        self._write("comparison.json", dump_json(rep.to_dict()))
        return {"C": rep.C, "C_reverse": back.C, "max_residual": rep.max_residual, "verdict": rep.verdict.value,
                "proj_tol": tol.proj_tol, "max_period": self.cfg.max_period, "n_orbits": len(tf.rows),
                "tables": ["jordan_L.csv", "jordan_F.csv"], "comparison": "comparison.json"}

    def stage_probes(self) -> dict:
        cfg, p = self.cfg, self.cfg.probes
        F = self._map()
        lin = self._linear()
        lam = lin.lam
        rng = np.random.default_rng(cfg.seed + 2)
        Lmap = SmoothMap(self.L, 0.0)
        rows = []
        correct = 0
        for i in range(p.pairs):
            x = rng.random(4)
            angle = rng.uniform(-np.pi / 18, np.pi / 18)
            generic_dir = np.cos(angle) * lin.fu.chain_e2 + np.sin(angle) * lin.fu.e1
            e1F = self.framing.at(x)[0][0]
            for name, G, v, expect in (("L", Lmap, lin.fu.e1, "slow"), ("L", Lmap, generic_dir, "generic"),
                                       ("F", F, e1F, "slow"), ("F", F, generic_dir, "generic")):
                v = v / np.linalg.norm(v)
                g = growth_dichotomy(G, x, x + p.delta * v, p.n_max, lam)
                # prediction n lam^(n-1) |c2| delta from the Jordan power formula
                c2 = abs((lin.proj.Tinv @ v)[1])
                ratio = float(g.dist[-1] / (g.n[-1] * lam ** (g.n[-1] - 1) * p.delta * c2)) if c2 > 1e-3 else 0.0
                correct += g.label == expect
                rows.append([i, name, expect, g.label, g.slope, g.slow_drift, ratio])
        with open(self.out / "probes.csv", "w") as fh:
            fh.write("pair,map,expected,label,slope,slow_drift,generic_ratio\n")
            for r in rows:
                fh.write(",".join(str(v) if not isinstance(v, float) else repr(v) for v in r) + "\n")
        lo, hi, cnt = p.holder_scales
        scales = np.logspace(np.log10(lo), np.log10(hi), int(cnt))
        holder = {name: holder_exponent(self.u, v, p.holder_samples, scales, cfg.seed).to_dict()
                  for name, v in (("e1", lin.fu.e1), ("e2", lin.fu.e2))}
        pts = rng.random((p.intertwine_points, 4))
        inter = slow_leaf_intertwine(self.u, self.framing, pts, p.t_list, lin.fu.e1, p.step)
        control = slow_leaf_intertwine(self.u, self.framing, pts, p.t_list, lin.fu.e1, p.step, use_e2=True)
        flow = flow_relation(F, self.framing, rng.random((p.flow_points, 4)), p.flow_t, (1, 2, 3), p.step)
        slow_rows = [r for r in rows if r[2] == "slow"]
        gen_rows = [r for r in rows if r[2] == "generic" and r[1] == "L"]
        return {"growth": {"pairs": len(rows), "correct": correct, "n_max": p.n_max, "delta": p.delta,
                           "max_slow_drift": max(r[5] for r in slow_rows),
                           "max_generic_ratio_error_L": max(abs(r[6] - 1) for r in gen_rows),
                           "table": "probes.csv"},
                "holder": holder, "intertwine": inter.to_dict(), "intertwine_control": control.to_dict(),
                "flow_relation": flow.to_dict(),
                "bands": {"slow_drift": 0.01, "generic_ratio": 0.03, "holder": [0.9, 1.1],
                          "flow_relation": "1e-4 + integrator_error", "step": p.step,
                          "flow_points": p.flow_points, "flow_n": [1, 2, 3], "t_list": p.t_list,
                          "holder_samples": p.holder_samples}}


def run(cfg: ExperimentConfig, out_dir, workers: int = 1, conjugacy_cache=None, framing_cache=None) -> dict:
    return Runner(cfg, out_dir, workers, conjugacy_cache, framing_cache).run()
