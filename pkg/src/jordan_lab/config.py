"""Experiment configuration: one declarative file, validated before any work."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import yaml

from .errors import ValidationError
from .exact_linalg import BASE_MATRIX

MODES = ("classify", "periodic", "conjugacy", "framing", "jordan_data", "probes", "full")
FAMILIES = ("additive", "pullback")


@dataclass
class Tolerances:
    solver_tol: float = 1e-13
    truncation_budget: float = 1e-9
    residual_tol: float = 1e-8
    plane_tol: float = 1e-12
    frame_tol: float = 1e-7
    livsic_tol: float = 1e-6
    lsq_budget: float = 1e-6
    proj_tol: float = 1e-3
    newton_tol: float = 1e-12
    disc_tol: float = 1e-4
    defect_tol: float = 1e-3
    cone_theta: float = 0.2


@dataclass
class ProbeConfig:
    n_max: int = 25
    pairs: int = 10
    delta: float = 1e-10
    holder_samples: int = 256
    holder_scales: list = field(default_factory=lambda: [1e-4, 1e-1, 13])
    intertwine_points: int = 3
    t_list: list = field(default_factory=lambda: [0.1, -0.1, 0.2])
    flow_points: int = 20
    flow_t: float = 0.2
    step: float = 1e-3


@dataclass
class ExperimentConfig:
    matrix: list = field(default_factory=lambda: [v for r in BASE_MATRIX.rows for v in r])
    mode: str = "full"
    family: str = "pullback"
    epsilon: float = 1e-3
    perturbation: Optional[list] = None     # FourierField records; None = family default
    grid_n: int = 32
    maxfreq_u: int = 12
    framing_grid_n: int = 24
    maxfreq_transfer: int = 11
    max_period: int = 5
    certify_grid_n: int = 32
    max_iters: int = 60
    verify_samples: int = 4096
    strict_truncation: bool = True
    seed: int = 0
    tolerances: Tolerances = field(default_factory=Tolerances)
    probes: ProbeConfig = field(default_factory=ProbeConfig)

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ValidationError(f"{where}: expected a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ValidationError(f"{where}: unknown keys {unknown}")
    kw = {}
    for k, v in data.items():
        if k == "tolerances":
            v = _build(Tolerances, v, "tolerances")
        elif k == "probes":
            v = _build(ProbeConfig, v, "probes")
        kw[k] = v
    return cls(**kw)


def _check_number(name, v, kind=float, positive=True):
    if isinstance(v, bool) or not isinstance(v, (int, float) if kind is float else int):
        raise ValidationError(f"{name} must be {kind.__name__}, got {v!r}")
    if positive and v <= 0:
        raise ValidationError(f"{name} must be positive")


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if (not isinstance(cfg.matrix, list) or len(cfg.matrix) != 16
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in cfg.matrix)):
        raise ValidationError("matrix must be a list of 16 integers")
    if cfg.mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}")
    if cfg.family not in FAMILIES:
        raise ValidationError(f"family must be one of {FAMILIES}")
    _check_number("epsilon", cfg.epsilon, positive=False)
    if cfg.epsilon < 0:
        raise ValidationError("epsilon must be non-negative")
    for name in ("grid_n", "maxfreq_u", "framing_grid_n", "maxfreq_transfer", "max_period",
                 "certify_grid_n", "max_iters", "verify_samples"):
        _check_number(name, getattr(cfg, name), int)
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, int):
        raise ValidationError("seed must be an integer")
    if cfg.grid_n < 2 * cfg.maxfreq_u + 2:
        raise ValidationError("grid_n must be at least 2 * maxfreq_u + 2")
    if cfg.certify_grid_n < 16:
        raise ValidationError("certify_grid_n must be at least 16")
    if cfg.perturbation is not None:
        if not isinstance(cfg.perturbation, list):
            raise ValidationError("perturbation must be a list of {m, cos, sin} records")
        for r in cfg.perturbation:
            if not isinstance(r, dict) or set(r) - {"m", "cos", "sin"} or "m" not in r:
                raise ValidationError(f"bad perturbation record {r!r}")
            if len(r["m"]) != 4 or any(len(r.get(k, [0] * 4)) != 4 for k in ("cos", "sin")):
                raise ValidationError(f"perturbation record needs 4-vectors: {r!r}")
    for f in fields(Tolerances):
        _check_number(f"tolerances.{f.name}", getattr(cfg.tolerances, f.name))
    p = cfg.probes
    for name in ("n_max", "pairs", "holder_samples", "intertwine_points", "flow_points"):
        _check_number(f"probes.{name}", getattr(p, name), int)
    if len(p.holder_scales) != 3:
        raise ValidationError("probes.holder_scales is [min, max, count]")
    if p.step > 1e-3:
        raise ValidationError("probes.step must be at most 1e-3")
    return cfg


def from_dict(data: dict) -> ExperimentConfig:
    return validate(_build(ExperimentConfig, data or {}, "config"))


def load(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ValidationError(f"cannot parse {path}: {exc}") from exc
    return from_dict(data)
