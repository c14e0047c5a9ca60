"""Fixed, documented perturbation families used by tests, scripts and configs."""

from __future__ import annotations

from .fourier import FourierField

# Smooth displacement p with max |m|_inf = 2 defining phi = id + eps * p.
STANDARD_PHI_RECORDS = [
    {"m": [1, 0, 0, 0], "cos": [0.12, -0.08, 0.04, 0.10], "sin": [0.00, 0.06, -0.04, 0.02]},
    {"m": [0, 1, 1, 0], "cos": [0.0, 0.0, 0.0, 0.0], "sin": [0.08, 0.04, -0.12, 0.04]},
    {"m": [1, -1, 0, 2], "cos": [-0.04, 0.08, 0.06, -0.08], "sin": [0.0, 0.0, 0.0, 0.0]},
    {"m": [0, 0, 2, 1], "cos": [0.0, 0.0, 0.0, 0.0], "sin": [0.04, -0.10, 0.08, 0.04]},
]

# Additive perturbation P for F = L + eps * P (max |m|_inf = 2).
STANDARD_P_RECORDS = [
    {"m": [1, 0, 0, 0], "cos": [0.0, 0.0, 0.0, 0.0], "sin": [0.40, -0.10, 0.20, 0.10]},
    {"m": [0, 1, 0, 1], "cos": [0.10, 0.20, -0.10, 0.30], "sin": [0.0, 0.0, 0.0, 0.0]},
    {"m": [2, 0, -1, 0], "cos": [0.0, 0.0, 0.0, 0.0], "sin": [-0.20, 0.10, 0.15, -0.05]},
]


def standard_phi() -> FourierField:
    return FourierField.from_records(STANDARD_PHI_RECORDS)


def standard_perturbation() -> FourierField:
    return FourierField.from_records(STANDARD_P_RECORDS)
