"""Run one experiment config and print a short summary of the report.

    python3 scripts/run_experiment.py configs/pullback_full.yaml --out out/pullback
"""

import argparse
import json
import logging

from jordan_lab.config import load
from jordan_lab.runner import run


def summarize(rep: dict) -> list:
    lines = [f"mode {rep['config']['mode']}, family {rep['config']['family']}, eps {rep['config']['epsilon']}"]
    if "classify" in rep:
        c = rep["classify"]
        lines.append(f"classify: {c['verdict']}  q = {c['q_str']}")
    if "certify" in rep:
        c = rep["certify"]
        lines.append(f"certify: {c['certified']}  mu = {c['mu']:.4f}  margin = {c['margin']:.3e}")
    if "conjugacy" in rep:
        c = rep["conjugacy"]
        lines.append(f"conjugacy: residual {c['residual']:.2e}  truncation {c['truncation_mass']:.2e}"
                     f"  iterations {c['iterations']}")
    if "framing" in rep:
        f = rep["framing"]
        lines.append(f"framing: e1 {f['frame_residual']['e1']:.2e}  e2 {f['frame_residual']['e2']:.2e}"
                     f"  alpha in [{f['alpha_min']:.6f}, {f['alpha_max']:.6f}]")
    if "orbits" in rep:
        lines.append(f"orbits: {rep['orbits']['orbit_counts']}")
    if "jordan" in rep:
        j = rep["jordan"]
        lines.append(f"jordan data: {j['verdict']}  C = {j['C']:.8f}  max residual {j['max_residual']:.2e}")
    if "probes" in rep:
        p = rep["probes"]
        lines.append(f"probes: growth {p['growth']['correct']}/{p['growth']['pairs']}"
                     f"  holder e2 {p['holder']['e2']['exponent']:.4f}"
                     f"  flow {p['flow_relation']['discrepancy']:.1e}")
    return lines


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config")
    ap.add_argument("--out", default="out")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    rep = run(load(args.config), args.out, args.workers)
    print("\n".join(summarize(rep)))
    print(json.dumps(rep.get("stages", {})))


if __name__ == "__main__":
    main()
