"""Command-line entry point: ``jordan-lab <mode|run> CONFIG --out DIR``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import config as config_mod
from .config import MODES
from .errors import JordanLabError
from .runner import StageError, Runner


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jordan-lab", description="Jordan-block Anosov experiments")
    ap.add_argument("command", choices=("run",) + MODES,
                    help="'run' uses the mode in the config; a mode name overrides it")
    ap.add_argument("config", help="YAML or JSON experiment config")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--workers", type=int, default=1, help="threads for grid evaluation")
    ap.add_argument("--conjugacy-cache", help="reuse a conjugacy.json from an earlier run")
    ap.add_argument("--framing-cache", help="reuse a framing.json from an earlier run")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    console = logging.StreamHandler()
    console.setLevel(level)
    console.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    try:
        cfg = config_mod.load(args.config)
        if args.command != "run":
            cfg = config_mod.validate(replace(cfg, mode=args.command))
    except JordanLabError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    Path(args.out).mkdir(parents=True, exist_ok=True)
    fh = logging.FileHandler(Path(args.out) / "run.log", mode="w")
    fh.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    fh.setLevel(logging.INFO)
    logger = logging.getLogger("jordan_lab")
    logger.addHandler(fh)
    logger.addHandler(console)
    logger.setLevel(logging.INFO)
    try:
        Runner(cfg, args.out, args.workers, args.conjugacy_cache, args.framing_cache).run()
    except StageError as exc:
        print(str(exc), file=sys.stderr)
        return exc.exit_code
    finally:
        logger.removeHandler(fh)
        logger.removeHandler(console)
        fh.close()
    print(f"report written to {Path(args.out) / 'report.json'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
