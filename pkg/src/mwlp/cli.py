"""Command-line entry point: ``mwlp <kind> --config <path> [options]``.

Exit status is 0 when the experiment's acceptance checks pass, 2 when they
were computed but failed and 1 on any error (bad configuration, I/O, or a
computation that raised).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import KINDS, parse_config
from .errors import MwlpError
from .runner import run_experiment


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mwlp", description=__doc__.splitlines()[0])
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--config", type=Path, help="key=value configuration file")
    ap.add_argument("--out", help="output directory (overrides the 'out' key)")
    ap.add_argument("--seed", type=int, help="random seed (overrides the 'seed' key)")
    ap.add_argument("--grid-J", type=int, dest="grid_J", help="grid level (overrides 'J')")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text, kind=args.kind, out=args.out, seed=args.seed, J=args.grid_J)
        status, report = run_experiment(cfg)
    except (MwlpError, OSError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"mwlp: error: {exc}", file=sys.stderr)
        return 1
    verdict = "pass" if report["pass"] else "FAIL"
    print(f"{cfg.kind}: {verdict} (config {report['config_hash']}) -> {Path(cfg.out) / (cfg.kind + '.json')}")
    return status


if __name__ == "__main__":
    sys.exit(main())
