"""Paired MMSPEED / QBSA / EQBSA comparison on the desk preset.

    python scripts/run_desk.py --out results/desk [--realizations 10] [--workers 1]
"""
import argparse
import sys
from pathlib import Path

from wvsn.cli import main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results/desk")
    ap.add_argument("--realizations", type=int)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    argv = ["-v", "run", "--scenario", str(ROOT / "scenarios" / "desk.cfg"), "--out", args.out,
            "--workers", str(args.workers)]
    if args.realizations:
        argv += ["--realizations", str(args.realizations)]
    sys.exit(main(argv))
