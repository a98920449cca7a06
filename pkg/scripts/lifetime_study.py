"""Battery run-down study: first death and 50% death under a long Rush phase.

The desk preset ends before any battery is empty, so lifetime is compared
on the long-video profile (scenarios/lifetime.cfg). Prints one line per
realization and the paired means.

    python scripts/lifetime_study.py [--realizations 3] [--out results/lifetime]
"""
import argparse
import math
import time
from pathlib import Path

import numpy as np

from wvsn.harness import emit_outputs, run_experiment
from wvsn.scenario import load_config

ROOT = Path(__file__).resolve().parent.parent


def fmt(x):
    return "  never" if math.isinf(x) else f"{x:7.1f}"


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scenario", default=str(ROOT / "scenarios" / "lifetime.cfg"))
    ap.add_argument("--realizations", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", help="also write the usual CSV/SVG outputs here")
    args = ap.parse_args()

    cfg = load_config(args.scenario).with_overrides(realization_count=args.realizations)
    t0 = time.perf_counter()
    exp = run_experiment(cfg, workers=args.workers,
                         progress=lambda r, _: print(f"realization {r} done ({time.perf_counter() - t0:.0f} s)"))
    print(f"{'protocol':9s} {'real':>4s} {'first':>7s} {'50%':>7s} {'dead':>5s} {'energy J':>9s}")
    for p in exp.protocols:
        for res in exp.paired(p):
            print(f"{p:9s} {res.realization:4d} {fmt(res.first_death)} {fmt(res.half_death)} "
                  f"{int(np.isfinite(res.death_times).sum()):5d} {res.energy_consumed:9.1f}")
    print()
    for p in exp.protocols:
        s = exp.summaries[p]
        print(f"{p:9s} mean first death {fmt(s.first_death[0])}, mean 50% death {fmt(s.half_death[0])} (s)")
    if args.out:
        emit_outputs(exp, args.out)


if __name__ == "__main__":
    main()
