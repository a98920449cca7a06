"""End-to-end acceptance checks on the desk preset.

Each test prints one PASS/FAIL line and the collected lines are repeated
in the pytest terminal summary. Thresholds are the stated ones; nothing
is relaxed when a check fails.
"""
import math
import time

import numpy as np
import pytest

from oracles import CODEC_CHECKS, ROUTING_CHECKS
from wvsn.harness import run_experiment, run_realization
from wvsn.scenario import ScenarioConfig
from wvsn.traffic import Mode, TrafficClass

ROI, BKGD = TrafficClass.ROI, TrafficClass.BKGD
RUSH = Mode.RUSH
REALIZATIONS = 10
RUNTIME_LIMIT = 300.0


@pytest.fixture(scope="module")
def desk():
    cfg = ScenarioConfig()
    t0 = time.perf_counter()
    exp = run_experiment(cfg, realizations=REALIZATIONS)
    return exp, time.perf_counter() - t0


def _sec(x: float) -> str:
    return "never" if math.isinf(x) else f"{x:.1f}s"


def _paired_mean(exp, protocol, get):
    return float(np.mean([get(r) for r in exp.paired(protocol)]))


def test_lifetime_ordering(desk, report):
    exp, elapsed = desk
    d50 = {p: _paired_mean(exp, p, lambda r: r.half_death) for p in exp.protocols}
    first = {p: _paired_mean(exp, p, lambda r: r.first_death) for p in exp.protocols}
    ordered = d50["eqbsa"] >= d50["qbsa"] >= d50["mmspeed"]
    gain = d50["eqbsa"] / d50["mmspeed"] - 1 if math.isfinite(d50["mmspeed"]) else math.nan
    ok = ordered and gain >= 0.15 and elapsed <= RUNTIME_LIMIT
    detail = ("50%-death " + ", ".join(f"{p} {_sec(d50[p])}" for p in exp.protocols)
              + f"; gain {gain:.1%} (need >= 15%); first death "
              + ", ".join(f"{p} {_sec(first[p])}" for p in exp.protocols)
              + f"; {REALIZATIONS} realizations in {elapsed:.0f}s (limit {RUNTIME_LIMIT:.0f}s)")
    report(1, "lifetime ordering", ok, detail)
    assert ok, detail


def test_service_differentiation(desk, report):
    exp, _ = desk
    parts, ok = [], True
    for p in exp.protocols:
        s = exp.summaries[p]
        roi, bkgd = s.delay[RUSH, ROI][0], s.delay[RUSH, BKGD][0]
        within = {k: v[0] for k, v in s.within_deadline.items() if not math.isnan(v[0])}
        ok &= roi < bkgd and min(within.values()) >= 0.9
        parts.append(f"{p} ROI {roi * 1e3:.1f}ms < BKGD {bkgd * 1e3:.1f}ms, min on-time share {min(within.values()):.3f}")
    detail = "; ".join(parts)
    report(2, "service differentiation", ok, detail)
    assert ok, detail


def test_reliability_ordering(desk, report):
    exp, _ = desk
    roi = {p: _paired_mean(exp, p, lambda r: r.pdr[RUSH, ROI]) for p in exp.protocols}
    bkgd = {p: _paired_mean(exp, p, lambda r: r.pdr[RUSH, BKGD]) for p in exp.protocols}
    ordered = roi["eqbsa"] >= roi["qbsa"] >= roi["mmspeed"]
    split = all(roi[p] > bkgd[p] for p in exp.protocols)
    ok = ordered and split
    detail = ", ".join(f"{p} ROI {roi[p]:.4f} / BKGD {bkgd[p]:.4f}" for p in exp.protocols)
    detail += f"; ordering {'holds' if ordered else 'violated'}, ROI > BKGD {'holds' if split else 'violated'}"
    report(3, "reliability ordering", ok, detail)
    assert ok, detail


def test_video_quality(desk, report):
    exp, _ = desk
    q = {p: _paired_mean(exp, p, lambda r: r.psnr_mean) for p in exp.protocols}
    gain = q["eqbsa"] - q["mmspeed"]
    ok = gain >= 1.0
    detail = ", ".join(f"{p} {q[p]:.2f}dB" for p in exp.protocols) + f"; EQBSA - MMSPEED = {gain:+.2f}dB (need >= +1)"
    report(4, "video quality", ok, detail)
    assert ok, detail


def test_formula_oracles(report):
    checks = [c() for c in ROUTING_CHECKS]
    ok = all(checks)
    detail = "; ".join(f"{c.name}: {c.detail}{'' if c else ' FAILED'}" for c in checks)
    report(5, "formula oracles", ok, detail)
    assert ok, detail


def test_codec_properties(report):
    checks = [c() for c in CODEC_CHECKS]
    ok = all(checks)
    detail = "; ".join(f"{c.name}: {c.detail}{'' if c else ' FAILED'}" for c in checks)
    report(6, "codec properties", ok, detail)
    assert ok, detail


def test_engine_conservation(desk, report):
    exp, _ = desk
    cfg = exp.config
    budget = cfg.node_count * cfg.initial_energy
    copies = max(abs(r.copy_balance) for r in exp.runs.values())
    energy = max(abs(r.energy_balance) for r in exp.runs.values()) / budget
    again = run_realization(cfg, 0, exp.protocols)
    same = all(res.csv == exp.runs[res.protocol, 0].csv for res in again)
    ok = copies == 0 and energy <= 1e-9 and same
    detail = (f"{len(exp.runs)} runs, max copy imbalance {copies}, max relative energy imbalance {energy:.1e}, "
              f"rerun of realization 0 {'byte-identical' if same else 'DIFFERS'}")
    report(7, "engine conservation", ok, detail)
    assert ok, detail
