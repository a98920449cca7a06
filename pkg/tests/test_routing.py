import json
import logging
import math
import random
from math import dist

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from wvsn.routing import (
    Candidate, ContractError, DeadlineExpired, DelayBeacon, DropReason, ForwardingDecision, NeighborEntry,
    NeighborTable, ProtocolParams, Variant, accumulate_trp, candidates, emit_trace, estimate_link_stats,
    forwarding_set, last_chance, lcp_split, link_geometry, node_score, probabilistic_fallback, progression_speed,
    reaching_probability, required_speed, select_forwarders, update_neighbor,
)
from wvsn.routing.neighbors import LOSS_PRIOR, SMOOTHING
from wvsn.traffic import TrafficClass

ROI, BKGD = TrafficClass.ROI, TrafficClass.BKGD
D = (0.0, 0.0)


class Pkt:
    def __init__(self, cls=ROI, emit_time=0.0):
        self.cls = cls
        self.emit_time = emit_time


def entry(j, pos, loss=0.0, delay=0.01, abs_=(100, 100), re=10.0, t=0.0):
    return NeighborEntry(j, pos, delay, loss, abs_, re, t)


def table_of(*entries):
    t = NeighborTable()
    for e in entries:
        t[e.neighbor_id] = e
    return t


def params(variant=Variant.EQBSA, **kw):
    w = {Variant.MMSPEED: (1.0, 0.0), Variant.QBSA: (0.7, 0.0), Variant.EQBSA: (0.3, 0.2)}[variant]
    return ProtocolParams(variant, *w, **kw)


# -- formula oracles (1,000 instances each) ----------------------------------

@pytest.mark.parametrize("check", oracles.ROUTING_CHECKS, ids=lambda c: c.__name__)
def test_formula_oracle(check):
    res = check()
    assert res, res.detail


# -- forwarding set ------------------------------------------------------------

def test_forwarding_set_examples():
    i = (100.0, 0.0)
    t = table_of(entry(1, (-20.0, 0.0)),   # beyond D on the line, closer: 20 < 100
                 entry(2, (0.0, 100.0)),   # same distance as i: excluded
                 entry(3, (140.0, 0.0)))   # farther
    assert forwarding_set(i, D, t) == [1]


def test_forwarding_set_empty_table():
    assert forwarding_set((5.0, 5.0), D, NeighborTable()) == []


# -- speeds ----------------------------------------------------------------------

def test_progression_speed_examples():
    assert progression_speed((100.0, 0.0), (60.0, 0.0), D, 0.2) == pytest.approx(200.0)
    assert progression_speed((100.0, 0.0), D, D, 1.0) == pytest.approx(100.0)
    assert progression_speed((100.0, 0.0), (0.0, 100.0), D, 0.5) == 0.0


@pytest.mark.parametrize("delay", [0.0, -0.1])
def test_progression_speed_rejects_nonpositive_delay(delay):
    with pytest.raises(ContractError):
        progression_speed((1.0, 0.0), D, D, delay)


def test_required_speed_examples():
    assert required_speed((100.0, 0.0), D, 1.0) == pytest.approx(100.0)
    assert required_speed((100.0, 0.0), D, 2.0) == pytest.approx(50.0)
    with pytest.raises(DeadlineExpired):
        required_speed((100.0, 0.0), D, 0.0)


# -- reaching probability and TRP ----------------------------------------------

def test_reaching_probability_examples():
    i, j = (120.0, 0.0), (80.0, 0.0)
    assert reaching_probability(i, j, D, 0.0) == 1.0
    assert reaching_probability(i, j, D, 0.1) == pytest.approx(0.729, abs=1e-12)
    assert reaching_probability(i, j, D, 1.0) == 0.0


@pytest.mark.parametrize("e", [-0.01, 1.01])
def test_reaching_probability_rejects_bad_loss(e):
    with pytest.raises(ContractError):
        reaching_probability((1.0, 0.0), D, D, e)


def test_reaching_probability_rejects_zero_hop():
    with pytest.raises(ContractError):
        reaching_probability((3.0, 4.0), (3.0, 4.0), D, 0.1)


def test_accumulate_trp_examples():
    assert accumulate_trp(0.0, 0.5) == 0.5
    assert accumulate_trp(0.5, 0.5) == 0.75
    assert accumulate_trp(0.37, 0.0) == pytest.approx(0.37)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_accumulate_trp_commutative_and_monotone(a, b, c):
    assert accumulate_trp(a, b) == pytest.approx(accumulate_trp(b, a), abs=1e-15)
    lo, hi = sorted((b, c))
    assert accumulate_trp(a, lo) <= accumulate_trp(a, hi) + 1e-15
    assert accumulate_trp(a, b) >= max(a, b) - 1e-15


# -- scores ---------------------------------------------------------------------

def test_node_score_examples():
    assert node_score(1.0, 1.0, 1.0, 0.3, 0.2) == pytest.approx(1.0)
    assert node_score(0.42, 0.1, 0.9, 1.0, 0.0) == pytest.approx(0.42)
    assert node_score(0.5, 0.8, 0.4, 0.3, 0.2) == pytest.approx(0.51)


def test_weights_validated():
    with pytest.raises(ValueError):
        ProtocolParams(Variant.EQBSA, 0.7, 0.4)
    with pytest.raises(ValueError):
        ProtocolParams(Variant.QBSA, -0.1, 0.0)


def test_variant_scoring_forms():
    c = Candidate(0, 1.0, 0.6, 0.5, 0.2)
    assert params(Variant.MMSPEED).score(c) == 0.6
    assert params(Variant.QBSA).score(c) == pytest.approx(0.7 * 0.6 + 0.3 * 0.5)
    assert params(Variant.EQBSA).score(c) == pytest.approx(0.3 * 0.6 + 0.2 * 0.5 + 0.5 * 0.2)


def test_variant_parse():
    assert Variant.parse("EQBSA-MMSPEED") is Variant.EQBSA
    assert Variant.parse(" qbsa ") is Variant.QBSA
    with pytest.raises(ValueError):
        Variant.parse("speed")


def test_candidates_with_and_without_geometry_agree():
    rng = np.random.default_rng(3)
    for _ in range(200):
        i_pos, d_pos, table = oracles.random_table(rng, 10)
        for v in Variant:
            p = params(v)
            geo = link_geometry(i_pos, d_pos, {j: e.position for j, e in table.items()})
            a = candidates(i_pos, d_pos, table, p, ROI)
            b = candidates(i_pos, d_pos, table, p, ROI, geo)
            assert a == b
            for c in a:
                assert c.score == pytest.approx(p.score(c), abs=1e-15)
                assert c.rp == pytest.approx(
                    reaching_probability(i_pos, table[c.node_id].position, d_pos, table[c.node_id].loss_estimate),
                    abs=1e-15)


# -- select_forwarders examples ----------------------------------------------------

def test_single_sufficient_forwarder():
    t = table_of(entry(1, D, loss=0.2))  # at D: no hops left, RP = 0.8
    dec = select_forwarders(Pkt(), (30.0, 0.0), D, t, params(), now=0.0)
    assert dec.forwarders == [1]
    assert dec.trp == pytest.approx(0.8)
    assert not dec.dropped


def test_two_forwarders_accumulate():
    t = table_of(entry(1, D, loss=0.5), entry(2, D, loss=0.5))
    dec = select_forwarders(Pkt(), (30.0, 0.0), D, t, params(Variant.MMSPEED), now=0.0)
    assert dec.forwarders == [1, 2]
    assert dec.trp == pytest.approx(0.75)


def test_void_region():
    t = table_of(entry(1, (50.0, 0.0)))
    dec = select_forwarders(Pkt(), (30.0, 0.0), D, t, params(), now=0.0)
    assert dec.drop_reason is DropReason.VOID


def test_expired_packet_dropped():
    t = table_of(entry(1, D))
    dec = select_forwarders(Pkt(ROI, emit_time=0.0), (30.0, 0.0), D, t, params(), now=1.0)
    assert dec.drop_reason is DropReason.EXPIRED


def test_bkgd_uses_its_own_dr_and_deadline():
    t = table_of(entry(1, D, loss=0.6), entry(2, D, loss=0.6))  # RP 0.4 each
    dec = select_forwarders(Pkt(BKGD), (30.0, 0.0), D, t, params(Variant.MMSPEED), now=1.5)
    assert dec.forwarders == [1]  # 0.4 >= DR_BKGD 0.3, and 1.5 s is inside the 2 s deadline
    assert dec.deadline == 2.0


def test_tie_break_prefers_rp_then_lower_id():
    # same score under MMSPEED means same RP; then the lower id wins
    t = table_of(entry(7, D, loss=0.2), entry(3, D, loss=0.2))
    dec = select_forwarders(Pkt(), (30.0, 0.0), D, t, params(Variant.MMSPEED), now=0.0)
    assert dec.forwarders == [3]
    # EQBSA: 4 has the higher RP, 5 compensates with energy; equal scores -> higher RP first
    a = entry(4, D, loss=0.1, re=0.0)  # score 0.3*0.9 + 0.2 = 0.47
    b = entry(5, D, loss=0.5, re=10.0 * 0.12 / 0.5)  # score 0.3*0.5 + 0.2 + 0.5*0.24 = 0.47
    cand = {c.node_id: c for c in candidates((30.0, 0.0), D, table_of(a, b), params(), ROI)}
    assert cand[4].score == pytest.approx(cand[5].score)
    dec = select_forwarders(Pkt(), (30.0, 0.0), D, table_of(a, b), params(), now=0.0)
    assert dec.forwarders[0] == 4


def test_mmspeed_keeps_insufficient_fs_high():
    # both fast, neither enough alone, together still below 0.7: best effort keeps both
    t = table_of(entry(1, D, loss=0.6), entry(2, D, loss=0.6))
    dec = select_forwarders(Pkt(), (30.0, 0.0), D, t, params(Variant.MMSPEED), now=0.0)
    assert dec.forwarders == [1, 2] and dec.trp == pytest.approx(0.64)
    assert dec.stage == "fs-high"


# -- fallback ------------------------------------------------------------------

def slow_table():
    # i at 100 m with 1 s left needs 100 m/s; node 1 gives 50 m progress in 1 s
    return table_of(entry(1, (50.0, 0.0), delay=1.0), entry(2, (80.0, 0.0), delay=1.0))


def test_fallback_never_drops_when_fast_enough():
    fs_low = [Candidate(1, 120.0, 0.5, 1, 1)]
    dec = probabilistic_fallback(fs_low, 100.0, random.Random(0), ForwardingDecision(ROI, 1.0))
    assert dec.forwarders == [1]


def test_fallback_empty_drops():
    dec = probabilistic_fallback([], 100.0, random.Random(0), ForwardingDecision(ROI, 1.0))
    assert dec.drop_reason is DropReason.VOID


def test_fallback_drop_rate():
    rng = random.Random(1234)
    trials, drops = 10_000, 0
    for _ in range(trials):
        dec = select_forwarders(Pkt(), (100.0, 0.0), D, slow_table(), params(Variant.MMSPEED), 0.0, rng)
        if dec.dropped:
            assert dec.drop_reason is DropReason.FALLBACK
            drops += 1
        else:
            assert dec.forwarders == [1]  # fastest slow node, not the most reliable
    assert abs(drops / trials - 0.5) <= 0.02


def test_fallback_deterministic_given_rng_state():
    a = [select_forwarders(Pkt(), (100.0, 0.0), D, slow_table(), params(Variant.QBSA), 0.0, random.Random(9)).dropped
         for _ in range(50)]
    b = [select_forwarders(Pkt(), (100.0, 0.0), D, slow_table(), params(Variant.QBSA), 0.0, random.Random(9)).dropped
         for _ in range(50)]
    assert a == b


# -- last chance procedure -------------------------------------------------------

def test_lcp_split_example():
    lc, rescue = lcp_split([Candidate(j, ps, 0.5, 1, 1) for j, ps in enumerate([10.0, 20.0, 30.0])])
    assert sorted(c.ps for c in lc) == [20.0, 30.0]
    assert [c.ps for c in rescue] == [10.0]


def test_lcp_singleton_selected():
    dec = last_chance([Candidate(4, 5.0, 0.2, 1, 1, 0.3)], 0.7, ForwardingDecision(ROI, 1.0))
    assert dec.forwarders == [4] and not dec.dropped


def test_lcp_appends_rescue_node():
    lc_node = Candidate(1, 30.0, 0.3, 1, 1, 0.5)
    rescue = [Candidate(2, 5.0, 0.9, 1, 1, 0.1), Candidate(3, 6.0, 0.4, 1, 1, 0.9)]
    dec = last_chance([lc_node, *rescue], 0.7, ForwardingDecision(ROI, 1.0))
    assert dec.forwarders == [1, 2]  # rescue picked by RP, not by score
    assert dec.stage == "rescue"
    assert dec.trp == pytest.approx(1 - 0.7 * 0.1)


def test_lcp_carries_partial_trp():
    dec = ForwardingDecision(ROI, 1.0, forwarders=[9], trp=0.6)
    last_chance([Candidate(1, 10.0, 0.5, 1, 1, 0.5)], 0.7, dec)
    assert dec.forwarders == [9, 1]
    assert dec.trp == pytest.approx(0.8)


def test_lcp_empty_drops():
    assert last_chance([], 0.7, ForwardingDecision(ROI, 1.0)).drop_reason is DropReason.VOID


def test_eqbsa_uses_lcp_where_mmspeed_gambles():
    dec = select_forwarders(Pkt(), (100.0, 0.0), D, slow_table(), params(Variant.EQBSA), 0.0)
    assert not dec.dropped and set(dec.forwarders) <= {1, 2}
    assert dec.stage in ("last-chance", "rescue")


# -- properties -------------------------------------------------------------------

@st.composite
def scenes(draw):
    n = draw(st.integers(0, 8))
    coord = st.floats(-60, 60, allow_nan=False)
    i_pos = (draw(st.floats(20, 80)), draw(st.floats(-30, 30)))
    entries = []
    for j in range(n):
        entries.append(entry(
            j, (draw(coord), draw(coord)), loss=draw(st.floats(0, 1)), delay=draw(st.floats(1e-3, 2.0)),
            abs_=(draw(st.integers(0, 100)), draw(st.integers(0, 100))), re=draw(st.floats(0, 10)),
        ))
    now = draw(st.floats(0, 0.95))
    cls = draw(st.sampled_from([ROI, BKGD]))
    return i_pos, table_of(*entries), now, cls


def _fs_oracle(i_pos, table):
    return {j for j, e in table.items() if dist(i_pos, D) - dist(e.position, D) > 0}


@settings(max_examples=300, deadline=None)
@given(scenes(), st.sampled_from(list(Variant)), st.integers(0, 2**32 - 1))
def test_decision_invariants(scene, variant, seed):
    i_pos, table, now, cls = scene
    p = params(variant)
    dec = select_forwarders(Pkt(cls), i_pos, D, table, p, now, random.Random(seed))
    fs = _fs_oracle(i_pos, table)
    assert set(dec.forwarders) <= fs
    assert len(set(dec.forwarders)) == len(dec.forwarders)
    rp = {c.node_id: c.rp for c in candidates(i_pos, D, table, p, cls)}
    assert dec.trp == pytest.approx(1 - np.prod([1 - rp[j] for j in dec.forwarders]), abs=1e-12)
    if dec.dropped:
        assert not dec.forwarders
    else:
        assert dec.forwarders
    if variant is Variant.EQBSA and fs:
        assert not dec.dropped
    if not fs:
        assert dec.drop_reason is DropReason.VOID
    again = select_forwarders(Pkt(cls), i_pos, D, table, p, now, random.Random(seed))
    assert (again.forwarders, again.drop_reason) == (dec.forwarders, dec.drop_reason)


@settings(max_examples=300, deadline=None)
@given(scenes(), st.sampled_from(list(Variant)))
def test_fs_high_prefix_is_top_by_score(scene, variant):
    i_pos, table, now, cls = scene
    p = params(variant)
    dec = select_forwarders(Pkt(cls), i_pos, D, table, p, now, random.Random(0))
    remaining = p.deadline[cls] - now
    req = dist(i_pos, D) / remaining
    cands = candidates(i_pos, D, table, p, cls)
    high = sorted((c for c in cands if c.ps >= req), key=lambda c: (-c.score, -c.rp, c.node_id))
    k = 0
    trp = 0.0
    while k < len(high) and trp < p.dr[cls]:
        trp = 1 - (1 - trp) * (1 - high[k].rp)
        k += 1
    assert dec.forwarders[:k] == [c.node_id for c in high[:k]]


@settings(max_examples=200, deadline=None)
@given(scenes(), st.integers(-6, 6))
def test_uniform_energy_rescaling_keeps_eqbsa_choice(scene, k):
    # halving or doubling the energy unit (all RE and the initial energy) is exact in binary
    i_pos, table, now, cls = scene
    c = 2.0 ** k
    scaled = table_of(*(entry(e.neighbor_id, e.position, e.loss_estimate, e.delay_estimate, e.abs_per_class,
                              e.residual_energy * c) for e in table.values()))
    a = select_forwarders(Pkt(cls), i_pos, D, table, params(), now)
    b = select_forwarders(Pkt(cls), i_pos, D, scaled, params(initial_energy=10.0 * c), now)
    assert a.forwarders == b.forwarders


def test_rescaling_re_alone_can_change_choice():
    # scale-freeness needs the reference energy to scale too
    a, b = entry(1, D, loss=0.1, re=1.0), entry(2, D, loss=0.4, re=2.0)
    before = select_forwarders(Pkt(), (30.0, 0.0), D, table_of(a, b), params(), 0.0).forwarders[0]
    a2, b2 = entry(1, D, loss=0.1, re=4.0), entry(2, D, loss=0.4, re=8.0)
    after = select_forwarders(Pkt(), (30.0, 0.0), D, table_of(a2, b2), params(), 0.0).forwarders[0]
    assert (before, after) == (1, 2)


# -- neighbor table -------------------------------------------------------------

def beacon(j, t, re=10.0, pos=(1.0, 2.0), abs_=(100, 100)):
    return DelayBeacon(j, pos, abs_, re, t)


def test_update_neighbor_inserts_and_copies_fields():
    t = NeighborTable(delay_prior=0.004)
    update_neighbor(t, beacon(1, 0.0), 0.0)
    assert len(t) == 1
    update_neighbor(t, beacon(1, 1.0, re=5.0, abs_=(40, 70)), 1.0)
    assert len(t) == 1 and t[1].residual_energy == 5.0 and t[1].abs_per_class == (40, 70)
    assert t[1].delay_estimate == 0.004 and t[1].loss_estimate == LOSS_PRIOR


def test_link_estimates_survive_refresh():
    t = NeighborTable()
    update_neighbor(t, beacon(1, 0.0), 0.0)
    t[1].record_loss()
    e = t[1].loss_estimate
    update_neighbor(t, beacon(1, 1.0), 1.0)
    assert t[1].loss_estimate == e


def test_stale_entry_evicted():
    t = NeighborTable(beacon_period=1.0)
    update_neighbor(t, beacon(1, 0.0), 0.0)
    update_neighbor(t, beacon(2, 0.0), 0.0)
    for s in (1.0, 2.0, 3.0):
        update_neighbor(t, beacon(2, s), s)
    assert set(t) == {1, 2}  # exactly 3 periods silent is still fresh
    update_neighbor(t, beacon(2, 3.01), 3.01)
    assert set(t) == {2}


def test_evict_stale_before_decision():
    t = table_of(entry(1, D, t=0.0), entry(2, D, t=2.5))
    assert t.evict_stale(3.2) == [1]
    assert set(t) == {2}
    assert t.evict_stale(3.3) == []


def test_beacon_rejects_nonfinite():
    with pytest.raises(ValueError):
        DelayBeacon(1, (math.nan, 0.0), (1, 1), 1.0, 0.0)
    with pytest.raises(ValueError):
        DelayBeacon(1, (0.0, 0.0), (1, 1), math.inf, 0.0)


def test_link_stats_all_acks_decrease_to_zero():
    est = [estimate_link_stats([(True, 0.01)] * k, 0.004)[1] for k in range(1, 60)]
    assert all(a > b for a, b in zip(est, est[1:]))
    assert est[-1] < 1e-9


def test_link_stats_constant_delay_converges():
    d, _ = estimate_link_stats([(True, 0.02)] * 100, 0.004)
    assert d == pytest.approx(0.02, rel=1e-12)


def test_link_stats_alternating_outcomes():
    # the estimate settles into a two-point cycle: 7/17 after a success, 10/17 after a failure
    hist = [(k % 2 == 1, 0.01) for k in range(100)]
    after_success = estimate_link_stats(hist, 0.004)[1]
    after_failure = estimate_link_stats(hist[:-1], 0.004)[1]
    s = SMOOTHING
    lo, hi = (1 - s) * s / (1 - (1 - s) ** 2), s / (1 - (1 - s) ** 2)
    assert after_success == pytest.approx(lo, abs=1e-9) and after_failure == pytest.approx(hi, abs=1e-9)
    assert (after_success + after_failure) / 2 == pytest.approx(0.5, abs=1e-9)


def test_link_stats_cold_start():
    assert estimate_link_stats([], 0.006) == (0.006, LOSS_PRIOR)


# -- trace hook --------------------------------------------------------------------

def test_trace_record_is_structured(caplog):
    t = table_of(entry(1, D, loss=0.5), entry(2, D, loss=0.5))
    dec = select_forwarders(Pkt(), (30.0, 0.0), D, t, params(Variant.MMSPEED), now=0.0)
    with caplog.at_level(logging.DEBUG, logger="wvsn.routing"):
        emit_trace(17, 3, dec)
    rec = json.loads(caplog.records[-1].getMessage())
    assert rec == {"node": 17, "packet": 3, "class": "ROI", "fs": 2, "fs_high": 2, "fs_low": 0,
                   "chosen": [1, 2], "trp": 0.75, "reason": "fs-high"}
