"""Forwarder selection for MMSPEED, QBSA-MMSPEED and EQBSA-MMSPEED."""
from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from math import dist

from ..traffic import TrafficClass
from .geometry import DeadlineExpired, accumulate_trp, hops_remaining, node_score

log = logging.getLogger("wvsn.routing")


class Variant(enum.Enum):
    MMSPEED = "mmspeed"
    QBSA = "qbsa"
    EQBSA = "eqbsa"

    @classmethod
    def parse(cls, s: str) -> "Variant":
        s = s.strip().lower().replace("-mmspeed", "").replace("_", "")
        return cls(s)


class DropReason(str, enum.Enum):
    VOID = "void-region"
    EXPIRED = "expired"
    FALLBACK = "fallback-drop"
    QUEUE_FULL = "queue-full"
    LINK_LOSS = "link-loss"
    NODE_DEAD = "node-dead"


@dataclass(frozen=True)
class ProtocolParams:
    variant: Variant
    alpha: float = 1.0
    beta: float = 0.0
    dr: tuple[float, float] = (0.7, 0.3)  # indexed by TrafficClass
    deadline: tuple[float, float] = (1.0, 2.0)
    queue_capacity: int = 100
    initial_energy: float = 10.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta > 1 + 1e-12:
            raise ValueError(f"weights need alpha, beta >= 0 and alpha + beta <= 1: ({self.alpha}, {self.beta})")

    def score(self, c: "Candidate") -> float:
        if self.variant is Variant.MMSPEED:
            return c.rp
        if self.variant is Variant.QBSA:
            return self.alpha * c.rp + (1.0 - self.alpha) * c.abs_norm
        return node_score(c.rp, c.abs_norm, c.re_norm, self.alpha, self.beta)


@dataclass(slots=True)
class Candidate:
    node_id: int
    ps: float
    rp: float
    abs_norm: float
    re_norm: float
    score: float = 0.0


@dataclass
class ForwardingDecision:
    cls: TrafficClass
    deadline: float  # absolute time
    forwarders: list[int] = field(default_factory=list)
    trp: float = 0.0
    drop_reason: DropReason | None = None
    fs_size: int = 0
    fs_high_size: int = 0
    fs_low_size: int = 0
    stage: str = ""  # which step produced the last forwarder

    @property
    def dropped(self) -> bool:
        return self.drop_reason is not None

    def trace_record(self, node: int, packet_id) -> dict:
        return {
            "node": node, "packet": packet_id, "class": self.cls.name,
            "fs": self.fs_size, "fs_high": self.fs_high_size, "fs_low": self.fs_low_size,
            "chosen": self.forwarders, "trp": round(self.trp, 6),
            "reason": self.drop_reason.value if self.drop_reason else self.stage,
        }


def _rank_key(c: Candidate):
    return (-c.score, -c.rp, c.node_id)


def link_geometry(i_pos, d_pos, positions) -> dict:
    """Fixed per-neighbor terms for a static node: j -> (progress, hops_remaining).

    ``positions`` maps neighbor id to position. Only neighbors with positive
    progress are kept, so the result doubles as a forwarding-set filter.
    """
    d_i = dist(i_pos, d_pos)
    out = {}
    for j, p in positions.items():
        d_j = dist(p, d_pos)
        progress = d_i - d_j
        if progress > 0:
            out[j] = (progress, hops_remaining(d_j, dist(i_pos, p)))
    return out


def candidates(i_pos, d_pos, table, params: ProtocolParams, cls: TrafficClass, geometry=None) -> list[Candidate]:
    """Forwarding-set members with their speed, reaching probability and score.

    ``geometry`` (from :func:`link_geometry`) skips the distance work for
    nodes that never move; results are identical either way.
    """
    if geometry is None:
        geometry = link_geometry(i_pos, d_pos, {j: e.position for j, e in table.items()})
    cap = params.queue_capacity
    e0 = params.initial_energy
    variant, a, b = params.variant, params.alpha, params.beta
    out = []
    for j, e in table.items():
        g = geometry.get(j)
        if g is None:
            continue
        q = 1.0 - e.loss_estimate
        rp = q * q ** g[1]
        abs_norm = e.abs_per_class[cls] / cap
        re_norm = e.residual_energy / e0
        if variant is Variant.MMSPEED:
            score = rp
        elif variant is Variant.QBSA:
            score = a * rp + (1.0 - a) * abs_norm
        else:
            score = a * rp + b * abs_norm + (1.0 - a - b) * re_norm
        out.append(Candidate(j, g[0] / e.delay_estimate, rp, abs_norm, re_norm, score))
    return out


def greedy_accumulate(ranked, dr: float, trp: float, chosen: list[int]) -> float:
    """Append nodes from ``ranked`` until the TRP reaches ``dr``; returns the TRP."""
    for c in ranked:
        if trp >= dr:
            break
        chosen.append(c.node_id)
        trp = accumulate_trp(trp, c.rp)
    return trp


def probabilistic_fallback(fs_low: list[Candidate], req_speed: float, rng, decision: ForwardingDecision) -> ForwardingDecision:
    """Drop with probability 1 - best_PS/required, else send to the fastest slow node."""
    if not fs_low:
        decision.drop_reason = DropReason.VOID
        return decision
    best = min(fs_low, key=lambda c: (-c.ps, -c.rp, c.node_id))
    p_drop = min(1.0, max(0.0, 1.0 - best.ps / req_speed))
    if p_drop > 0 and rng.random() < p_drop:
        decision.drop_reason = DropReason.FALLBACK
        return decision
    decision.forwarders.append(best.node_id)
    decision.trp = accumulate_trp(decision.trp, best.rp)
    decision.stage = "fallback"
    return decision


def lcp_split(fs_low: list[Candidate]) -> tuple[list[Candidate], list[Candidate]]:
    """Split slow candidates at their mean speed: (last-chance, rescue)."""
    if not fs_low:
        return [], []
    avg = sum(c.ps for c in fs_low) / len(fs_low)
    lc = [c for c in fs_low if c.ps >= avg]
    rescue = [c for c in fs_low if c.ps < avg]
    return lc, rescue


def last_chance(fs_low: list[Candidate], dr: float, decision: ForwardingDecision) -> ForwardingDecision:
    """Top up a short TRP from slow neighbors instead of dropping.

    Above-average-speed nodes go first in score order; if the TRP is still
    short, the remaining nodes are added by decreasing reaching probability.
    """
    if not fs_low:
        if not decision.forwarders:
            decision.drop_reason = DropReason.VOID
        return decision
    lc, rescue = lcp_split(fs_low)
    lc.sort(key=_rank_key)
    n0 = len(decision.forwarders)
    decision.trp = greedy_accumulate(lc, dr, decision.trp, decision.forwarders)
    if len(decision.forwarders) > n0:
        decision.stage = "last-chance"
    if decision.trp < dr:
        rescue.sort(key=lambda c: (-c.rp, c.node_id))
        n1 = len(decision.forwarders)
        decision.trp = greedy_accumulate(rescue, dr, decision.trp, decision.forwarders)
        if len(decision.forwarders) > n1:
            decision.stage = "rescue"
    return decision


def select_forwarders(packet, i_pos, d_pos, table, params: ProtocolParams, now: float, rng=None,
                      geometry=None) -> ForwardingDecision:
    """Choose next hops for one packet at node position ``i_pos``.

    ``packet`` needs ``cls`` and ``emit_time``; ``rng`` (``random()``
    method) is only consulted by the MMSPEED/QBSA fallback.
    """
    cls = packet.cls
    deadline = packet.emit_time + params.deadline[cls]
    decision = ForwardingDecision(cls, deadline)
    remaining = deadline - now
    if remaining <= 0:
        decision.drop_reason = DropReason.EXPIRED
        return decision
    fs = candidates(i_pos, d_pos, table, params, cls, geometry)
    decision.fs_size = len(fs)
    if not fs:
        decision.drop_reason = DropReason.VOID
        return decision
    req = dist(i_pos, d_pos) / remaining
    high = [c for c in fs if c.ps >= req]
    low = [c for c in fs if c.ps < req]
    decision.fs_high_size, decision.fs_low_size = len(high), len(low)
    high.sort(key=_rank_key)
    dr = params.dr[cls]
    decision.trp = greedy_accumulate(high, dr, 0.0, decision.forwarders)
    if decision.forwarders:
        decision.stage = "fs-high"
    if decision.trp >= dr:
        return decision
    if params.variant is Variant.EQBSA:
        return last_chance(low, dr, decision)
    if decision.forwarders:
        # best effort: all of FS_high was used, keep it
        return decision
    return probabilistic_fallback(low, req, rng, decision)


def emit_trace(node: int, packet_id, decision: ForwardingDecision, logger: logging.Logger = log) -> None:
    logger.debug(json.dumps(decision.trace_record(node, packet_id)))


__all__ = [
    "Variant", "DropReason", "ProtocolParams", "Candidate", "ForwardingDecision",
    "link_geometry", "candidates", "greedy_accumulate", "probabilistic_fallback", "lcp_split",
    "last_chance", "select_forwarders", "emit_trace", "DeadlineExpired",
]
