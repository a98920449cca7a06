"""Discrete-event simulation of one protocol over one deployment."""
from __future__ import annotations

import random
from collections import deque
from math import dist

import numpy as np

from ..routing import DelayBeacon, DropReason, NeighborTable, ProtocolParams, select_forwarders, update_neighbor
from ..routing.forwarding import emit_trace, link_geometry
from ..scenario import AppEvent, Deployment, ScenarioConfig, stream_seed
from ..traffic import Mode, TrafficClass
from .energy import EnergyState, LinkModel, debit_energy
from .engine import EventKind, EventQueue
from .metrics import MetricsLog, Packet
from .queues import ClassQueue

ROI, BKGD = TrafficClass.ROI, TrafficClass.BKGD
_BEACON, _CAPTURE, _EMIT, _TX_END, _SWITCH = (
    EventKind.BEACON_TX, EventKind.FRAME_CAPTURE, EventKind.PACKET_EMIT, EventKind.TX_END, EventKind.MODE_SWITCH,
)


class ConstantFeed:
    """Video stand-in: fixed packets per frame of fixed size.

    Rush frames are split between ROI and BKGD like the codec does.
    """

    def __init__(self, bits: int = 1000, packets_per_frame: int = 33, roi_packets: int = 16):
        self.bits = bits
        self.ppf = packets_per_frame
        self.roi_packets = roi_packets

    def packets(self, node: int, frame_index: int, mode: Mode, capture_time: float):
        if mode == Mode.RUSH:
            return [(ROI if k < self.roi_packets else BKGD, self.bits) for k in range(self.ppf)]
        return [(BKGD, self.bits)] * self.ppf


class Node:
    __slots__ = ("id", "pos", "energy", "queues", "table", "busy", "seen", "links", "loss_to",
                 "backlog", "next_emit", "emitting", "mode", "geometry")

    def __init__(self, nid, pos, energy, capacity, table):
        self.id = nid
        self.pos = pos
        self.energy = energy
        self.queues = (ClassQueue(ROI, capacity), ClassQueue(BKGD, capacity))
        self.table = table
        self.busy = False
        self.seen: set[int] = set()
        self.links: list[tuple[int, float]] = []  # (neighbor, loss probability)
        self.loss_to: dict[int, float] = {}
        self.backlog = (deque(), deque())
        self.next_emit = [0.0, 0.0]
        self.emitting = [False, False]
        self.geometry: dict = {}
        self.mode = Mode.STANDBY


class Simulation:
    """One run: a deployment, a timeline, a protocol and a video feed."""

    def __init__(self, config: ScenarioConfig, deployment: Deployment, timeline: list[AppEvent],
                 params: ProtocolParams, feed=None, trace: bool = False):
        self.config = config
        self.dep = deployment
        self.timeline = timeline
        self.params = params
        self.feed = feed or ConstantFeed(packets_per_frame=config.codec.packets_per_frame)
        self.trace = trace
        self.link = LinkModel(config.radio_range, config.bandwidth, config.loss_at_range)
        self.q = EventQueue()
        real = deployment.realization
        self.link_rng = random.Random(stream_seed(config.rng_seed, real, "links"))
        self.fallback_rng = random.Random(stream_seed(config.rng_seed, real, "fallback"))
        self.sink = deployment.sink_id
        self.sink_pos = tuple(float(v) for v in deployment.positions[self.sink])
        self.rates = [[c.rate(m) for m in Mode] for c in config.classes]
        self.deadlines = tuple(c.deadline for c in config.classes)
        self.beacon_time = self.link.service_time(config.beacon_bits)
        self.horizon = config.warmup_duration + config.max_time_factor * max(
            config.video_end - config.warmup_duration, config.beacon_period)
        self.log = MetricsLog(params.variant.value, real, deployment.node_count, config.initial_energy)
        self._uid = 0
        self.pending = 0  # backlog + queued + in flight
        self.captures_left = 0
        self._build_nodes()

    # -- setup ------------------------------------------------------------

    def _build_nodes(self):
        cfg, pos = self.config, self.dep.positions
        delay_prior = self.link.service_time(1000)
        self.nodes = []
        for i in range(len(pos)):
            energy = EnergyState(cfg.initial_energy, cfg.tx_current, cfg.rx_current, cfg.supply_voltage)
            table = NeighborTable(cfg.beacon_period, delay_prior)
            self.nodes.append(Node(i, (float(pos[i, 0]), float(pos[i, 1])), energy, cfg.queue_capacity_per_class, table))
        for a in self.nodes:
            for b in self.nodes:
                if a is b:
                    continue
                d = dist(a.pos, b.pos)
                if d <= cfg.radio_range:
                    p = self.link.loss(d)
                    a.links.append((b.id, p))
                    a.loss_to[b.id] = p
            a.geometry = link_geometry(a.pos, self.sink_pos, {j: self.nodes[j].pos for j, _ in a.links})

    # -- bookkeeping ------------------------------------------------------

    def _drop(self, pkt: Packet, reason: DropReason, node: int):
        self.log.drops[(reason.value, pkt.cls)] += 1
        if self.trace:
            self.log.trace.append((self.q.now, node, "drop", pkt.cls.name, reason.value))

    def _kill(self, node: Node):
        """Flush a node that just ran out of energy."""
        for qu in node.queues:
            for pkt, _, _ in qu:
                self._drop(pkt, DropReason.NODE_DEAD, node.id)
            self.pending -= len(qu)
            qu.clear()
        for bl in node.backlog:
            self.pending -= len(bl)
            self.log.unsent += len(bl)
            bl.clear()
        if self.trace:
            self.log.trace.append((self.q.now, node.id, "death", "", ""))

    # -- radio ------------------------------------------------------------

    def beacon_broadcast(self, node: Node, now: float):
        sink = node.id == self.sink
        if sink:
            beacon = DelayBeacon(node.id, node.pos, (self.config.queue_capacity_per_class,) * 2,
                                 self.config.initial_energy, now)
        else:
            if not node.energy.alive:
                return
            beacon = DelayBeacon(node.id, node.pos, (node.queues[0].available, node.queues[1].available),
                                 node.energy.residual, now)
            if debit_energy(node.energy, node.energy.tx_cost(self.beacon_time), now):
                self._kill(node)
                return
        rnd = self.link_rng.random
        nodes = self.nodes
        for j, p in node.links:
            if j == self.sink:
                continue
            r = nodes[j]
            if not r.energy.alive or rnd() < p:
                continue
            if debit_energy(r.energy, r.energy.rx_cost(self.beacon_time), now):
                self._kill(r)
                continue
            update_neighbor(r.table, beacon, now)

    def _start_tx(self, node: Node, now: float):
        qs = node.queues
        dl = self.deadlines
        while True:
            qu = qs[0] if qs[0] else qs[1]
            if not qu:
                node.busy = False
                return
            item = qu.popleft()
            pkt = item[0]
            if now >= pkt.emit_time + dl[pkt.cls]:
                self.pending -= 1
                self._drop(pkt, DropReason.EXPIRED, node.id)
                continue
            service = pkt.bits / self.link.bandwidth
            self.log.transmissions += 1
            if debit_energy(node.energy, node.energy.tx_cost(service), now):
                self.pending -= 1
                self._drop(pkt, DropReason.NODE_DEAD, node.id)
                node.busy = False
                self._kill(node)
                return
            node.busy = True
            self.q.push(now + service, _TX_END, node.id, item)
            return

    def _tx_end(self, node: Node, item, now: float):
        node.busy = False
        self.pending -= 1
        pkt, nh, t_enq = item
        if not node.energy.alive:
            self._drop(pkt, DropReason.NODE_DEAD, node.id)
            return
        target = self.nodes[nh]
        ok = self.link_rng.random() >= node.loss_to[nh]
        if nh != self.sink:
            if not target.energy.alive:
                ok = False
            elif ok and debit_energy(target.energy, target.energy.rx_cost(pkt.bits / self.link.bandwidth), now):
                self._kill(target)
                ok = False
        entry = node.table.get(nh)
        if ok:
            if entry is not None:
                entry.record_ack(now - t_enq)
            self._receive(target, pkt, now)
        else:
            if entry is not None:
                entry.record_loss()
            self._drop(pkt, DropReason.LINK_LOSS, node.id)
        if node.queues[0] or node.queues[1]:
            self._start_tx(node, now)

    # -- packet handling --------------------------------------------------

    def _receive(self, node: Node, pkt: Packet, now: float):
        log = self.log
        if node.id == self.sink:
            if pkt.uid in log.first_delivery:
                log.duplicates += 1
            else:
                log.first_delivery[pkt.uid] = now
                log.delivered += 1
                if self.trace:
                    log.trace.append((now, node.id, "deliver", pkt.cls.name, ""))
            return
        if pkt.uid in node.seen:
            log.duplicates += 1
            return
        node.seen.add(pkt.uid)
        self._route(node, pkt, now)

    def _route(self, node: Node, pkt: Packet, now: float):
        table = node.table
        table.evict_stale(now)
        dec = select_forwarders(pkt, node.pos, self.sink_pos, table, self.params, now, self.fallback_rng, node.geometry)
        if self.trace:
            emit_trace(node.id, pkt.uid, dec)
            self.log.trace.append((now, node.id, "decide", pkt.cls.name, dec.drop_reason.value if dec.dropped else dec.stage))
        if dec.drop_reason is not None:
            self._drop(pkt, dec.drop_reason, node.id)
            return
        self.log.relayed += 1
        qu = node.queues[pkt.cls]
        for f in dec.forwarders:
            self.log.copies_created += 1
            if qu.offer((pkt, f, now)):
                self.pending += 1
            else:
                self._drop(pkt, DropReason.QUEUE_FULL, node.id)
        if not node.busy:
            self._start_tx(node, now)

    # -- application ------------------------------------------------------

    def _capture(self, node: Node, frame_index: int, mode: Mode, now: float):
        self.captures_left -= 1
        if not node.energy.alive:
            return
        cap = self.config.queue_capacity_per_class
        for pid, (cls, bits) in enumerate(self.feed.packets(node.id, frame_index, mode, now)):
            self._uid += 1
            if len(node.backlog[cls]) >= cap:
                # pacing backlog is bounded like any class queue: tail drop
                self.log.overflow[TrafficClass(cls)] += 1
                if self.trace:
                    self.log.trace.append((now, node.id, "drop", TrafficClass(cls).name, "source-queue-full"))
                continue
            node.backlog[cls].append(Packet(self._uid - 1, node.id, frame_index, pid, TrafficClass(cls), mode, bits, now))
            self.pending += 1
        for cls in (ROI, BKGD):
            if node.backlog[cls] and not node.emitting[cls]:
                node.emitting[cls] = True
                self.q.push(max(now, node.next_emit[cls]), _EMIT, node.id, cls)

    def _emit(self, node: Node, cls: int, now: float):
        bl = node.backlog[cls]
        if not node.energy.alive or not bl:
            node.emitting[cls] = False
            return
        pkt = bl.popleft()
        self.pending -= 1
        pkt.emit_time = now
        self.log.emitted.append(pkt)
        self.log.copies_created += 1
        node.next_emit[cls] = now + 1.0 / self.rates[cls][node.mode]
        node.seen.add(pkt.uid)
        self._route(node, pkt, now)
        if bl and node.energy.alive:
            self.q.push(node.next_emit[cls], _EMIT, node.id, cls)
        else:
            node.emitting[cls] = False

    # -- main loop --------------------------------------------------------

    def run(self) -> MetricsLog:
        q, nodes = self.q, self.nodes
        last_listed_beacon = -1.0
        for ev in self.timeline:
            if ev.kind == "beacon":
                last_listed_beacon = max(last_listed_beacon, ev.time)
                for n in nodes:
                    q.push(ev.time, _BEACON, n.id, False)
            elif ev.kind == "capture":
                self.captures_left += 1
                q.push(ev.time, _CAPTURE, ev.node, (ev.frame_index, ev.mode))
            elif ev.kind == "mode-switch" and ev.node >= 0:
                q.push(ev.time, _SWITCH, ev.node, ev.mode)
        # continue beaconing after the listed rounds, one round ahead
        period = self.config.beacon_period
        next_round = last_listed_beacon + period
        for n in nodes:
            q.push(next_round, _BEACON, n.id, True)

        horizon = self.horizon
        nevents = 0
        while q:
            ev = q.pop()
            now = ev.time
            if now > horizon:
                q.now = horizon
                break
            nevents += 1
            kind = ev.kind
            node = nodes[ev.node]
            if kind == _TX_END:
                self._tx_end(node, ev.payload, now)
            elif kind == _EMIT:
                self._emit(node, ev.payload, now)
            elif kind == _BEACON:
                self.beacon_broadcast(node, now)
                if ev.payload and (node.id == self.sink or node.energy.alive):
                    q.push(now + period, _BEACON, node.id, True)
            elif kind == _CAPTURE:
                self._capture(node, *ev.payload, now)
            elif kind == _SWITCH:
                node.mode = ev.payload
            if self.pending == 0 and self.captures_left == 0 and now >= self.config.warmup_duration:
                break
        return self._finish(nevents)

    def _finish(self, nevents: int) -> MetricsLog:
        log = self.log
        log.end_time = self.q.now
        log.events = nevents
        sensors = self.nodes[: self.sink]
        log.death_times = np.array([n.energy.death_time for n in sensors])
        log.residual = np.array([n.energy.residual for n in sensors])
        log.consumed = np.array([n.energy.consumed for n in sensors])
        # anything still in flight or queued at the horizon is dropped there
        for ev in self.q._heap:
            if ev.kind == _TX_END:
                self._drop(ev.payload[0], DropReason.EXPIRED, ev.node)
        for n in sensors:
            for qu in n.queues:
                for pkt, _, _ in qu:
                    self._drop(pkt, DropReason.EXPIRED, n.id)
                qu.clear()
            for bl in n.backlog:
                log.unsent += len(bl)
        return log


def run(config: ScenarioConfig, deployment: Deployment, timeline: list[AppEvent], params: ProtocolParams,
        feed=None, trace: bool = False) -> MetricsLog:
    return Simulation(config, deployment, timeline, params, feed, trace).run()
