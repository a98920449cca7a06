"""Battery, radio cost and link-loss models."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(slots=True)
class EnergyState:
    initial: float
    tx_current: float
    rx_current: float
    voltage: float
    residual: float = -1.0
    consumed: float = 0.0
    alive: bool = True
    death_time: float = float("inf")

    def __post_init__(self):
        if self.residual < 0:
            self.residual = self.initial

    def tx_cost(self, seconds: float) -> float:
        return self.voltage * self.tx_current * seconds

    def rx_cost(self, seconds: float) -> float:
        return self.voltage * self.rx_current * seconds


def debit_energy(state: EnergyState, joules: float, now: float) -> bool:
    """Debit ``joules``; returns True if this debit kills the node.

    The debit is capped at the residual so residual + consumed stays equal
    to the initial reserve.
    """
    if joules < 0:
        raise ValueError("negative energy debit")
    if not state.alive:
        return False
    if joules >= state.residual:
        state.consumed += state.residual
        state.residual = 0.0
        state.alive = False
        state.death_time = now
        return True
    state.residual -= joules
    state.consumed += joules
    return False


@dataclass(frozen=True)
class LinkModel:
    radio_range: float = 40.0
    bandwidth: float = 250e3
    loss_at_range: float = 0.3

    def loss(self, d: float) -> float:
        """Packet loss probability at distance ``d``: quadratic up to range, 1 beyond."""
        if d > self.radio_range:
            return 1.0
        return self.loss_at_range * (d / self.radio_range) ** 2

    def service_time(self, bits: int) -> float:
        return bits / self.bandwidth
