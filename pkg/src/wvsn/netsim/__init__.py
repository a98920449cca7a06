"""Discrete-event network engine: radio links, queues, energy."""
from .energy import EnergyState, LinkModel, debit_energy
from .engine import CausalityError, EventKind, EventQueue, SimEvent
from .metrics import MetricsLog, Packet
from .network import ConstantFeed, Node, Simulation, run
from .queues import ClassQueue

__all__ = [
    "EnergyState", "LinkModel", "debit_energy", "CausalityError", "EventKind", "EventQueue", "SimEvent",
    "MetricsLog", "Packet", "ConstantFeed", "Node", "Simulation", "run", "ClassQueue",
]
