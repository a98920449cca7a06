"""Multi-class geographic forwarding (MMSPEED family)."""
from .forwarding import (
    Candidate, DropReason, ForwardingDecision, ProtocolParams, Variant, candidates, emit_trace,
    greedy_accumulate, last_chance, lcp_split, link_geometry, probabilistic_fallback, select_forwarders,
)
from .geometry import (
    ContractError, DeadlineExpired, accumulate_trp, forwarding_set, hops_remaining, node_score,
    progression_speed, reaching_probability, required_speed,
)
from .neighbors import DelayBeacon, NeighborEntry, NeighborTable, estimate_link_stats, update_neighbor

__all__ = [
    "Candidate", "DropReason", "ForwardingDecision", "ProtocolParams", "Variant", "candidates",
    "emit_trace", "greedy_accumulate", "last_chance", "lcp_split", "link_geometry", "probabilistic_fallback",
    "select_forwarders", "ContractError", "DeadlineExpired", "accumulate_trp", "forwarding_set",
    "hops_remaining", "node_score", "progression_speed", "reaching_probability", "required_speed",
    "DelayBeacon", "NeighborEntry", "NeighborTable", "estimate_link_stats", "update_neighbor",
]
