"""Geographic forwarding metrics: progress, speed, reaching probability, scores."""
from __future__ import annotations

import math
from math import dist


class ContractError(ValueError):
    """A routing formula was called outside its domain."""


class DeadlineExpired(Exception):
    """The packet has no time left; it must be dropped."""


def forwarding_set(i_pos, d_pos, table) -> list[int]:
    """Ids of table entries strictly closer to the destination than ``i_pos``.

    ``table`` maps neighbor id to an object with a ``position`` attribute
    (a :class:`~wvsn.routing.neighbors.NeighborTable` or a plain dict).
    """
    d_i = dist(i_pos, d_pos)
    return [j for j, e in table.items() if d_i - dist(e.position, d_pos) > 0]


def progression_speed(i_pos, j_pos, d_pos, delay_ij: float) -> float:
    if not delay_ij > 0:
        raise ContractError(f"delay must be positive, got {delay_ij}")
    return (dist(i_pos, d_pos) - dist(j_pos, d_pos)) / delay_ij


def required_speed(i_pos, d_pos, deadline_remaining: float) -> float:
    if deadline_remaining <= 0:
        raise DeadlineExpired(deadline_remaining)
    return dist(i_pos, d_pos) / deadline_remaining


def hops_remaining(d_jd: float, d_ij: float) -> int:
    """Estimated hops left after ``j``: floor(dist(j,D) / dist(i,j))."""
    return math.floor(d_jd / d_ij)


def reaching_probability(i_pos, j_pos, d_pos, e_ij: float) -> float:
    """Probability of reaching D when forwarding through j.

    The link to j succeeds with 1 - e_ij, and the remaining path is assumed
    to repeat that link quality over ``hops_remaining`` hops.
    """
    if not 0.0 <= e_ij <= 1.0:
        raise ContractError(f"loss rate must be in [0, 1], got {e_ij}")
    d_ij = dist(i_pos, j_pos)
    if d_ij == 0:
        raise ContractError("zero hop distance")
    q = 1.0 - e_ij
    return q * q ** hops_remaining(dist(j_pos, d_pos), d_ij)


def accumulate_trp(trp_old: float, rp: float) -> float:
    return 1.0 - (1.0 - trp_old) * (1.0 - rp)


def node_score(rp: float, abs_norm: float, re_norm: float, alpha: float, beta: float) -> float:
    """Weighted sum of reliability, free buffer and residual energy."""
    return alpha * rp + beta * abs_norm + (1.0 - alpha - beta) * re_norm
