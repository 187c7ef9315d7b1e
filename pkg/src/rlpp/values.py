"""Passenger-line values from a road network.

A passenger rides line ``l`` by driving from her source to some stop ``i`` of
the route, riding the bus forward to a later stop ``j`` and driving from ``j``
to her destination.  Each of the O(n_l^2) options is scored by a value
function of ``(direct car time, total trip time, car time)``; the best option
and its contiguous sub-route of edges ``i .. j-1`` form the :class:`ValueEntry`.

Waiting time is not part of the total trip time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnreachableNodeError
from .model import Line, Network, Passenger, ValueEntry


@dataclass(frozen=True)
class PiecewiseValue:
    """Car-time reduction, positive only for tolerable trip length and car time.

    ``alpha`` is the tolerated relative increase of total trip time over the
    direct car trip; ``beta`` in (0, 1] scales the efficiency gain.
    """

    alpha: float
    beta: float

    def __call__(self, direct, total, car):
        ok = (total < (1.0 + self.alpha) * direct) & (car < self.beta * direct)
        return np.where(ok, self.beta * direct - car, 0.0)


@dataclass(frozen=True)
class DetourValue:
    """Car time saved against the direct trip, if the trip takes at most ``beta`` times as long."""

    beta: float = 3.0

    def __call__(self, direct, total, car):
        ok = total <= self.beta * direct
        return np.where(ok, np.maximum(direct - car, 0.0), 0.0)


def route_schedule(network: Network, line: Line):
    """Stop nodes of ``line`` and cumulative bus travel time at each stop."""
    nodes = network.walk_nodes(line.route)
    if nodes is None:
        raise ValueError(f"line {line.id!r}: route is not a walk in the network")
    cum = np.concatenate(([0.0], np.cumsum([network.edges[k][2] for k in line.route])))
    return nodes, cum


def compute_passenger_line_value(network: Network, line: Line, passenger: Passenger,
                                 value_fn) -> ValueEntry | None:
    """Best trip option for ``passenger`` on ``line``; None if no option has positive value.

    Ties go to the shortest sub-route, then to the earliest boarding stop.  If
    both ``line.start_time`` and ``passenger.request_time`` are set, boarding
    at stop ``i`` requires ``request_time + car_time(source, i) <= start_time
    + bus_time(0, i)``.
    """
    s, d = passenger.source, passenger.destination
    for node in (s, d):
        if node is None or not 0 <= node < network.n_nodes:
            raise UnreachableNodeError(f"passenger {passenger.id!r}: node {node} is not in the network")
    from_s = network.car_times(s)
    to_d = network.car_times(d)
    direct = from_s[d]
    if not np.isfinite(direct):
        raise UnreachableNodeError(f"passenger {passenger.id!r}: destination node {d} "
                                   f"unreachable from source node {s}")

    nodes, cum = route_schedule(network, line)
    nodes = np.asarray(nodes)
    n = len(nodes)
    board, alight = np.triu_indices(n, k=1)
    car = from_s[nodes[board]] + to_d[nodes[alight]]
    total = car + (cum[alight] - cum[board])
    with np.errstate(invalid="ignore"):
        val = np.asarray(value_fn(direct, total, car), dtype=float)
    val = np.where(np.isfinite(car), val, 0.0)
    if line.start_time is not None and passenger.request_time is not None:
        ready = passenger.request_time + from_s[nodes[board]] <= line.start_time + cum[board]
        val = np.where(ready, val, 0.0)

    best = val.max(initial=0.0)
    if not best > 0:
        return None
    cand = np.flatnonzero(val == best)
    length = alight[cand] - board[cand]
    # lexsort: last key is primary
    pick = cand[np.lexsort((board[cand], length))[0]]
    return ValueEntry(passenger.id, line.id, float(best), int(board[pick]), int(alight[pick]) - 1)


def build_value_entries(network: Network, lines, passengers, value_fn) -> list[ValueEntry]:
    """Value entries for every covered (line, passenger) pair, line-major order."""
    out = []
    for ln in lines:
        for p in passengers:
            e = compute_passenger_line_value(network, ln, p, value_fn)
            if e is not None:
                out.append(e)
    return out
