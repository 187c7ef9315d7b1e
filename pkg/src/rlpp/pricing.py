"""Pricing oracle for the configuration LP.

For one line and dual prices ``(alpha, q, lam)`` the oracle maximises
``sum_{p in S} (v_lp - lam_p)`` over passenger sets ``S`` that fit the line's
per-edge capacity ``C * f``.  Each passenger occupies a contiguous block of
edges, so the constraint matrix has the consecutive-ones property and the
problem is a min-cost flow: ``K = C * f`` units travel along the edge axis,
and a unit may skip the block ``[first, last]`` of a passenger at cost
``-weight``.  Units that skip a block are exactly the selected passengers, and
at most ``K`` units cover any edge.  Successive shortest paths keep the flow
integral at every step, so no rounding is involved.  Weights are scaled to
exact integers first, so the optimum is exact, not merely exact up to
floating-point noise.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import SubRouteError
from .model import Instance

PRICING_TOL = 1e-7


class Selection(NamedTuple):
    chosen: tuple[int, ...]
    objective: float


def as_interval(edge_indices) -> tuple[int, int]:
    """Convert a list of edge positions to ``(first, last)``; they must be consecutive."""
    idx = sorted(edge_indices)
    if not idx or idx != list(range(idx[0], idx[-1] + 1)):
        raise SubRouteError(f"sub-route {list(edge_indices)} is not a contiguous range of edges")
    return idx[0], idx[-1]


def solve_capacitated_interval_selection(intervals, weights, capacity: int,
                                         n_edges: int | None = None) -> Selection:
    """Max-weight set of intervals such that every edge is covered at most ``capacity`` times.

    ``intervals[i] = (first, last)`` is an inclusive range of edge positions.
    Intervals with non-positive weight are never chosen.
    """
    if capacity < 1 or capacity != int(capacity):
        raise ValueError(f"capacity must be a positive integer, got {capacity}")
    capacity = int(capacity)
    if len(intervals) != len(weights):
        raise ValueError("intervals and weights differ in length")
    for i, (a, b) in enumerate(intervals):
        if not 0 <= a <= b or (n_edges is not None and b >= n_edges):
            raise SubRouteError(f"interval {i} = ({a}, {b}) is not a valid contiguous sub-route")

    cand = [i for i, w in enumerate(weights) if w > 0]
    if not cand:
        return Selection((), 0.0)

    # compress the edge axis to the breakpoints of the candidate intervals
    points = sorted({intervals[i][0] for i in cand} | {intervals[i][1] + 1 for i in cand})
    pos = {x: k for k, x in enumerate(points)}
    n = len(points)

    # arc arrays; arc a and a ^ 1 are residual twins
    head, cap, cost = [], [], []
    adj = [[] for _ in range(n)]

    def add_arc(u, v, c, w):
        adj[u].append(len(head))
        head.append(v)
        cap.append(c)
        cost.append(w)
        adj[v].append(len(head))
        head.append(u)
        cap.append(0)
        cost.append(-w)

    # exact integer costs: every float is an integer times a power of two
    ratios = [float(weights[i]).as_integer_ratio() for i in cand]
    denom = max(d for _, d in ratios)
    for k in range(n - 1):
        add_arc(k, k + 1, capacity, 0)
    arc_of = {}
    for i, (num, den) in zip(cand, ratios):
        arc_of[i] = len(head)
        add_arc(pos[intervals[i][0]], pos[intervals[i][1] + 1], 1, -num * (denom // den))

    # initial potentials: shortest distances in the DAG (arcs go left to right)
    pot = [0] * n
    for u in range(n):
        for a in adj[u]:
            if cap[a] > 0 and pot[u] + cost[a] < pot[head[a]]:
                pot[head[a]] = pot[u] + cost[a]

    source, sink = 0, n - 1
    sent = 0
    while sent < capacity:
        dist = [None] * n
        prev = [-1] * n
        dist[source] = 0
        heap = [(0, source)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            pu = pot[u]
            for a in adj[u]:
                if cap[a] <= 0:
                    continue
                v = head[a]
                nd = d + cost[a] + pu - pot[v]
                if dist[v] is None or nd < dist[v]:
                    dist[v] = nd
                    prev[v] = a
                    heapq.heappush(heap, (nd, v))
        if dist[sink] is None or dist[sink] + pot[sink] - pot[source] >= 0:
            break
        for v in range(n):
            if dist[v] is not None:
                pot[v] += dist[v]
        push = capacity - sent
        v = sink
        while v != source:
            a = prev[v]
            push = min(push, cap[a])
            v = head[a ^ 1]
        v = sink
        while v != source:
            a = prev[v]
            cap[a] -= push
            cap[a ^ 1] += push
            v = head[a ^ 1]
        sent += push

    chosen = []
    for i in cand:
        used = cap[arc_of[i] ^ 1]
        if used not in (0, 1):
            raise AssertionError(f"non-integral flow {used} on interval {i}")
        if used:
            chosen.append(i)
    return Selection(tuple(chosen), math.fsum(weights[i] for i in chosen))


@dataclass(frozen=True)
class DualPrices:
    """Duals of the budget row (alpha), line rows (q) and passenger rows (lam).

    ``q`` and ``lam`` are indexed by position in ``instance.lines`` and
    ``instance.passengers``.
    """

    alpha: float
    q: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        if self.alpha < 0 or (self.q < 0).any() or (self.lam < 0).any():
            raise ValueError("dual prices must be non-negative")

    @classmethod
    def zeros(cls, instance: Instance) -> DualPrices:
        return cls(0.0, np.zeros(len(instance.lines)), np.zeros(len(instance.passengers)))


@dataclass(frozen=True)
class Column:
    """A line together with a capacity-feasible set of its passengers."""

    line: str
    passengers: tuple[str, ...]
    welfare: float
    usage: tuple[int, ...]


def make_column(instance: Instance, line_id: str, passenger_ids) -> Column:
    """Build a column, checking coverage and per-edge capacity."""
    line = instance.lines[instance.line_index[line_id]]
    order = instance.passenger_index
    pids = tuple(sorted(set(passenger_ids), key=order.__getitem__))
    if not pids:
        raise ValueError("a column needs at least one passenger")
    usage = np.zeros(len(line.route) + 1, dtype=np.int64)
    vals = []
    for pid in pids:
        e = instance.entry(line_id, pid)
        if e is None or e.value <= 0:
            raise ValueError(f"passenger {pid!r} is not covered by line {line_id!r}")
        vals.append(e.value)
        usage[e.first] += 1
        usage[e.last + 1] -= 1
    load = np.cumsum(usage[:-1])
    if load.max() > instance.capacity * line.frequency:
        raise ValueError(f"passenger set exceeds the capacity of line {line_id!r}")
    return Column(line_id, pids, math.fsum(vals), tuple(int(x) for x in load))


def _price(instance: Instance, li: int, duals: DualPrices, tol: float):
    line = instance.lines[li]
    lv = instance.line_values[li]
    if lv.passengers.size == 0:
        return None, 0.0
    w = lv.values - duals.lam[lv.passengers]
    sel = solve_capacitated_interval_selection(
        list(zip(lv.first.tolist(), lv.last.tolist())), w.tolist(),
        instance.capacity * line.frequency, len(line.route))
    if sel.objective <= duals.q[li] + duals.alpha * line.cost + tol or not sel.chosen:
        return None, sel.objective
    pids = [instance.passengers[j].id for j in lv.passengers[list(sel.chosen)]]
    return make_column(instance, line.id, pids), sel.objective


def separation_value(line_id: str, instance: Instance, duals: DualPrices) -> float:
    """Max over feasible sets S of ``sum_{p in S} (v_lp - lam_p)`` for one line."""
    return _price(instance, instance.line_index[line_id], duals, math.inf)[1]


def price_line(line_id: str, instance: Instance, duals: DualPrices,
               tol: float = PRICING_TOL) -> Column | None:
    """Return a column with positive reduced value, or None if no set of this line prices out."""
    return _price(instance, instance.line_index[line_id], duals, tol)[0]
