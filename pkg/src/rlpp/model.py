"""Instance data model, validation and plan evaluation.

An :class:`Instance` is network-free at its core: the solver only reads lines,
passengers and the sparse passenger-line value entries.  A road
:class:`Network` is optional and only needed to compute values
(:mod:`rlpp.values`), generate skeleton lines, or export geometries.

Sub-routes are stored as inclusive index ranges ``[first, last]`` into the
line's edge sequence, so every passenger occupies a contiguous block of edges.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import NotCoveredError

FEAS_TOL = 1e-6


@dataclass(frozen=True)
class Network:
    """Undirected road network with positive edge travel times.

    ``edges[k] = (u, v, tau)``; edge ids are positions in this tuple.
    ``coords[i] = (x, y)`` is only needed for geographic export.
    """

    n_nodes: int
    edges: tuple[tuple[int, int, float], ...]
    coords: tuple[tuple[float, float], ...] | None = None

    @cached_property
    def tau_min(self) -> float:
        return min((e[2] for e in self.edges), default=math.inf)

    @cached_property
    def _graph(self):
        # keep the cheapest of parallel edges; csr_matrix would sum duplicates
        best = {}
        for u, v, tau in self.edges:
            key = (min(u, v), max(u, v))
            if key not in best or tau < best[key]:
                best[key] = tau
        if not best:
            return csr_matrix((self.n_nodes, self.n_nodes))
        rows, cols = zip(*best)
        return csr_matrix((list(best.values()), (rows, cols)), shape=(self.n_nodes, self.n_nodes))

    @cached_property
    def _sp_cache(self) -> dict:
        return {}

    def _dijkstra(self, source: int):
        hit = self._sp_cache.get(source)
        if hit is None:
            dist, pred = dijkstra(self._graph, directed=False, indices=source, return_predecessors=True)
            hit = self._sp_cache[source] = (dist, pred)
        return hit

    def car_times(self, source: int) -> np.ndarray:
        """Shortest travel time from ``source`` to every node (inf if unreachable)."""
        return self._dijkstra(source)[0]

    def shortest_path(self, u: int, v: int) -> list[int] | None:
        """Node sequence of a shortest u-v path, or None when v is unreachable."""
        dist, pred = self._dijkstra(u)
        if not np.isfinite(dist[v]):
            return None
        path = [v]
        while path[-1] != u:
            path.append(int(pred[path[-1]]))
        return path[::-1]

    @cached_property
    def _edge_lookup(self) -> dict:
        lookup = {}
        for k, (u, v, tau) in enumerate(self.edges):
            for key in ((u, v), (v, u)):
                if key not in lookup or tau < self.edges[lookup[key]][2]:
                    lookup[key] = k
        return lookup

    def edge_between(self, u: int, v: int) -> int | None:
        return self._edge_lookup.get((u, v))

    def walk_nodes(self, route) -> list[int] | None:
        """Node sequence traversed by ``route``, or None if it is not a walk.

        A single-edge route is traversed in the edge's stored orientation.
        """
        if not route or any(not 0 <= k < len(self.edges) for k in route):
            return None
        u0, v0, _ = self.edges[route[0]]
        for start, cur in ((u0, v0), (v0, u0)):
            nodes = [start, cur]
            for k in route[1:]:
                a, b, _ = self.edges[k]
                if a == cur:
                    cur = b
                elif b == cur:
                    cur = a
                else:
                    break
                nodes.append(cur)
            else:
                return nodes
        return None

    def route_cost(self, route) -> float:
        return math.fsum(self.edges[k][2] for k in route)


@dataclass(frozen=True)
class Line:
    """A route (ordered edge ids) operated at an integer frequency."""

    id: str
    route: tuple[int, ...]
    cost: float
    frequency: int = 1
    start_time: float | None = None


@dataclass(frozen=True)
class Passenger:
    id: str
    source: int | None = None
    destination: int | None = None
    request_time: float | None = None


class ValueEntry(NamedTuple):
    """Value of matching ``passenger`` to ``line`` on edges ``first..last`` of its route."""

    passenger: str
    line: str
    value: float
    first: int
    last: int


class LineValues(NamedTuple):
    """Column-oriented view of the value entries of one line, by passenger index."""

    passengers: np.ndarray
    values: np.ndarray
    first: np.ndarray
    last: np.ndarray


@dataclass(frozen=True)
class Instance:
    lines: tuple[Line, ...]
    passengers: tuple[Passenger, ...]
    values: tuple[ValueEntry, ...]
    budget: float
    capacity: int
    network: Network | None = None
    max_route_cost: float | None = None
    metadata: dict = field(default_factory=dict)

    @cached_property
    def line_index(self) -> dict[str, int]:
        return {ln.id: i for i, ln in enumerate(self.lines)}

    @cached_property
    def passenger_index(self) -> dict[str, int]:
        return {p.id: j for j, p in enumerate(self.passengers)}

    @cached_property
    def c_max(self) -> float:
        return max((ln.cost for ln in self.lines), default=0.0)

    @cached_property
    def _entry_map(self) -> dict[tuple[str, str], ValueEntry]:
        return {(e.line, e.passenger): e for e in self.values}

    def entry(self, line_id: str, passenger_id: str) -> ValueEntry | None:
        return self._entry_map.get((line_id, passenger_id))

    def value(self, line_id: str, passenger_id: str) -> float:
        e = self._entry_map.get((line_id, passenger_id))
        return 0.0 if e is None else e.value

    @cached_property
    def line_values(self) -> tuple[LineValues, ...]:
        """Positive-value entries grouped per line (instance order), sorted by passenger."""
        buckets = defaultdict(list)
        li, pj = self.line_index, self.passenger_index
        for e in self.values:
            if e.value > 0:
                buckets[li[e.line]].append((pj[e.passenger], e.value, e.first, e.last))
        out = []
        for i in range(len(self.lines)):
            rows = sorted(buckets.get(i, ()))
            if rows:
                p, v, f, la = zip(*rows)
            else:
                p = v = f = la = ()
            out.append(LineValues(np.array(p, dtype=np.int64), np.array(v, dtype=float),
                                  np.array(f, dtype=np.int64), np.array(la, dtype=np.int64)))
        return tuple(out)

    @cached_property
    def _catalog(self) -> dict:
        table = {}
        for ln in sorted(self.lines, key=lambda ln: ln.id):
            table.setdefault((ln.route, ln.frequency), ln)
        return table

    def catalog_line(self, route, frequency) -> Line | None:
        """Lowest-id candidate line with this route and frequency, if any."""
        return self._catalog.get((tuple(route), frequency))


@dataclass(frozen=True)
class OpenLine:
    """An operated line in a plan.

    ``members`` lists the candidate lines merged into it (one unless aggregated).
    Each rider is ``(passenger id, line id)`` where the line id names the
    candidate line whose value entry (value and sub-route) applies.
    """

    members: tuple[str, ...]
    route: tuple[int, ...]
    frequency: int
    cost: float
    riders: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class LinePlan:
    lines: tuple[OpenLine, ...] = ()
    welfare: float = 0.0
    cost: float = 0.0
    within_budget: bool = True
    seed: int | None = None
    replication: int | None = None

    @property
    def assignment(self) -> dict[str, int]:
        """Passenger id -> index of the open line carrying them."""
        return {p: k for k, ol in enumerate(self.lines) for p, _ in ol.riders}

    @property
    def n_lines(self) -> int:
        return len(self.lines)


@dataclass(frozen=True)
class PlanCheck:
    welfare: float
    cost: float
    capacity_ok: bool
    single_line_ok: bool
    budget_ok: bool
    nonempty_ok: bool
    violations: tuple[str, ...] = ()

    @property
    def feasible(self) -> bool:
        return self.capacity_ok and self.single_line_ok and self.budget_ok


def welfare_of(instance: Instance, plan: LinePlan) -> PlanCheck:
    """Recompute welfare and cost of ``plan`` and re-verify its feasibility.

    Capacity is checked per edge of each open line against
    ``capacity * frequency``; every passenger may ride at most one line; the
    total cost of open lines must not exceed the budget.
    """
    lines_by_id = {ln.id: ln for ln in instance.lines}
    problems = []
    values, costs = [], []
    seen = defaultdict(int)
    capacity_ok = True
    nonempty_ok = True
    for k, ol in enumerate(plan.lines):
        for m in ol.members:
            if m not in lines_by_id:
                raise ValueError(f"plan line {k}: unknown line id {m!r}")
        costs.append(ol.cost)
        if not ol.riders:
            nonempty_ok = False
            problems.append(f"plan line {k}: no riders")
        usage = np.zeros(len(ol.route) + 1, dtype=np.int64)
        for pid, lid in ol.riders:
            if pid not in instance.passenger_index:
                raise ValueError(f"plan line {k}: unknown passenger id {pid!r}")
            src = lines_by_id.get(lid)
            if src is None:
                raise ValueError(f"plan line {k}: unknown line id {lid!r}")
            if lid not in ol.members and src.route != ol.route:
                raise ValueError(f"plan line {k}: rider {pid!r} uses line {lid!r} with a different route")
            e = instance.entry(lid, pid)
            if e is None or e.value <= 0:
                raise NotCoveredError(f"passenger {pid!r} is not covered by line {lid!r}")
            seen[pid] += 1
            values.append(e.value)
            usage[e.first] += 1
            usage[e.last + 1] -= 1
        load = np.cumsum(usage[:-1])
        limit = instance.capacity * ol.frequency
        if load.size and load.max() > limit:
            capacity_ok = False
            problems.append(f"plan line {k}: edge load {int(load.max())} exceeds capacity {limit}")
    single_ok = all(c == 1 for c in seen.values())
    if not single_ok:
        problems.append("some passenger rides more than one line")
    cost = math.fsum(costs)
    budget_ok = cost <= instance.budget + FEAS_TOL
    if not budget_ok:
        problems.append(f"cost {cost} exceeds budget {instance.budget}")
    return PlanCheck(math.fsum(values), cost, capacity_ok, single_ok, budget_ok, nonempty_ok, tuple(problems))


def validate_instance(instance: Instance) -> list[str]:
    """Return every invariant violation of ``instance``; an empty list means valid."""
    out = []
    net = instance.network
    if not (isinstance(instance.budget, (int, float)) and instance.budget >= 0):
        out.append(f"budget: B >= 0 required, got {instance.budget}")
    if not (isinstance(instance.capacity, int) and instance.capacity >= 1):
        out.append(f"capacity: C >= 1 required, got {instance.capacity}")

    if net is not None:
        if net.edges and not net.tau_min > 0:
            out.append("network: edge travel times must be positive")
        for k, (u, v, tau) in enumerate(net.edges):
            if not (0 <= u < net.n_nodes and 0 <= v < net.n_nodes):
                out.append(f"network.edges[{k}]: endpoint out of range")
        if net.coords is not None and len(net.coords) != net.n_nodes:
            out.append("network.coords: one coordinate pair per node required")

    line_ids = set()
    for i, ln in enumerate(instance.lines):
        where = f"lines[{i}] ({ln.id!r})"
        if ln.id in line_ids:
            out.append(f"{where}: duplicate line id")
        line_ids.add(ln.id)
        if not ln.route:
            out.append(f"{where}: empty route")
        if not (isinstance(ln.frequency, int) and ln.frequency >= 1):
            out.append(f"{where}: frequency must be an integer >= 1")
        if not ln.cost >= 0:
            out.append(f"{where}: cost must be >= 0")
        if net is not None and ln.route:
            if net.walk_nodes(ln.route) is None:
                out.append(f"{where}: route is not a walk of consecutive network edges")
            elif instance.max_route_cost is not None and net.route_cost(ln.route) > instance.max_route_cost:
                out.append(f"{where}: route cost exceeds D = {instance.max_route_cost}")

    pass_ids = set()
    for j, p in enumerate(instance.passengers):
        where = f"passengers[{j}] ({p.id!r})"
        if p.id in pass_ids:
            out.append(f"{where}: duplicate passenger id")
        pass_ids.add(p.id)
        if p.source is not None and p.source == p.destination:
            out.append(f"{where}: source equals destination")
        if net is not None:
            for end in (p.source, p.destination):
                if end is not None and not 0 <= end < net.n_nodes:
                    out.append(f"{where}: node {end} not in network")

    lines_by_id = {ln.id: ln for ln in instance.lines}
    pairs = set()
    for k, e in enumerate(instance.values):
        where = f"values[{k}]"
        if e.line not in lines_by_id:
            out.append(f"{where}: unknown line id {e.line!r}")
            continue
        if e.passenger not in pass_ids:
            out.append(f"{where}: unknown passenger id {e.passenger!r}")
            continue
        if (e.line, e.passenger) in pairs:
            out.append(f"{where}: duplicate entry for ({e.line!r}, {e.passenger!r})")
        pairs.add((e.line, e.passenger))
        if not (math.isfinite(e.value) and e.value >= 0):
            out.append(f"{where}: value must be finite and >= 0")
        n = len(lines_by_id[e.line].route)
        if not 0 <= e.first <= e.last < n:
            out.append(f"{where}: sub-route [{e.first}, {e.last}] outside route of {n} edges")

    out.extend(_same_route_violations(instance))
    return out


def _same_route_violations(instance: Instance) -> list[str]:
    groups = defaultdict(list)
    for ln in instance.lines:
        groups[ln.route].append(ln)
    covered = defaultdict(dict)
    for e in instance.values:
        if e.value > 0:
            covered[e.line][e.passenger] = e.value
    out = []
    for lines in groups.values():
        if len(lines) < 2:
            continue
        by_freq = defaultdict(list)
        for ln in lines:
            by_freq[ln.frequency].append(ln)
        for a in lines:
            for b in lines:
                if a.frequency < b.frequency:
                    if not a.cost < b.cost:
                        out.append(f"lines {a.id!r}, {b.id!r}: cost must be strictly increasing in frequency")
                    for pid, va in covered[a.id].items():
                        if va > covered[b.id].get(pid, 0.0):
                            out.append(f"passenger {pid!r}: value on {a.id!r} exceeds value on "
                                       f"higher-frequency line {b.id!r}")
                # a line may be paired with itself: c(2f) <= 2 c(f)
                if a.id <= b.id:
                    for c in by_freq.get(a.frequency + b.frequency, ()):
                        if c.cost > a.cost + b.cost + FEAS_TOL:
                            out.append(f"lines {a.id!r}, {b.id!r}, {c.id!r}: cost must be subadditive in frequency")
    return out
