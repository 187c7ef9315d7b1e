"""Instance generators.

* :func:`gen_synthetic` draws value-matrix-only instances (route lengths,
  coverage, values and sub-routes drawn directly, no road network).
* :func:`gen_skeleton_lines` builds candidate lines on a network by chaining
  shortest paths through random waypoints; :func:`gen_network_instance` wires
  it to a grid network, random trip requests and computed values.
* ``gen_gadget_*`` build the small counterexample instances used as
  regression fixtures.

All randomness comes from :func:`rlpp.rng.make_rng`; outputs are pure
functions of the parameters and the seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ResampleLimitError
from .model import Instance, Line, Network, Passenger, ValueEntry
from .rng import PASSENGERS, SKELETON, SMALL_RANDOM, SYNTHETIC, make_rng
from .values import DetourValue, build_value_entries


def _ids(prefix, n):
    width = max(1, len(str(max(n - 1, 0))))
    return [f"{prefix}{i:0{width}d}" for i in range(n)]


@dataclass(frozen=True)
class SyntheticParams:
    L: int
    N: int
    budget: float
    capacity: int = 30
    min_route_edges: int = 5
    max_route_edges: int = 50
    coverage: float = 0.1
    value_low: float = 0.0
    value_high: float = 1.0
    line_cost: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.L < 1 or self.N < 1 or self.capacity < 1:
            raise ValueError("L, N and capacity must be positive")
        if not 1 <= self.min_route_edges <= self.max_route_edges:
            raise ValueError("route length range must satisfy 1 <= min <= max")
        if not 0 <= self.coverage <= 1:
            raise ValueError("coverage probability must lie in [0, 1]")
        if not self.value_low <= self.value_high:
            raise ValueError("value range is empty")


def gen_synthetic(params: SyntheticParams) -> Instance:
    """Value-matrix-only instance with independently covered (line, passenger) pairs.

    Line ``k`` draws from its own stream ``(seed, SYNTHETIC, k)``: a route
    length, then a coverage mask over all passengers, then for covered pairs a
    value, a sub-route start (uniform) and a sub-route length (uniform over
    the lengths that fit).  Values are drawn on the half-open interval
    ``(low, high]`` so covered pairs have positive value when ``low = 0``.
    Edge ids are global: line ``k`` owns a block of fresh ids, so no two
    lines share an edge.
    """
    P = params
    line_ids, pass_ids = _ids("l", P.L), _ids("p", P.N)
    lines, values = [], []
    next_edge = 0
    for k in range(P.L):
        rng = make_rng(P.seed, SYNTHETIC, k)
        n_edges = int(rng.integers(P.min_route_edges, P.max_route_edges + 1))
        route = tuple(range(next_edge, next_edge + n_edges))
        next_edge += n_edges
        lines.append(Line(line_ids[k], route, float(P.line_cost)))
        covered = np.flatnonzero(rng.random(P.N) < P.coverage)
        m = covered.size
        vals = P.value_high - (P.value_high - P.value_low) * rng.random(m)
        first = rng.integers(0, n_edges, size=m)
        length = rng.integers(1, n_edges - first + 1)
        for j, v, a, ln in zip(covered.tolist(), vals.tolist(), first.tolist(), length.tolist()):
            values.append(ValueEntry(pass_ids[j], line_ids[k], v, a, a + ln - 1))
    passengers = tuple(Passenger(p) for p in pass_ids)
    return Instance(tuple(lines), passengers, tuple(values), float(P.budget), int(P.capacity),
                    metadata={"generator": "synthetic", "seed": P.seed})


def gen_skeleton_lines(network: Network, L: int, max_cost: float, seed: int = 0,
                       waypoints: int = 4, cost_per_time: float = 1.0,
                       max_resample: int = 1000) -> list[Line]:
    """``L`` frequency-1 lines, each the chained shortest paths through random waypoints.

    Waypoints are distinct nodes drawn uniformly.  Routes costing more than
    ``max_cost`` (or with an unreachable waypoint) are redrawn, at most
    ``max_resample`` times per line.  Line cost is ``cost_per_time`` times the
    route travel time.
    """
    if L < 0:
        raise ValueError("L must be non-negative")
    if waypoints < 2 or waypoints > network.n_nodes:
        raise ValueError(f"need 2 <= waypoints <= {network.n_nodes}")
    ids = _ids("l", L)
    lines = []
    for k in range(L):
        rng = make_rng(seed, SKELETON, k)
        for _ in range(max_resample):
            nodes = rng.choice(network.n_nodes, size=waypoints, replace=False).tolist()
            route = _chain(network, nodes)
            if route and network.route_cost(route) <= max_cost:
                break
        else:
            raise ResampleLimitError(f"line {k}: no route within cost {max_cost} after {max_resample} draws")
        lines.append(Line(ids[k], tuple(route), cost_per_time * network.route_cost(route)))
    return lines


def _chain(network: Network, waypoints):
    route = []
    for u, v in zip(waypoints[:-1], waypoints[1:]):
        path = network.shortest_path(u, v)
        if path is None:
            return None
        route += [network.edge_between(a, b) for a, b in zip(path[:-1], path[1:])]
    return route


def gen_grid_network(rows: int, cols: int, spacing: float = 1.0) -> Network:
    """4-neighbour grid; node ``r * cols + c`` sits at ``(c * spacing, r * spacing)``."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, float(spacing)))
            if r + 1 < rows:
                edges.append((v, v + cols, float(spacing)))
    coords = tuple((c * spacing, r * spacing) for r in range(rows) for c in range(cols))
    return Network(rows * cols, tuple(edges), coords)


def gen_network_instance(rows: int, cols: int, L: int, N: int, budget: float, capacity: int = 30,
                         max_cost: float | None = None, beta: float = 3.0, seed: int = 0,
                         cost_per_time: float = 1.0) -> Instance:
    """Grid network, skeleton lines, random trip requests and detour-bounded values."""
    net = gen_grid_network(rows, cols)
    max_cost = float(rows + cols) * 2 if max_cost is None else max_cost
    lines = gen_skeleton_lines(net, L, max_cost, seed, cost_per_time=cost_per_time)
    rng = make_rng(seed, PASSENGERS)
    passengers = []
    for pid in _ids("p", N):
        s, d = rng.choice(net.n_nodes, size=2, replace=False).tolist()
        passengers.append(Passenger(pid, s, d))
    values = build_value_entries(net, lines, passengers, DetourValue(beta))
    return Instance(tuple(lines), tuple(passengers), tuple(values), float(budget), capacity, net, max_cost,
                    metadata={"generator": "grid", "seed": seed, "beta": beta})


def gen_random_small(seed: int, max_lines: int = 8, max_passengers: int = 10, max_capacity: int = 2,
                     coverage: float = 0.5, multi_frequency: bool = False) -> Instance:
    """Small random instance for oracle comparisons.

    Routes have 1 to 5 edges, costs are drawn from [1, 3] and the budget lets
    roughly a third to two thirds of the total line cost be spent.  With
    ``multi_frequency`` some routes also appear at frequencies 2 and 3, with
    strictly increasing subadditive costs and values non-decreasing in
    frequency.
    """
    rng = make_rng(seed, SMALL_RANDOM)
    n_lines = int(rng.integers(1, max_lines + 1))
    n_pass = int(rng.integers(1, max_passengers + 1))
    cap = int(rng.integers(1, max_capacity + 1))
    pids = _ids("p", n_pass)
    base = []
    next_edge = 0
    while len(base) < n_lines:
        n_edges = int(rng.integers(1, 6))
        route = tuple(range(next_edge, next_edge + n_edges))
        next_edge += n_edges
        cost = float(rng.uniform(1.0, 3.0))
        freqs = [1]
        if multi_frequency and rng.random() < 0.6:
            freqs = [1, 2] if rng.random() < 0.5 else [1, 2, 3]
        freqs = freqs[: n_lines - len(base)]
        entries = {}
        for j in range(n_pass):
            if rng.random() < coverage:
                a = int(rng.integers(0, n_edges))
                b = int(rng.integers(a, n_edges))
                entries[j] = (float(1.0 - rng.random()), a, b)
        scale = 1.0
        for f in freqs:
            # cost grows by less than one base cost per extra frequency: increasing and subadditive
            c = cost * (1 + 0.7 * (f - 1))
            base.append((route, f, c, {j: (v * scale, a, b) for j, (v, a, b) in entries.items()}))
            scale *= 1.0 + float(rng.uniform(0.0, 0.3))
    lids = _ids("l", len(base))
    lines, values = [], []
    for lid, (route, f, c, entries) in zip(lids, base):
        lines.append(Line(lid, route, c, f))
        values += [ValueEntry(pids[j], lid, v, a, b) for j, (v, a, b) in sorted(entries.items())]
    total = sum(ln.cost for ln in lines)
    budget = float(total * rng.uniform(0.3, 0.7))
    return Instance(tuple(lines), tuple(Passenger(p) for p in pids), tuple(values), budget, cap,
                    metadata={"generator": "small", "seed": seed})


def gen_gadget_integrality_gap(eps_gap: float = 0.5) -> Instance:
    """Two disjoint lines of unit cost, each valuable to one passenger, budget ``2 - eps_gap``."""
    if not 0 < eps_gap < 1:
        raise ValueError("eps_gap must lie in (0, 1)")
    lines = (Line("l1", (0,), 1.0), Line("l2", (1,), 1.0))
    passengers = (Passenger("p1"), Passenger("p2"))
    values = (ValueEntry("p1", "l1", 1.0, 0, 0), ValueEntry("p2", "l2", 1.0, 0, 0))
    return Instance(lines, passengers, values, 2.0 - eps_gap, 1,
                    metadata={"gadget": "integrality-gap", "eps_gap": eps_gap})


def gen_gadget_nonsubmodular() -> Instance:
    """Three lines and three passengers on which the best-assignment welfare is not submodular.

    ``l1`` has two edges: p1 rides the first, p2 the second and p3 both.
    p1 also values ``l2`` and p2 also values ``l3``.  C = 1, all values 1.
    """
    lines = (Line("l1", (0, 1), 1.0), Line("l2", (2,), 1.0), Line("l3", (3,), 1.0))
    passengers = (Passenger("p1"), Passenger("p2"), Passenger("p3"))
    values = (
        ValueEntry("p1", "l1", 1.0, 0, 0),
        ValueEntry("p2", "l1", 1.0, 1, 1),
        ValueEntry("p3", "l1", 1.0, 0, 1),
        ValueEntry("p1", "l2", 1.0, 0, 0),
        ValueEntry("p2", "l3", 1.0, 0, 0),
    )
    return Instance(lines, passengers, values, 3.0, 1, metadata={"gadget": "nonsubmodular"})


def gen_gadget_trip_optimality(n: int = 5) -> Instance:
    """One line over ``n - 1`` edges whose ``n - 1`` passengers all ride the full route; C = 1.

    Riding a single edge would be worth 1/2 to each passenger, but only the
    best option (the full route, value 1) is an entry, so one passenger fits.
    The metadata records the single-edge values and the resulting lower bound
    ``(n - 1) / 2`` on the optimum when any sub-route may be used.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    m = n - 1
    pids = _ids("p", m)
    line = Line("l1", tuple(range(m)), 1.0)
    values = tuple(ValueEntry(p, "l1", 1.0, 0, m - 1) for p in pids)
    meta = {"gadget": "trip-optimality", "n": n, "single_edge_value": 0.5,
            "any_subroute_lower_bound": m / 2}
    return Instance((line,), tuple(Passenger(p) for p in pids), values, 1.0, 1, metadata=meta)
