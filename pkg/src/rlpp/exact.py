"""Exact oracles for small instances.

These enumerate instead of optimise and refuse to run past hard limits, so a
too-large instance fails loudly instead of hanging.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .errors import EnumerationLimitError
from .model import FEAS_TOL, Instance, LinePlan, OpenLine


@dataclass(frozen=True)
class Limits:
    max_lines: int = 12
    max_passengers: int = 12
    max_set_passengers: int = 15


@dataclass(frozen=True)
class ExactResult:
    welfare: float
    plan: LinePlan
    subsets: int
    nodes: int
    elapsed: float


class _Search:
    """Depth-first search for the best assignment to a fixed set of open lines."""

    def __init__(self, instance: Instance, open_idx):
        self.inst = instance
        lines = instance.lines
        opts = {}
        for i in open_idx:
            lv = instance.line_values[i]
            for j, v, a, b in zip(lv.passengers.tolist(), lv.values.tolist(), lv.first.tolist(), lv.last.tolist()):
                opts.setdefault(j, []).append((v, i, a, b))
        self.order = sorted(opts, key=lambda j: (-max(o[0] for o in opts[j]), j))
        self.opts = [sorted(opts[j], key=lambda o: (-o[0], o[1])) for j in self.order]
        # optimistic bound: sum of each remaining passenger's best value
        best = [o[0][0] for o in self.opts]
        self.tail = [math.fsum(best[k:]) for k in range(len(best) + 1)]
        self.load = {i: [0] * len(lines[i].route) for i in open_idx}
        self.limit = {i: instance.capacity * lines[i].frequency for i in open_idx}
        self.best = 0.0
        self.best_choice = [None] * len(self.order)
        self.choice = [None] * len(self.order)
        self.nodes = 0

    def run(self):
        self._dfs(0, 0.0)
        return self.best

    def _dfs(self, k, acc):
        self.nodes += 1
        if acc + self.tail[k] <= self.best:
            return
        if k == len(self.order):
            self.best = acc
            self.best_choice = list(self.choice)
            return
        for v, i, a, b in self.opts[k]:
            load = self.load[i]
            if all(load[e] < self.limit[i] for e in range(a, b + 1)):
                for e in range(a, b + 1):
                    load[e] += 1
                self.choice[k] = (i, v)
                self._dfs(k + 1, acc + v)
                for e in range(a, b + 1):
                    load[e] -= 1
        self.choice[k] = None
        self._dfs(k + 1, acc)

    def plan(self) -> LinePlan:
        inst = self.inst
        riders = {}
        for k, ch in enumerate(self.best_choice):
            if ch is not None:
                riders.setdefault(ch[0], []).append(self.order[k])
        open_lines = []
        for i in sorted(riders, key=lambda i: inst.lines[i].id):
            ln = inst.lines[i]
            rs = tuple((inst.passengers[j].id, ln.id) for j in sorted(riders[i]))
            open_lines.append(OpenLine((ln.id,), ln.route, ln.frequency, ln.cost, rs))
        welfare = math.fsum(inst.value(l, p) for ol in open_lines for p, l in ol.riders)
        cost = math.fsum(ol.cost for ol in open_lines)
        return LinePlan(tuple(open_lines), welfare, cost, cost <= inst.budget + FEAS_TOL)


def _best_assignment(instance: Instance, open_idx, limits: Limits) -> _Search:
    search = _Search(instance, open_idx)
    if len(search.order) > limits.max_passengers:
        raise EnumerationLimitError(
            f"{len(search.order)} covered passengers exceed the limit of {limits.max_passengers}")
    search.run()
    return search


def welfare_oracle_w(instance: Instance, open_lines, limits: Limits = Limits()) -> float:
    """Welfare of the best assignment when exactly ``open_lines`` (ids) are open."""
    idx = sorted({instance.line_index[l] for l in open_lines})
    if len(idx) > limits.max_lines:
        raise EnumerationLimitError(f"{len(idx)} open lines exceed the limit of {limits.max_lines}")
    return _best_assignment(instance, idx, limits).plan().welfare


def brute_force_opt(instance: Instance, limits: Limits = Limits()) -> ExactResult:
    """Optimal welfare over all budget-feasible line sets.

    Since the welfare of the best assignment can only grow when lines are
    added, only maximal budget-feasible sets of covering lines are searched.
    """
    L, N = len(instance.lines), len(instance.passengers)
    if L > limits.max_lines or N > limits.max_passengers:
        raise EnumerationLimitError(
            f"instance with L={L}, N={N} exceeds limits L<={limits.max_lines}, N<={limits.max_passengers}")
    t0 = time.perf_counter()
    useful = [i for i in range(L) if instance.line_values[i].passengers.size]
    costs = [instance.lines[i].cost for i in useful]
    budget = instance.budget + FEAS_TOL
    best, best_plan, subsets, nodes = -1.0, LinePlan(), 0, 0
    for mask in range(1 << len(useful)):
        chosen = [k for k in range(len(useful)) if mask >> k & 1]
        spend = math.fsum(costs[k] for k in chosen)
        if spend > budget:
            continue
        subsets += 1
        if any(not mask >> k & 1 and spend + costs[k] <= budget for k in range(len(useful))):
            continue
        search = _best_assignment(instance, [useful[k] for k in chosen], limits)
        nodes += search.nodes
        plan = search.plan()
        if plan.welfare > best:
            best, best_plan = plan.welfare, plan
    return ExactResult(best_plan.welfare, best_plan, subsets, nodes, time.perf_counter() - t0)


def enumerate_feasible_sets(instance: Instance, line_id: str, limits: Limits = Limits()) -> list[tuple[str, ...]]:
    """All non-empty capacity-feasible sets of passengers covered by the line.

    Sets are listed by size, then in instance passenger order.
    """
    i = instance.line_index[line_id]
    line = instance.lines[i]
    lv = instance.line_values[i]
    n = lv.passengers.size
    if n > limits.max_set_passengers:
        raise EnumerationLimitError(f"line {line_id!r} covers {n} passengers, limit {limits.max_set_passengers}")
    cap = instance.capacity * line.frequency
    spans = [range(a, b + 1) for a, b in zip(lv.first.tolist(), lv.last.tolist())]
    out = []
    for size in range(1, n + 1):
        for combo in combinations(range(n), size):
            load = [0] * len(line.route)
            ok = True
            for k in combo:
                for e in spans[k]:
                    load[e] += 1
                    if load[e] > cap:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                out.append(tuple(instance.passengers[lv.passengers[k]].id for k in combo))
    return out


@dataclass(frozen=True)
class ConfigLPResult:
    objective: float
    columns: tuple[tuple[str, tuple[str, ...]], ...]
    weights: tuple[float, ...]


def config_lp_full(instance: Instance, eps: float, limits: Limits = Limits()) -> ConfigLPResult:
    """Configuration LP with budget ``B (1 - eps)`` over every feasible set of every line."""
    columns = [(ln.id, s) for ln in instance.lines for s in enumerate_feasible_sets(instance, ln.id, limits)]
    if not columns:
        return ConfigLPResult(0.0, (), ())
    pos = instance.passenger_index
    lpos = instance.line_index
    n_l, n_p = len(instance.lines), len(instance.passengers)
    A = np.zeros((1 + n_l + n_p, len(columns)))
    obj = np.zeros(len(columns))
    for k, (lid, s) in enumerate(columns):
        A[0, k] = instance.lines[lpos[lid]].cost
        A[1 + lpos[lid], k] = 1.0
        for p in s:
            A[1 + n_l + pos[p], k] = 1.0
        obj[k] = math.fsum(instance.value(lid, p) for p in s)
    b = np.ones(A.shape[0])
    b[0] = instance.budget * (1 - eps)
    res = linprog(-obj, A_ub=A, b_ub=b, bounds=(0, 1), method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"full configuration LP failed: {res.message}")
    return ConfigLPResult(float(-res.fun), tuple(columns), tuple(float(x) for x in res.x))
