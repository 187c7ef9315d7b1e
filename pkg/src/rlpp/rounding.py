"""Randomized rounding of a fractional configuration-LP solution.

One replication:

1. rounding -- independently per line, pick column ``S`` with probability
   ``X_lS`` (cumulative weights in column insertion order, residual mass means
   no column);
2. re-assignment -- a passenger picked by several lines keeps the line with
   the largest value (ties to the lower line id); lines left empty close;
3. aggregation -- open lines sharing a route merge into one line whose
   frequency is the sum of theirs.

Replication ``i`` draws from ``make_rng(seed, ROUNDING, i)``, so a batch of
replications gives the same results however it is split across workers.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .master import FractionalSolution
from .model import FEAS_TOL, Instance, LinePlan, OpenLine
from .rng import ROUNDING, make_rng

DEFAULT_EPS = 0.05
DEFAULT_M = 10_000


@dataclass(frozen=True)
class RoundingStats:
    m: int
    alpha: float
    best_welfare: float | None
    eta: float | None
    mean_cost: float
    mean_welfare: float
    best_replication: int | None
    welfares: np.ndarray = field(repr=False, compare=False)
    costs: np.ndarray = field(repr=False, compare=False)

    @property
    def welfare_sem(self) -> float:
        return float(self.welfares.std(ddof=1) / math.sqrt(self.m)) if self.m > 1 else 0.0

    @property
    def cost_sem(self) -> float:
        return float(self.costs.std(ddof=1) / math.sqrt(self.m)) if self.m > 1 else 0.0


class Rounder:
    """Pre-processed fractional solution; ``roll``/``plan`` run single replications."""

    def __init__(self, fractional: FractionalSolution, instance: Instance):
        self.instance = instance
        self.fractional = fractional
        by_line = defaultdict(list)
        for col, w in fractional.support():
            by_line[col.line].append((col, w))
        self.line_ids = sorted(by_line)
        self.choices = []
        for lid in self.line_ids:
            cols = by_line[lid]
            cum = np.cumsum([w for _, w in cols]).tolist()
            self.choices.append(([c for c, _ in cols], cum))
        self.lines = {ln.id: ln for ln in instance.lines}
        self.porder = instance.passenger_index

    def roll(self, rng):
        """Rounding step: the column picked for each line (lines without a pick are omitted)."""
        u = rng.random(len(self.line_ids))
        picked = {}
        for k, (cols, cum) in enumerate(self.choices):
            j = bisect_right(cum, u[k])
            if j < len(cols):
                picked[self.line_ids[k]] = cols[j]
        return picked

    def reassign(self, picked) -> LinePlan:
        """Re-assignment step; returns the plan before aggregation."""
        inst = self.instance
        best = {}
        for lid in sorted(picked):
            for p in picked[lid].passengers:
                v = inst.value(lid, p)
                if p not in best or v > best[p][1]:
                    best[p] = (lid, v)
        riders = defaultdict(list)
        for p, (lid, _) in best.items():
            riders[lid].append(p)
        open_lines = []
        for lid in sorted(riders):
            ln = self.lines[lid]
            rs = sorted(riders[lid], key=self.porder.__getitem__)
            open_lines.append(OpenLine((lid,), ln.route, ln.frequency, ln.cost, tuple((p, lid) for p in rs)))
        return self._finish(open_lines)

    def _finish(self, open_lines, seed=None, replication=None) -> LinePlan:
        inst = self.instance
        welfare = math.fsum(inst.value(l, p) for ol in open_lines for p, l in ol.riders)
        cost = math.fsum(ol.cost for ol in open_lines)
        return LinePlan(tuple(open_lines), welfare, cost, cost <= inst.budget + FEAS_TOL, seed, replication)

    def plan(self, seed: int, replication: int) -> LinePlan:
        pre = self.reassign(self.roll(make_rng(seed, ROUNDING, replication)))
        post = aggregate(pre, self.instance)
        return LinePlan(post.lines, post.welfare, post.cost, post.within_budget, seed, replication)

    def outcome(self, seed: int, replication: int) -> tuple[float, float]:
        p = self.plan(seed, replication)
        return p.welfare, p.cost


def aggregate(plan: LinePlan, instance: Instance) -> LinePlan:
    """Merge open lines that share a route into one line with the summed frequency.

    Lines are folded in id order.  The merged line costs what the instance's
    candidate line with that route and frequency costs, or the sum of the
    merged costs when no such candidate exists.  A rider moves to the
    candidate line's value entry when it covers the same sub-route with at
    least the same value; otherwise the rider keeps their original entry.
    """
    groups = defaultdict(list)
    for ol in plan.lines:
        groups[ol.route].append(ol)
    merged = []
    for route, group in groups.items():
        if len(group) == 1:
            merged.append(group[0])
            continue
        group = sorted(group, key=lambda ol: ol.members)
        acc = group[0]
        for nxt in group[1:]:
            freq = acc.frequency + nxt.frequency
            cand = instance.catalog_line(route, freq)
            cost = cand.cost if cand is not None else acc.cost + nxt.cost
            acc = OpenLine(acc.members + nxt.members, route, freq, cost, acc.riders + nxt.riders)
        cand = instance.catalog_line(route, acc.frequency)
        if cand is not None:
            riders = []
            for p, lid in acc.riders:
                old, new = instance.entry(lid, p), instance.entry(cand.id, p)
                if (new is not None and (new.first, new.last) == (old.first, old.last)
                        and new.value >= old.value):
                    lid = cand.id
                riders.append((p, lid))
            acc = OpenLine(acc.members, route, acc.frequency, acc.cost, tuple(riders))
        order = instance.passenger_index
        acc = OpenLine(acc.members, route, acc.frequency, acc.cost,
                       tuple(sorted(acc.riders, key=lambda r: order[r[0]])))
        merged.append(acc)
    merged.sort(key=lambda ol: ol.members)
    welfare = math.fsum(instance.value(l, p) for ol in merged for p, l in ol.riders)
    cost = math.fsum(ol.cost for ol in merged)
    return LinePlan(tuple(merged), welfare, cost, cost <= instance.budget + FEAS_TOL, plan.seed, plan.replication)


def round_once(fractional: FractionalSolution, instance: Instance, seed: int,
               replication: int = 0) -> LinePlan:
    """One rounding, re-assignment and aggregation pass."""
    return Rounder(fractional, instance).plan(seed, replication)


def _outcomes(args):
    rounder, seed, lo, hi = args
    out = np.empty((hi - lo, 2))
    for k, i in enumerate(range(lo, hi)):
        out[k] = rounder.outcome(seed, i)
    return out


def replicate(fractional: FractionalSolution, instance: Instance, m: int, seed: int,
              workers: int = 1, rounder: Rounder | None = None) -> np.ndarray:
    """``(m, 2)`` array of (welfare, cost) for replications ``0 .. m-1``."""
    rounder = rounder or Rounder(fractional, instance)
    if workers <= 1 or m < 2 * workers:
        return _outcomes((rounder, seed, 0, m))
    bounds = np.linspace(0, m, workers + 1).astype(int)
    chunks = [(rounder, seed, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(workers) as pool:
        return np.concatenate(list(pool.map(_outcomes, chunks)))


def best_of_m(fractional: FractionalSolution, instance: Instance, m: int = DEFAULT_M,
              seed: int = 0, workers: int = 1):
    """Run ``m`` replications and keep the best plan whose cost is within the budget.

    Returns ``(plan, stats)``; ``plan`` is None when no replication respects
    the budget.  Ties in welfare go to the lowest replication index.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rounder = Rounder(fractional, instance)
    out = replicate(fractional, instance, m, seed, workers, rounder)
    welfares, costs = out[:, 0], out[:, 1]
    ok = costs <= instance.budget + FEAS_TOL
    best_plan, best_idx, best_w, eta = None, None, None, None
    if ok.any():
        best_idx = int(np.flatnonzero(ok)[np.argmax(welfares[ok])])
        best_plan = rounder.plan(seed, best_idx)
        best_w = best_plan.welfare
        if fractional.objective > 0:
            eta = best_w / fractional.objective
    stats = RoundingStats(m=m, alpha=float(ok.mean()), best_welfare=best_w, eta=eta,
                          mean_cost=float(costs.mean()), mean_welfare=float(welfares.mean()),
                          best_replication=best_idx, welfares=welfares, costs=costs)
    return best_plan, stats


def budget_tail_check(fractional: FractionalSolution, instance: Instance, m: int, delta: float,
                      seed: int = 0, workers: int = 1) -> float:
    """Fraction of replications whose cost exceeds ``B (1 - eps) (1 + delta)``."""
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    costs = replicate(fractional, instance, m, seed, workers)[:, 1]
    threshold = instance.budget * (1 - fractional.eps) * (1 + delta)
    return float((costs > threshold).mean())


def chernoff_bound(instance: Instance, eps: float, delta: float) -> float:
    """``exp(-delta^2 (1 - eps) B / (3 c_max))``, the tail bound on exceeding ``B(1-eps)(1+delta)``."""
    if instance.c_max <= 0:
        return 0.0
    return math.exp(-delta ** 2 * (1 - eps) * instance.budget / (3 * instance.c_max))
