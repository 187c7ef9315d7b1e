"""Column generation for the configuration LP with a tightened budget.

The master LP has one variable per column ``(line, S)``::

    max  sum_c welfare_c X_c
    s.t. sum_c cost_line(c) X_c <= B (1 - eps)       (budget, dual alpha)
         sum_{c on line l} X_c  <= 1   for every l   (dual q_l)
         sum_{c containing p} X_c <= 1 for every p   (dual lam_p)
         X >= 0

Restricted masters are solved with the HiGHS interior-point solver (with
crossover, so duals are basic) through ``scipy.optimize.linprog``;
new columns come from :func:`rlpp.pricing.price_line`.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csc_matrix

from .model import FEAS_TOL, Instance
from .pricing import PRICING_TOL, Column, DualPrices, _price

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MasterSolution:
    weights: np.ndarray
    duals: DualPrices
    objective: float


@dataclass(frozen=True)
class FractionalSolution:
    columns: tuple[Column, ...]
    weights: tuple[float, ...]
    objective: float
    duals: DualPrices
    eps: float
    converged: bool
    iterations: int
    elapsed: float
    history: tuple[float, ...] = field(default=(), compare=False)

    def support(self, tol: float = 0.0):
        """Columns with weight above ``tol``, with their weights, in insertion order."""
        return [(c, w) for c, w in zip(self.columns, self.weights) if w > tol]


class MasterLPError(RuntimeError):
    pass


def restricted_master_solve(columns, instance: Instance, eps: float) -> MasterSolution:
    """Solve the master LP over ``columns`` and return weights, duals and objective."""
    if not 0 <= eps <= 1:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")
    n_lines, n_pass = len(instance.lines), len(instance.passengers)
    if not columns:
        return MasterSolution(np.zeros(0), DualPrices.zeros(instance), 0.0)

    li, pj = instance.line_index, instance.passenger_index
    rows, cols, data = [], [], []
    for k, col in enumerate(columns):
        i = li[col.line]
        rows += [0, 1 + i]
        cols += [k, k]
        data += [instance.lines[i].cost, 1.0]
        for p in col.passengers:
            rows.append(1 + n_lines + pj[p])
            cols.append(k)
            data.append(1.0)
    A = csc_matrix((data, (rows, cols)), shape=(1 + n_lines + n_pass, len(columns)))
    b = np.ones(1 + n_lines + n_pass)
    b[0] = instance.budget * (1.0 - eps)
    c = -np.array([col.welfare for col in columns])
    res = linprog(c, A_ub=A, b_ub=b, bounds=(0, None), method="highs-ipm")
    if res.status != 0:
        raise MasterLPError(f"restricted master failed with {len(columns)} columns: {res.message}")
    y = np.maximum(-res.ineqlin.marginals, 0.0)
    duals = DualPrices(float(y[0]), y[1:1 + n_lines].copy(), y[1 + n_lines:].copy())
    x = np.clip(res.x, 0.0, 1.0)
    return MasterSolution(x, duals, float(-res.fun))


def check_fractional(columns, weights, instance: Instance, eps: float, tol: float = FEAS_TOL) -> list[str]:
    """Violations of the budget, one-set-per-line and one-line-per-passenger rows."""
    out = []
    cost = {ln.id: ln.cost for ln in instance.lines}
    spend = math.fsum(cost[c.line] * w for c, w in zip(columns, weights))
    if spend > instance.budget * (1 - eps) + tol:
        out.append(f"budget row: {spend} > {instance.budget * (1 - eps)}")
    per_line, per_pass = {}, {}
    for c, w in zip(columns, weights):
        if w < -tol:
            out.append(f"negative weight {w} on a column of line {c.line!r}")
        per_line[c.line] = per_line.get(c.line, 0.0) + w
        for p in c.passengers:
            per_pass[p] = per_pass.get(p, 0.0) + w
    out += [f"line {l!r}: total weight {s}" for l, s in per_line.items() if s > 1 + tol]
    out += [f"passenger {p!r}: total weight {s}" for p, s in per_pass.items() if s > 1 + tol]
    return out


def solve_config_lp(instance: Instance, eps: float = 0.05, time_budget: float = 60.0,
                    tol: float = PRICING_TOL, max_iterations: int | None = None,
                    callback=None) -> FractionalSolution:
    """Column generation until no line prices out or the time budget runs out.

    Starts from one column per line, the best set at zero duals.  Each round
    re-solves the restricted master and adds the violated column of every line.
    ``callback(iteration, columns, master_solution)`` is called after every
    master solve.  On timeout the current master solution is returned with
    ``converged=False``.
    """
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    if not time_budget > 0:
        raise ValueError("time_budget must be positive")
    t0 = time.perf_counter()
    deadline = t0 + time_budget

    zero = DualPrices.zeros(instance)
    pool, keys = [], set()
    for i in range(len(instance.lines)):
        col, _ = _price(instance, i, zero, tol)
        if col is not None:
            pool.append(col)
            keys.add((col.line, col.passengers))

    history = []
    iteration = 0
    converged = False
    while True:
        ms = restricted_master_solve(pool, instance, eps)
        solved = tuple(pool)
        iteration += 1
        history.append(ms.objective)
        if callback is not None:
            callback(iteration, solved, ms)
        log.debug("iteration %d: %d columns, objective %.9g", iteration, len(pool), ms.objective)
        if max_iterations is not None and iteration >= max_iterations:
            break
        added, violated, timed_out = 0, 0, False
        for i in range(len(instance.lines)):
            if time.perf_counter() > deadline:
                timed_out = True
                break
            col, _ = _price(instance, i, ms.duals, tol)
            if col is None:
                continue
            violated += 1
            key = (col.line, col.passengers)
            if key not in keys:
                keys.add(key)
                pool.append(col)
                added += 1
        if timed_out:
            break
        if violated == 0:
            converged = True
            break
        if added == 0:
            # every violated column is already in the pool: reduced values are numerical noise
            log.warning("pricing returned only known columns at iteration %d; stopping", iteration)
            converged = True
            break
        if time.perf_counter() > deadline:
            break

    return FractionalSolution(
        columns=solved, weights=tuple(float(w) for w in ms.weights), objective=ms.objective,
        duals=ms.duals, eps=eps, converged=converged, iterations=iteration,
        elapsed=time.perf_counter() - t0, history=tuple(history))
