"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (printed in the pytest terminal summary)
before asserting.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from rlpp import (SyntheticParams, best_of_m, brute_force_opt, config_lp_full, gen_gadget_integrality_gap,
                  gen_gadget_nonsubmodular, gen_gadget_trip_optimality, gen_random_small, gen_synthetic,
                  save_instance, solve_capacitated_interval_selection, solve_config_lp, welfare_of,
                  welfare_oracle_w)
from rlpp.rng import make_rng
from rlpp.rounding import Rounder, aggregate, replicate

from oracles import best_subset

EPS = 0.05
N_INSTANCES = 100
M = 10_000


@pytest.fixture(scope="module")
def small_instances():
    return [gen_random_small(seed, max_lines=8, max_passengers=10, max_capacity=2) for seed in range(N_INSTANCES)]


@pytest.fixture(scope="module")
def solved(small_instances):
    """Converged column-generation solution and wall time per instance."""
    out = []
    for inst in small_instances:
        t0 = time.perf_counter()
        frac = solve_config_lp(inst, EPS)
        out.append((frac, time.perf_counter() - t0))
    return out


@pytest.fixture(scope="module")
def replications(small_instances, solved):
    """(welfare, cost) of M replications per instance, shared by criteria 3 and 4."""
    return [replicate(frac, inst, M, seed=k) for k, (inst, (frac, _)) in enumerate(zip(small_instances, solved))]


def test_1_pricing_oracle_equivalence(record_criterion):
    rng = np.random.default_rng(20240101)
    mismatches = 0
    elapsed = 0.0
    for _ in range(200):
        n_edges = int(rng.integers(1, 11))
        k = int(rng.integers(1, 13))
        K = int(rng.integers(1, 4))
        first = rng.integers(0, n_edges, size=k)
        last = first + rng.integers(0, n_edges - first)
        iv = list(zip(first.tolist(), last.tolist()))
        # reduced values: value minus a passenger dual, as in column generation
        w = (rng.random(k) - rng.uniform(0, 0.6, size=k)).tolist()
        t0 = time.perf_counter()
        sel = solve_capacitated_interval_selection(iv, w, K, n_edges)
        elapsed += time.perf_counter() - t0
        mismatches += sel.objective != best_subset(iv, w, K, n_edges)
    ok = mismatches == 0 and elapsed < 10
    record_criterion(1, "pricing oracle equals exhaustive subset maximum (200 problems)", ok,
                     f"mismatches={mismatches}, solver time={elapsed:.2f}s")
    assert ok


def test_2_column_generation_exactness(record_criterion, small_instances, solved):
    worst, not_converged = 0.0, 0
    t_full = 0.0
    for inst, (frac, _) in zip(small_instances, solved):
        t0 = time.perf_counter()
        full = config_lp_full(inst, EPS)
        t_full += time.perf_counter() - t0
        worst = max(worst, abs(frac.objective - full.objective))
        not_converged += not frac.converged
    t_cg = sum(t for _, t in solved)
    ok = worst <= 1e-6 and not_converged == 0 and t_cg < 60
    record_criterion(2, "column generation equals full-enumeration LP (100 instances)", ok,
                     f"max |diff|={worst:.2e}, unconverged={not_converged}, "
                     f"column generation {t_cg:.2f}s, full LP {t_full:.2f}s")
    assert ok


def test_3_approximation_guarantee(record_criterion, small_instances, solved, replications):
    ratio = 1 - 1 / math.e
    fails_lp, fails_opt, worst_margin = 0, 0, math.inf
    for inst, (frac, _), out in zip(small_instances, solved, replications):
        w = out[:, 0]
        se = w.std(ddof=1) / math.sqrt(M)
        mean = w.mean()
        opt = brute_force_opt(inst).welfare
        fails_lp += mean < ratio * frac.objective - 3 * se
        fails_opt += mean < (ratio - EPS) * opt - 3 * se
        if frac.objective > 0:
            worst_margin = min(worst_margin, mean / frac.objective)
    ok = fails_lp == 0 and fails_opt == 0
    record_criterion(3, "mean rounded welfare >= (1-1/e) OPT_eps and >= (1-1/e-eps) OPT, minus 3 SE", ok,
                     f"violations vs LP={fails_lp}, vs brute force={fails_opt}, "
                     f"min mean/LP ratio={worst_margin:.3f}")
    assert ok


def test_4_budget_tail_bound(record_criterion, small_instances, solved, replications):
    tail_fails, mean_fails, worst_excess, max_p = 0, 0, -math.inf, 0.0
    for inst, (frac, _), out in zip(small_instances, solved, replications):
        c = out[:, 1]
        over = c > inst.budget
        p = over.mean()
        p_se = math.sqrt(p * (1 - p) / M)
        bound = math.exp(-EPS ** 2 * inst.budget / (3 * inst.c_max))
        tail_fails += p > bound + 3 * p_se
        worst_excess = max(worst_excess, p - bound)
        max_p = max(max_p, p)
        mean_fails += c.mean() > inst.budget * (1 - EPS) + 3 * c.std(ddof=1) / math.sqrt(M)
    ok = tail_fails == 0 and mean_fails == 0
    record_criterion(4, "P(cost > B) within Chernoff bound; mean cost <= B(1-eps), plus 3 SE", ok,
                     f"tail violations={tail_fails}, mean-cost violations={mean_fails}, "
                     f"max P(cost > B)={max_p:.4f}, max(P - bound)={worst_excess:.3f}")
    assert ok


def test_5_gadget_values(record_criterion):
    t0 = time.perf_counter()
    gap = gen_gadget_integrality_gap(0.5)
    ns = gen_gadget_nonsubmodular()
    got = {
        "gap OPT": brute_force_opt(gap).welfare,
        "gap LP": config_lp_full(gap, 0.0).objective,
        "w(l1)": welfare_oracle_w(ns, ["l1"]),
        "w(l1,l2)": welfare_oracle_w(ns, ["l1", "l2"]),
        "w(l1,l3)": welfare_oracle_w(ns, ["l1", "l3"]),
        "w(l1,l2,l3)": welfare_oracle_w(ns, ["l1", "l2", "l3"]),
        "trip OPT": brute_force_opt(gen_gadget_trip_optimality(5)).welfare,
    }
    want = {"gap OPT": 1.0, "gap LP": 1.5, "w(l1)": 2.0, "w(l1,l2)": 2.0, "w(l1,l3)": 2.0,
            "w(l1,l2,l3)": 3.0, "trip OPT": 1.0}
    elapsed = time.perf_counter() - t0
    wrong = {k: got[k] for k in want if got[k] != want[k]}
    ok = not wrong and elapsed < 5
    record_criterion(5, "gadget regressions reproduce exact values", ok,
                     f"mismatches={wrong or 'none'}, {elapsed:.2f}s")
    assert ok


def test_6_aggregation_properties(record_criterion):
    n_reps, violations, merges, rep = 1000, 0, 0, 0
    seed = 0
    while rep < n_reps:
        inst = gen_random_small(1000 + seed, max_lines=10, max_passengers=10, coverage=0.7, multi_frequency=True)
        seed += 1
        routes = [ln.route for ln in inst.lines]
        if len(set(routes)) == len(routes):
            continue
        frac = solve_config_lp(inst, EPS)
        rounder = Rounder(frac, inst)
        for i in range(50):
            pre = rounder.reassign(rounder.roll(make_rng(seed, 99, i)))
            post = aggregate(pre, inst)
            check = welfare_of(inst, post)
            merges += post.n_lines < pre.n_lines
            violations += (post.welfare < pre.welfare or post.cost > pre.cost or not check.capacity_ok
                           or not check.single_line_ok or not check.nonempty_ok
                           or len({ol.route for ol in post.lines}) != post.n_lines)
            rep += 1
    ok = violations == 0 and merges > 0
    record_criterion(6, "aggregation never lowers welfare, never raises cost, keeps capacity", ok,
                     f"replications={rep}, with merges={merges}, violations={violations}")
    assert ok


def test_7_scale_smoke(record_criterion):
    inst = gen_synthetic(SyntheticParams(L=200, N=1000, budget=20, capacity=30, seed=0))
    t0 = time.perf_counter()
    frac = solve_config_lp(inst, EPS, time_budget=90.0)
    plan, stats = best_of_m(frac, inst, m=1000, seed=0)
    elapsed = time.perf_counter() - t0
    eta = stats.eta if stats.eta is not None else 0.0
    feasible = plan is not None and welfare_of(inst, plan).feasible
    ok = elapsed < 120 and eta >= 0.60 and feasible
    record_criterion(7, "scale smoke test L=200 N=1000 B=20 C=30, m=1000", ok,
                     f"{elapsed:.1f}s, eta={eta:.3f}, alpha={stats.alpha:.3f}, converged={frac.converged}, "
                     f"iterations={frac.iterations}, LP={frac.objective:.2f}")
    assert ok


def test_8_determinism(record_criterion, tmp_path):
    inst = gen_synthetic(SyntheticParams(L=30, N=120, budget=6, capacity=5, seed=7))
    path = tmp_path / "inst.json"
    save_instance(inst, path)
    reports = []
    for k in range(2):
        rep = tmp_path / f"report{k}.json"
        plan = tmp_path / f"plan{k}.json"
        cmd = [sys.executable, "-m", "rlpp", "solve", str(path), "--replications", "500", "--seed", "11",
               "--no-timings", "--report", str(rep), "--plan", str(plan)]
        res = subprocess.run(cmd, capture_output=True, text=True)
        assert res.returncode in (0, 2), res.stderr
        reports.append((rep.read_bytes(), plan.read_bytes() if plan.exists() else b""))
    ok = reports[0] == reports[1]
    record_criterion(8, "identical inputs give byte-identical reports", ok,
                     f"report sizes={[len(r) for r, _ in reports]}")
    assert ok
