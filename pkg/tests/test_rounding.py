import itertools
import math

import numpy as np
import pytest

from rlpp import (Instance, Line, LinePlan, OpenLine, Passenger, ValueEntry, best_of_m, budget_tail_check,
                  chernoff_bound, gen_gadget_integrality_gap, gen_gadget_nonsubmodular, gen_random_small,
                  round_once, solve_config_lp, welfare_of)
from rlpp.master import FractionalSolution
from rlpp.pricing import DualPrices, make_column
from rlpp.rng import ROUNDING, make_rng
from rlpp.rounding import Rounder, aggregate, replicate


def fractional(inst, cols, weights, eps=0.05):
    obj = math.fsum(c.welfare * w for c, w in zip(cols, weights))
    return FractionalSolution(tuple(cols), tuple(weights), obj, DualPrices.zeros(inst), eps, True, 1, 0.0)


def test_integral_solution_reproduced():
    inst = gen_gadget_nonsubmodular()
    cols = [make_column(inst, "l1", ["p3"]), make_column(inst, "l2", ["p1"]), make_column(inst, "l3", ["p2"])]
    frac = fractional(inst, cols, [1.0, 1.0, 1.0])
    plan = round_once(frac, inst, seed=5)
    assert plan.welfare == frac.objective == 3.0
    assert [(ol.members, [p for p, _ in ol.riders]) for ol in plan.lines] == [
        (("l1",), ["p3"]), (("l2",), ["p1"]), (("l3",), ["p2"])]


def test_single_column():
    inst = gen_gadget_nonsubmodular()
    frac = fractional(inst, [make_column(inst, "l1", ["p1", "p2"])], [1.0])
    plan = round_once(frac, inst, seed=0)
    assert plan.n_lines == 1 and plan.lines[0].riders == (("p1", "l1"), ("p2", "l1"))


def test_nonsubmodular_all_outcomes():
    inst = gen_gadget_nonsubmodular()
    frac = solve_config_lp(inst, 0.05)
    r = Rounder(frac, inst)
    options = [[None] + cols for cols, _ in r.choices]
    n = 0
    for combo in itertools.product(*options):
        picked = {lid: c for lid, c in zip(r.line_ids, combo) if c is not None}
        plan = aggregate(r.reassign(picked), inst)
        check = welfare_of(inst, plan)
        assert plan.welfare <= 3 and check.capacity_ok and check.single_line_ok and check.nonempty_ok
        n += 1
    assert n >= 8


def test_reassignment_keeps_max_value_line():
    lines = (Line("a", (0,), 1.0), Line("b", (1,), 1.0))
    vals = (ValueEntry("x", "a", 0.3, 0, 0), ValueEntry("x", "b", 0.8, 0, 0), ValueEntry("y", "a", 0.5, 0, 0))
    inst = Instance(lines, (Passenger("x"), Passenger("y")), vals, 5.0, 2)
    frac = fractional(inst, [make_column(inst, "a", ["x", "y"]), make_column(inst, "b", ["x"])], [1.0, 1.0])
    plan = round_once(frac, inst, 0)
    assert {ol.members[0]: ol.riders for ol in plan.lines} == {"a": (("y", "a"),), "b": (("x", "b"),)}


def test_empty_lines_closed():
    lines = (Line("a", (0,), 1.0), Line("b", (1,), 1.0))
    vals = (ValueEntry("x", "a", 0.3, 0, 0), ValueEntry("x", "b", 0.8, 0, 0))
    inst = Instance(lines, (Passenger("x"),), vals, 5.0, 1)
    frac = fractional(inst, [make_column(inst, "a", ["x"]), make_column(inst, "b", ["x"])], [1.0, 1.0])
    plan = round_once(frac, inst, 0)
    assert [ol.members for ol in plan.lines] == [("b",)] and plan.cost == 1.0


def freq_instance():
    r = (0, 1)
    lines = (Line("a", r, 1.0, 1), Line("b", r, 1.7, 2), Line("c", r, 2.4, 3))
    vals = (ValueEntry("x", "a", 0.5, 0, 1), ValueEntry("x", "c", 0.6, 0, 1),
            ValueEntry("y", "b", 0.4, 1, 1), ValueEntry("y", "c", 0.45, 0, 1))
    return Instance(lines, (Passenger("x"), Passenger("y")), vals, 10.0, 1)


def test_aggregation_merges_same_route():
    inst = freq_instance()
    pre = LinePlan((OpenLine(("a",), (0, 1), 1, 1.0, (("x", "a"),)),
                    OpenLine(("b",), (0, 1), 2, 1.7, (("y", "b"),))), 0.9, 2.7)
    post = aggregate(pre, inst)
    ol, = post.lines
    assert ol.members == ("a", "b") and ol.frequency == 3 and ol.cost == 2.4
    # x moves to c's entry (same sub-route, higher value); y keeps b's (different sub-route)
    assert ol.riders == (("x", "c"), ("y", "b"))
    assert post.welfare == pytest.approx(1.0) and post.welfare >= pre.welfare and post.cost <= pre.cost


def test_aggregation_without_catalog_sums_costs():
    inst = freq_instance()
    pre = LinePlan((OpenLine(("b",), (0, 1), 2, 1.7, (("y", "b"),)),
                    OpenLine(("c",), (0, 1), 3, 2.4, (("x", "c"),))))
    ol, = aggregate(pre, inst).lines
    assert ol.frequency == 5 and ol.cost == pytest.approx(4.1)


def test_zero_objective():
    inst = Instance((Line("a", (0,), 1.0),), (Passenger("x"),), (), 1.0, 1)
    frac = solve_config_lp(inst, 0.05)
    plan, stats = best_of_m(frac, inst, m=10)
    assert plan.lines == () and stats.alpha == 1.0 and stats.best_welfare == 0.0 and stats.eta is None


def test_m_one_equals_round_once():
    inst = gen_random_small(2)
    frac = solve_config_lp(inst, 0.05)
    plan, stats = best_of_m(frac, inst, m=1, seed=9)
    assert plan == round_once(frac, inst, seed=9, replication=0)
    with pytest.raises(ValueError):
        best_of_m(frac, inst, m=0)


def test_replications_order_independent():
    inst = gen_random_small(11)
    frac = solve_config_lp(inst, 0.05)
    r = Rounder(frac, inst)
    forward = replicate(frac, inst, 40, seed=3)
    backward = np.array([r.outcome(3, i) for i in reversed(range(40))])[::-1]
    assert np.array_equal(forward, backward)
    assert np.array_equal(forward, replicate(frac, inst, 40, seed=3, workers=2))


def test_best_plan_is_best_within_budget():
    inst = gen_random_small(6)
    frac = solve_config_lp(inst, 0.05)
    plan, stats = best_of_m(frac, inst, m=300, seed=1)
    ok = stats.costs <= inst.budget + 1e-6
    assert plan.welfare == stats.welfares[ok].max()
    assert 0 <= stats.alpha <= 1 and welfare_of(inst, plan).feasible


def test_tail_deterministic_zero():
    inst = gen_gadget_nonsubmodular()
    frac = fractional(inst, [make_column(inst, "l2", ["p1"])], [1.0])
    assert budget_tail_check(frac, inst, m=50, delta=0.5) == 0.0


def test_tail_gap_gadget_closed_form():
    inst = gen_gadget_integrality_gap(0.5)
    frac = solve_config_lp(inst, 0.05)
    x = {c.line: w for c, w in zip(frac.columns, frac.weights)}
    p = x["l1"] * x["l2"]
    m = 20_000
    got = budget_tail_check(frac, inst, m=m, delta=0.1, seed=4)
    assert abs(got - p) <= 4 * math.sqrt(p * (1 - p) / m)


@pytest.mark.parametrize("seed", range(10))
def test_tail_below_chernoff(seed):
    inst = gen_random_small(seed)
    frac = solve_config_lp(inst, 0.05)
    m = 2000
    for delta in (0.25, 1.0):
        p = budget_tail_check(frac, inst, m=m, delta=delta, seed=seed)
        assert p <= chernoff_bound(inst, 0.05, delta) + 3 * math.sqrt(max(p * (1 - p), 1e-12) / m)


def test_chernoff_formula():
    inst = gen_gadget_integrality_gap(0.5)
    assert chernoff_bound(inst, 0.05, 0.5) == pytest.approx(math.exp(-0.25 * 0.95 * 1.5 / 3))
    with pytest.raises(ValueError):
        budget_tail_check(solve_config_lp(inst, 0.05), inst, 10, delta=0.0)


def test_rng_streams_distinct():
    a = make_rng(1, ROUNDING, 0).random(4)
    assert not np.array_equal(a, make_rng(1, ROUNDING, 1).random(4))
    assert np.array_equal(a, make_rng(1, ROUNDING, 0).random(4))
    with pytest.raises(ValueError):
        make_rng(-1, ROUNDING)


@pytest.mark.parametrize("seed", range(60))
def test_aggregation_properties_forced_merges(seed):
    from rlpp import price_line
    inst = gen_random_small(500 + seed, max_lines=10, coverage=0.8, multi_frequency=True)
    rng = np.random.default_rng(seed)
    r = Rounder(solve_config_lp(inst, 0.05), inst)
    for _ in range(10):
        d = DualPrices(0.0, np.zeros(len(inst.lines)), rng.uniform(0, 0.6, len(inst.passengers)))
        picked = {}
        for ln in inst.lines:
            col = price_line(ln.id, inst, d)
            if col is not None and rng.random() < 0.8:
                picked[ln.id] = col
        pre = r.reassign(picked)
        post = aggregate(pre, inst)
        check = welfare_of(inst, post)
        assert post.welfare >= pre.welfare and post.cost <= pre.cost
        assert check.capacity_ok and check.single_line_ok and check.nonempty_ok
        assert len({ol.route for ol in post.lines}) == post.n_lines
