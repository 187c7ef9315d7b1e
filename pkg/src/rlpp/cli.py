"""Command-line interface: ``rlpp gen|solve|exact|validate|export-geo``.

Exit codes: 0 success (for ``solve``, a within-budget plan was found),
2 ``solve`` found no within-budget replication, 1 error.

The default seed is 0 unless the ``RLPP_SEED`` environment variable is set;
``--seed`` overrides both.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import generators as gen
from .errors import RLPPError
from .exact import Limits, brute_force_opt
from .io import (REPORT_FORMAT, VERSION, export_plan_geo, instance_digest, load_instance, load_plan,
                 plan_to_dict, save_instance, save_plan, write_json)
from .master import solve_config_lp
from .model import validate_instance, welfare_of
from .rounding import DEFAULT_EPS, DEFAULT_M, best_of_m

log = logging.getLogger("rlpp")

SEED_ENV = "RLPP_SEED"


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"error: {SEED_ENV}={raw!r} is not an integer")


def _limits(text: str | None) -> Limits:
    """``--limits L,N[,S]``: max lines, max passengers, max passengers per line set."""
    if not text:
        return Limits()
    parts = [int(x) for x in text.split(",")]
    if not 2 <= len(parts) <= 3 or min(parts) < 0:
        raise argparse.ArgumentTypeError("--limits expects L,N or L,N,S with non-negative integers")
    return Limits(*parts)


def _overrides(inst, args):
    if getattr(args, "budget", None) is not None:
        inst = replace(inst, budget=float(args.budget))
    if getattr(args, "capacity", None) is not None:
        inst = replace(inst, capacity=int(args.capacity))
    return inst


def _load(args):
    inst = _overrides(load_instance(args.instance, validate=False), args)
    problems = validate_instance(inst)
    if problems:
        raise RLPPError("invalid instance: " + "; ".join(problems[:10]))
    return inst


def _empty_report():
    return {
        "format": REPORT_FORMAT, "version": VERSION, "instance_digest": None, "mode": None,
        "params": {"budget": None, "capacity": None, "epsilon": None, "replications": None,
                   "time_budget_secs": None, "seed": None},
        "master_objective": None, "converged": None, "iterations": None, "columns": None,
        "plan": {"lines": None, "welfare": None, "cost": None, "within_budget": None, "replication": None},
        "alpha": None, "eta": None, "mean_cost": None, "mean_welfare": None, "c_max": None,
        "timings": {"load": None, "master": None, "rounding": None, "exact": None, "total": None},
    }


def _plan_summary(plan, inst):
    check = welfare_of(inst, plan)
    if not (check.capacity_ok and check.single_line_ok and check.nonempty_ok):
        raise RLPPError(f"emitted plan fails re-validation: {check.violations}")
    return {"lines": plan.n_lines, "welfare": check.welfare, "cost": check.cost,
            "within_budget": check.budget_ok, "replication": plan.replication}


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    if not 0 < args.epsilon < 0.5:
        raise RLPPError(f"--epsilon must lie in (0, 1/2), got {args.epsilon}")
    if args.replications < 1:
        raise RLPPError(f"--replications must be >= 1, got {args.replications}")
    inst = _load(args)
    t1 = time.perf_counter()
    frac = solve_config_lp(inst, eps=args.epsilon, time_budget=args.time_budget_secs)
    t2 = time.perf_counter()
    plan, stats = best_of_m(frac, inst, m=args.replications, seed=args.seed, workers=args.workers)
    t3 = time.perf_counter()

    rep = _empty_report()
    rep.update(instance_digest=instance_digest(inst), mode="column-generation",
               master_objective=frac.objective, converged=frac.converged, iterations=frac.iterations,
               columns=len(frac.columns), alpha=stats.alpha, eta=stats.eta, mean_cost=stats.mean_cost,
               mean_welfare=stats.mean_welfare, c_max=inst.c_max)
    rep["params"] = {"budget": inst.budget, "capacity": inst.capacity, "epsilon": args.epsilon,
                     "replications": args.replications, "time_budget_secs": args.time_budget_secs,
                     "seed": args.seed}
    if plan is not None:
        rep["plan"] = _plan_summary(plan, inst)
        if args.plan:
            save_plan(plan, args.plan)
    else:
        rep["plan"]["within_budget"] = False
    if not args.no_timings:
        rep["timings"] = {"load": t1 - t0, "master": t2 - t1, "rounding": t3 - t2, "exact": None,
                          "total": time.perf_counter() - t0}
    _emit(rep, args.report)
    return 0 if plan is not None else 2


def cmd_exact(args) -> int:
    t0 = time.perf_counter()
    inst = _load(args)
    t1 = time.perf_counter()
    res = brute_force_opt(inst, args.limits)
    rep = _empty_report()
    rep.update(instance_digest=instance_digest(inst), mode="exact", master_objective=None,
               c_max=inst.c_max)
    rep["params"].update(budget=inst.budget, capacity=inst.capacity)
    rep["plan"] = _plan_summary(res.plan, inst)
    if args.plan:
        save_plan(res.plan, args.plan)
    if not args.no_timings:
        rep["timings"].update(load=t1 - t0, exact=res.elapsed, total=time.perf_counter() - t0)
    _emit(rep, args.report)
    return 0


def _emit(rep, path):
    if path:
        write_json(rep, path)
    else:
        import json
        print(json.dumps(rep, indent=1, sort_keys=True))


def cmd_validate(args) -> int:
    inst = load_instance(args.instance, validate=False)
    problems = validate_instance(_overrides(inst, args))
    for p in problems:
        print(p)
    if problems:
        print(f"{len(problems)} violation(s)", file=sys.stderr)
        return 1
    print(f"ok: {len(inst.lines)} lines, {len(inst.passengers)} passengers, {len(inst.values)} values")
    return 0


def cmd_gen(args) -> int:
    kind = args.kind
    if kind == "synthetic":
        inst = gen.gen_synthetic(gen.SyntheticParams(
            L=args.lines, N=args.passengers, budget=args.budget if args.budget is not None else 20.0,
            capacity=args.capacity if args.capacity is not None else 30, coverage=args.coverage,
            seed=args.seed))
    elif kind == "grid":
        inst = gen.gen_network_instance(args.rows, args.cols, args.lines, args.passengers,
                                        budget=args.budget if args.budget is not None else 20.0,
                                        capacity=args.capacity if args.capacity is not None else 30,
                                        seed=args.seed)
    elif kind == "small":
        inst = _overrides(gen.gen_random_small(args.seed, multi_frequency=args.multi_frequency), args)
    elif kind == "gap":
        inst = _overrides(gen.gen_gadget_integrality_gap(), args)
    elif kind == "nonsubmodular":
        inst = _overrides(gen.gen_gadget_nonsubmodular(), args)
    elif kind == "trip":
        inst = _overrides(gen.gen_gadget_trip_optimality(args.n), args)
    else:  # argparse restricts choices
        raise RLPPError(f"unknown generator {kind!r}")
    save_instance(inst, args.out)
    print(f"wrote {args.out}: {len(inst.lines)} lines, {len(inst.passengers)} passengers")
    return 0


def cmd_export_geo(args) -> int:
    inst = load_instance(args.instance)
    plan = load_plan(args.plan)
    geo = export_plan_geo(plan, inst, args.out)
    print(f"wrote {args.out}: {len(geo['features'])} features")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rlpp", description="Real-time line planning solver")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--budget", type=float, help="override the instance budget B")
        p.add_argument("--capacity", type=int, help="override the instance capacity C")
        if seed:
            p.add_argument("--seed", type=int, default=default_seed(),
                           help=f"random seed (default: ${SEED_ENV} or 0)")

    g = sub.add_parser("gen", help="generate an instance file")
    g.add_argument("kind", choices=["synthetic", "grid", "small", "gap", "nonsubmodular", "trip"])
    g.add_argument("-o", "--out", required=True)
    g.add_argument("--lines", type=int, default=200)
    g.add_argument("--passengers", type=int, default=1000)
    g.add_argument("--coverage", type=float, default=0.1)
    g.add_argument("--rows", type=int, default=10)
    g.add_argument("--cols", type=int, default=10)
    g.add_argument("--n", type=int, default=5, help="trip-optimality gadget size")
    g.add_argument("--multi-frequency", action="store_true")
    common(g)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="column generation + best-of-m rounding")
    s.add_argument("instance")
    common(s)
    s.add_argument("--epsilon", type=float, default=DEFAULT_EPS)
    s.add_argument("--replications", "--m", type=int, default=DEFAULT_M)
    s.add_argument("--time-budget-secs", type=float, default=60.0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--plan", help="write the best plan here")
    s.add_argument("--report", help="write the run report here (default: stdout)")
    s.add_argument("--no-timings", action="store_true", help="null the wall-clock fields for reproducible reports")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("exact", help="brute-force optimum for small instances")
    e.add_argument("instance")
    common(e, seed=False)
    e.add_argument("--limits", type=_limits, default=Limits(), help="max lines,passengers[,set size]")
    e.add_argument("--plan")
    e.add_argument("--report")
    e.add_argument("--no-timings", action="store_true")
    e.set_defaults(func=cmd_exact)

    v = sub.add_parser("validate", help="check an instance file")
    v.add_argument("instance")
    common(v, seed=False)
    v.set_defaults(func=cmd_validate)

    x = sub.add_parser("export-geo", help="write a plan as GeoJSON")
    x.add_argument("instance")
    x.add_argument("plan")
    x.add_argument("-o", "--out", required=True)
    x.set_defaults(func=cmd_export_geo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (RLPPError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
