"""JSON file formats for instances, plans and run reports, plus GeoJSON export.

Instance file (``"format": "rlpp-instance"``, ``"version": 1``)::

    {
      "format": "rlpp-instance", "version": 1,
      "budget": 20.0, "capacity": 30, "max_route_cost": null,
      "lines": [{"id": "l0", "route": [0, 1, 2], "cost": 1.0, "frequency": 1,
                 "start_time": null}, ...],
      "passengers": [{"id": "p0", "source": 3, "destination": 7,
                      "request_time": null}, ...],
      "values": [["p0", "l0", 0.42, 0, 1], ...],       # passenger, line, value, first, last
      "network": null | {"n_nodes": 9, "edges": [[0, 1, 1.0], ...],
                         "coords": null | [[0.0, 0.0], ...]},
      "metadata": {...}
    }

Plan file (``"format": "rlpp-plan"``)::

    {"format": "rlpp-plan", "version": 1, "welfare": ..., "cost": ...,
     "within_budget": true, "seed": 0, "replication": 17,
     "lines": [{"members": ["l3"], "route": [...], "frequency": 1, "cost": 1.0,
                "riders": [["p0", "l3"], ...]}, ...]}

Floats are written with ``repr`` precision, so save/load round-trips exactly.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .errors import InstanceFormatError
from .model import Instance, Line, LinePlan, Network, OpenLine, Passenger, ValueEntry, validate_instance

INSTANCE_FORMAT = "rlpp-instance"
PLAN_FORMAT = "rlpp-plan"
REPORT_FORMAT = "rlpp-report"
VERSION = 1


def instance_to_dict(inst: Instance) -> dict:
    net = None
    if inst.network is not None:
        n = inst.network
        net = {"n_nodes": n.n_nodes, "edges": [list(e) for e in n.edges],
               "coords": None if n.coords is None else [list(c) for c in n.coords]}
    return {
        "format": INSTANCE_FORMAT,
        "version": VERSION,
        "budget": inst.budget,
        "capacity": inst.capacity,
        "max_route_cost": inst.max_route_cost,
        "lines": [{"id": ln.id, "route": list(ln.route), "cost": ln.cost, "frequency": ln.frequency,
                   "start_time": ln.start_time} for ln in inst.lines],
        "passengers": [{"id": p.id, "source": p.source, "destination": p.destination,
                        "request_time": p.request_time} for p in inst.passengers],
        "values": [list(e) for e in inst.values],
        "network": net,
        "metadata": inst.metadata,
    }


def _field(obj, key, where, kind=None, optional=False):
    if not isinstance(obj, dict) or key not in obj:
        if optional:
            return None
        raise InstanceFormatError(f"{where}: missing field {key!r}")
    val = obj[key]
    if val is None and optional:
        return None
    if kind is not None and (not isinstance(val, kind) or isinstance(val, bool)):
        raise InstanceFormatError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, "
                                  f"got {type(val).__name__}")
    return val


NUM = (int, float)


def instance_from_dict(d: dict) -> Instance:
    if not isinstance(d, dict) or d.get("format") != INSTANCE_FORMAT:
        raise InstanceFormatError(f"not an {INSTANCE_FORMAT} document")
    if d.get("version") != VERSION:
        raise InstanceFormatError(f"unsupported version {d.get('version')!r}")
    lines = []
    for i, ln in enumerate(_field(d, "lines", "$", list)):
        w = f"$.lines[{i}]"
        route = _field(ln, "route", w, list)
        if not all(isinstance(k, int) for k in route):
            raise InstanceFormatError(f"{w}.route: edge ids must be integers")
        start = _field(ln, "start_time", w, NUM, optional=True)
        lines.append(Line(str(_field(ln, "id", w, str)), tuple(route), float(_field(ln, "cost", w, NUM)),
                          _field(ln, "frequency", w, int), None if start is None else float(start)))
    passengers = []
    for j, p in enumerate(_field(d, "passengers", "$", list)):
        w = f"$.passengers[{j}]"
        t = _field(p, "request_time", w, NUM, optional=True)
        passengers.append(Passenger(_field(p, "id", w, str), _field(p, "source", w, int, optional=True),
                                    _field(p, "destination", w, int, optional=True),
                                    None if t is None else float(t)))
    values = []
    for k, row in enumerate(_field(d, "values", "$", list)):
        w = f"$.values[{k}]"
        if not (isinstance(row, list) and len(row) == 5 and isinstance(row[0], str) and isinstance(row[1], str)
                and isinstance(row[2], NUM) and isinstance(row[3], int) and isinstance(row[4], int)):
            raise InstanceFormatError(f"{w}: expected [passenger, line, value, first, last]")
        values.append(ValueEntry(row[0], row[1], float(row[2]), row[3], row[4]))
    net = None
    nd = _field(d, "network", "$", dict, optional=True)
    if nd is not None:
        edges = []
        for k, e in enumerate(_field(nd, "edges", "$.network", list)):
            if not (isinstance(e, list) and len(e) == 3 and isinstance(e[0], int) and isinstance(e[1], int)
                    and isinstance(e[2], NUM)):
                raise InstanceFormatError(f"$.network.edges[{k}]: expected [u, v, travel_time]")
            edges.append((e[0], e[1], float(e[2])))
        coords = _field(nd, "coords", "$.network", list, optional=True)
        net = Network(_field(nd, "n_nodes", "$.network", int), tuple(edges),
                      None if coords is None else tuple((float(x), float(y)) for x, y in coords))
    mrc = _field(d, "max_route_cost", "$", NUM, optional=True)
    budget = _field(d, "budget", "$", NUM)
    return Instance(tuple(lines), tuple(passengers), tuple(values), float(budget),
                    _field(d, "capacity", "$", int), net, None if mrc is None else float(mrc),
                    _field(d, "metadata", "$", dict, optional=True) or {})


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def instance_digest(inst: Instance) -> str:
    """sha256 of the canonical JSON serialisation."""
    return hashlib.sha256(_canonical(instance_to_dict(inst)).encode()).hexdigest()


def _read_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}: parse error at line {exc.lineno}, column {exc.colno} "
                                  f"(offset {exc.pos}): {exc.msg}") from exc


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")


def load_instance(path, validate: bool = True) -> Instance:
    """Read an instance file; invalid instances raise :class:`InstanceFormatError`."""
    inst = instance_from_dict(_read_json(path))
    if validate:
        problems = validate_instance(inst)
        if problems:
            raise InstanceFormatError(f"{path}: invalid instance ({len(problems)} violations): "
                                      + "; ".join(problems[:10]), problems)
    return inst


def plan_to_dict(plan: LinePlan) -> dict:
    return {
        "format": PLAN_FORMAT,
        "version": VERSION,
        "welfare": plan.welfare,
        "cost": plan.cost,
        "within_budget": plan.within_budget,
        "seed": plan.seed,
        "replication": plan.replication,
        "lines": [{"members": list(ol.members), "route": list(ol.route), "frequency": ol.frequency,
                   "cost": ol.cost, "riders": [list(r) for r in ol.riders]} for ol in plan.lines],
    }


def plan_from_dict(d: dict) -> LinePlan:
    if not isinstance(d, dict) or d.get("format") != PLAN_FORMAT or d.get("version") != VERSION:
        raise InstanceFormatError(f"not an {PLAN_FORMAT} v{VERSION} document")
    lines = []
    for k, ol in enumerate(_field(d, "lines", "$", list)):
        w = f"$.lines[{k}]"
        lines.append(OpenLine(tuple(_field(ol, "members", w, list)), tuple(_field(ol, "route", w, list)),
                              _field(ol, "frequency", w, int), float(_field(ol, "cost", w, NUM)),
                              tuple((p, l) for p, l in _field(ol, "riders", w, list))))
    return LinePlan(tuple(lines), float(d["welfare"]), float(d["cost"]), bool(d["within_budget"]),
                    d.get("seed"), d.get("replication"))


def save_plan(plan: LinePlan, path) -> None:
    Path(path).write_text(json.dumps(plan_to_dict(plan), indent=1) + "\n")


def load_plan(path) -> LinePlan:
    return plan_from_dict(_read_json(path))


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True, allow_nan=False) + "\n")


def plan_geojson(plan: LinePlan, inst: Instance) -> dict:
    """GeoJSON FeatureCollection with one LineString per open line.

    Properties: member line ids, frequency, cost, number of riders and the
    peak per-edge load.
    """
    net = inst.network
    if net is None:
        raise ValueError("instance has no network; cannot export geometries")
    if net.coords is None:
        raise ValueError("network has no node coordinates; cannot export geometries")
    features = []
    for ol in plan.lines:
        nodes = net.walk_nodes(ol.route)
        if nodes is None:
            raise ValueError(f"open line {ol.members}: route is not a walk in the network")
        load = [0] * len(ol.route)
        for p, lid in ol.riders:
            e = inst.entry(lid, p)
            for k in range(e.first, e.last + 1):
                load[k] += 1
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": [list(net.coords[v]) for v in nodes]},
            "properties": {"lines": list(ol.members), "frequency": ol.frequency, "cost": ol.cost,
                           "riders": len(ol.riders), "peak_load": max(load, default=0),
                           "edge_loads": load},
        })
    return {"type": "FeatureCollection", "features": features}


def export_plan_geo(plan: LinePlan, inst: Instance, path) -> dict:
    geo = plan_geojson(plan, inst)
    Path(path).write_text(json.dumps(geo, indent=1) + "\n")
    return geo
