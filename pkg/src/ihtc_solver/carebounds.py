"""Per-(patient, admission day) lower bounds on skill plus continuity-of-care cost.

For a patient admitted on day ``d`` every shift of the stay needs some nurse
that works it.  The cheapest way to pick one nurse per shift, counting each
distinct nurse once and every skill shortfall per shift, bounds the care cost
that patient will cause in any complete schedule.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Tuple

from . import milp
from .model import Instance, Patient

UNCOVERABLE = math.inf


def stay_slots(instance: Instance, patient: Patient, day: int):
    """(day, shift, stay offset) for every shift the patient is present."""
    ns = instance.n_shifts
    return [(dd, s, dd - day) for dd in instance.stay_days(patient, day) for s in range(ns)]


def trivial_bound(instance: Instance, patient: Patient, day: int):
    """Cheap valid bound: ``min(3, nurses needed)`` times the CoC weight.

    Nurses needed is at least ``ceil(slots / m)`` where ``m`` is the largest
    number of the stay's shifts any single nurse works.  When every nurse
    works at most one shift a day this is just ``min(3, slots)``.
    """
    slots = stay_slots(instance, patient, day)
    if not slots:
        return 0
    present = instance.nurses_present
    if any(not present[dd, s] for dd, s, _ in slots):
        return UNCOVERABLE
    cover = {}
    for dd, s, _ in slots:
        for n in present[dd, s]:
            cover[n.id] = cover.get(n.id, 0) + 1
    need = -(-len(slots) // max(cover.values()))
    return min(3, need) * instance.weights.continuity


def _gap(patient, delta, s, nurse, ns):
    return max(0, patient.skill_at(delta, s, ns) - nurse.skill)


def build_bound_model(instance: Instance, patient: Patient, day: int) -> milp.MilpModel:
    w = instance.weights
    ns = instance.n_shifts
    m = milp.MilpModel(f"care_{patient.id}_{day}")
    y = {}
    for dd, s, delta in stay_slots(instance, patient, day):
        row = {}
        for n in instance.nurses_present[dd, s]:
            if n.id not in y:
                y[n.id] = m.add_var(f"y_{n.id}", milp.BINARY, obj=w.continuity)
            x = m.add_var(f"x_{n.id}_{dd}_{s}", milp.BINARY, obj=w.skill * _gap(patient, delta, s, n, ns))
            row[x] = 1
            m.add_constr({y[n.id]: 1, x: -1}, ">=", 0)
        m.add_constr(row, ">=", 1)
    return m


def bound_pair(instance: Instance, patient: Patient, day: int, limits: Optional[milp.Limits] = None,
               cancel: Optional[milp.CancelToken] = None):
    """Optimal care-cost bound; ``UNCOVERABLE`` if some shift has no nurse.

    When the MIP stops early its dual bound (rounded up) is returned, which
    is still valid.
    """
    slots = stay_slots(instance, patient, day)
    if not slots:
        return 0
    present = instance.nurses_present
    if any(not present[dd, s] for dd, s, _ in slots):
        return UNCOVERABLE
    w = instance.weights
    ns = instance.n_shifts
    # one nurse covering the whole stay without any shortfall is optimal
    for n in present[slots[0][0], slots[0][1]]:
        if all(n.works(dd, s) and _gap(patient, delta, s, n, ns) == 0 for dd, s, delta in slots):
            return w.continuity
    model = build_bound_model(instance, patient, day)
    out = milp.solve(model, limits, cancel=cancel)
    if out.status == milp.OPTIMAL:
        return int(round(out.objective))
    floor = trivial_bound(instance, patient, day)
    if out.dual_bound is None:
        return floor
    return max(floor, int(math.ceil(out.dual_bound - 1e-6)))


@dataclass
class CareBoundTable:
    """Map ``(patient id, day)`` to a bound; missing keys fall back to the trivial bound."""

    instance: Instance
    values: Dict[Tuple[str, int], float] = field(default_factory=dict)

    def __getitem__(self, key):
        pid, day = key
        v = self.values.get(key)
        if v is None:
            return trivial_bound(self.instance, self.instance.patient_by_id[pid], day)
        return v

    def get(self, pid, day):
        return self[pid, day]

    def __contains__(self, key):
        return key in self.values

    def __len__(self):
        return len(self.values)

    def items(self):
        return self.values.items()

    def occupant_offset(self):
        return sum(self[p.id, 0] for p in self.instance.occupants)


def instance_hash(instance: Instance) -> str:
    from .io import dump_instance
    return hashlib.sha256(dump_instance(instance)).hexdigest()


def _load_cache(path, key):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, ValueError):
        return {}
    raw = doc.get(key, {})
    out = {}
    for k, v in raw.items():
        pid, _, day = k.rpartition("@")
        out[pid, int(day)] = UNCOVERABLE if v is None else v
    return out


def _store_cache(path, key, values):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, ValueError):
        doc = {}
    doc[key] = {f"{pid}@{d}": (None if v == UNCOVERABLE else v) for (pid, d), v in values.items()}
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
    os.replace(tmp, path)


def bound_all(instance: Instance, windows: Mapping[str, Iterable[int]], limits: Optional[milp.Limits] = None,
              workers: int = 3, deadline: Optional[float] = None, cancel: Optional[milp.CancelToken] = None,
              cache_path: Optional[str] = None, include_occupants=True) -> CareBoundTable:
    """Bounds for every ``(p, d)`` with ``d`` in ``windows[p]``.

    ``deadline`` is an absolute ``time.monotonic()`` value; pairs not started
    by then keep the trivial bound.  Cheap pairs (small windows) go first.
    """
    table = CareBoundTable(instance)
    key = instance_hash(instance) if cache_path else None
    cached = _load_cache(cache_path, key) if cache_path else {}
    byid = instance.patient_by_id
    pairs = []
    for pid, days in sorted(windows.items(), key=lambda kv: (len(tuple(kv[1])), kv[0])):
        pairs.extend((pid, d) for d in days)
    if include_occupants:
        pairs = [(p.id, 0) for p in instance.occupants] + pairs
    todo = []
    for pair in pairs:
        if pair in cached:
            table.values[pair] = cached[pair]
        else:
            todo.append(pair)
    lock = threading.Lock()

    def job(pair):
        if (cancel is not None and cancel.cancelled) or (deadline is not None and time.monotonic() >= deadline):
            return
        lim = limits
        if deadline is not None:
            left = max(0.01, deadline - time.monotonic())
            lim = milp.Limits(wall_time=min(left, limits.wall_time) if limits and limits.wall_time else left)
        v = bound_pair(instance, byid[pair[0]], pair[1], lim, cancel)
        with lock:
            table.values[pair] = v

    if workers <= 1:
        for pair in todo:
            job(pair)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(job, todo))
    if cache_path and all(p in table.values for p in todo):
        _store_cache(cache_path, key, table.values)
    return table
