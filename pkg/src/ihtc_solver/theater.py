"""Per-day operating-theater assignment.

Days are independent: each day with surgeries gets its own small MIP that
opens as few theaters as possible and keeps surgeons in few theaters.
"""
from __future__ import annotations

from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence

from . import milp
from .model import Instance


class TheaterInfeasible(RuntimeError):
    pass


@dataclass
class TheaterSolution:
    day: int
    assignment: Mapping[str, str]
    opened: tuple
    incidences: Dict[str, tuple] = field(default_factory=dict)
    objective: int = 0
    optimal: bool = True

    def transfers(self):
        return sum(len(v) - 1 for v in self.incidences.values())


def _summarise(instance, day, assignment, optimal=True):
    w = instance.weights
    byid = instance.patient_by_id
    opened = tuple(o.id for o in instance.theaters if o.id in set(assignment.values()))
    inc = defaultdict(set)
    for pid, o in assignment.items():
        inc[byid[pid].surgeon].add(o)
    incidences = {u: tuple(sorted(v)) for u, v in sorted(inc.items())}
    obj = w.open_theater * len(opened) + w.surgeon_transfer * sum(len(v) for v in incidences.values())
    return TheaterSolution(day, dict(assignment), opened, incidences, obj, optimal)


def build_day_model(instance: Instance, day: int, patients: Sequence[str]):
    w = instance.weights
    byid = instance.patient_by_id
    m = milp.MilpModel(f"theater_{day}")
    theaters = [o for o in instance.theaters if o.capacity[day] > 0]
    theta = {o.id: m.add_var(f"theta_{o.id}", milp.BINARY, obj=w.open_theater) for o in theaters}
    surgeons = sorted({byid[p].surgeon for p in patients})
    y = {(u, o.id): m.add_var(f"y_{u}_{o.id}", milp.BINARY, obj=w.surgeon_transfer)
         for u in surgeons for o in theaters}
    x = {}
    for pid in patients:
        for o in theaters:
            if byid[pid].surgery_duration <= o.capacity[day]:
                x[pid, o.id] = m.add_var(f"x_{pid}_{o.id}", milp.BINARY)
        m.add_constr({x[pid, o.id]: 1 for o in theaters if (pid, o.id) in x}, "==", 1, f"once_{pid}")
    for (pid, oid), j in x.items():
        m.add_constr({theta[oid]: 1, j: -1}, ">=", 0)
        m.add_constr({y[byid[pid].surgeon, oid]: 1, j: -1}, ">=", 0)
    for o in theaters:
        row = {j: byid[pid].surgery_duration for (pid, oid), j in x.items() if oid == o.id}
        if row:
            row[theta[o.id]] = -o.capacity[day]
            m.add_constr(row, "<=", 0, f"cap_{o.id}")
    return m, x


def first_fit_decreasing(instance: Instance, day: int, patients: Sequence[str]):
    """Greedy fallback; returns ``None`` when the patients do not fit."""
    byid = instance.patient_by_id
    left = {o.id: o.capacity[day] for o in instance.theaters}
    order = sorted(patients, key=lambda p: (-byid[p].surgery_duration, p))
    out = {}
    for pid in order:
        t = byid[pid].surgery_duration
        # prefer a theater already used by the surgeon, then any open one
        used = [o.id for o in instance.theaters if o.id in out.values() and left[o.id] >= t]
        same = [o for o in used if any(out[q] == o and byid[q].surgeon == byid[pid].surgeon for q in out)]
        pool = same or used or [o.id for o in instance.theaters if left[o.id] >= t]
        if not pool:
            return None
        out[pid] = pool[0]
        left[pool[0]] -= t
    return out


def solve_day(instance: Instance, day: int, patients: Sequence[str], limits: Optional[milp.Limits] = None,
              cancel=None) -> TheaterSolution:
    patients = sorted(patients)
    if not patients:
        raise ValueError("no surgeries on this day")
    byid = instance.patient_by_id
    total = sum(byid[p].surgery_duration for p in patients)
    if total > sum(o.capacity[day] for o in instance.theaters):
        raise TheaterInfeasible(f"surgeries on day {day} exceed total theater capacity")
    m, x = build_day_model(instance, day, patients)
    out = milp.solve(m, limits, cancel=cancel)
    if out.has_solution:
        vals = out.values
        assignment = {pid: oid for (pid, oid), j in x.items() if vals[j] > 0.5}
        return _summarise(instance, day, assignment, out.status == milp.OPTIMAL)
    if out.status == milp.INFEASIBLE:
        raise TheaterInfeasible(f"no theater packing exists on day {day}")
    ffd = first_fit_decreasing(instance, day, patients)
    if ffd is None:
        raise TheaterInfeasible(f"fallback packing failed on day {day}")
    return _summarise(instance, day, ffd, False)


def solve_all_days(instance: Instance, admission: Mapping[str, int], limits_per_day: float = 1.0,
                   workers: int = 2, cancel=None) -> Dict[int, TheaterSolution]:
    """Theater plans for every day with at least one surgery."""
    adm = admission.admitted if hasattr(admission, "admitted") else admission
    by_day = defaultdict(list)
    for pid, d in adm.items():
        if not instance.patient_by_id[pid].is_occupant:
            by_day[d].append(pid)
    if not by_day:
        return {}
    lim = milp.Limits(wall_time=limits_per_day)
    days = sorted(by_day)
    if workers <= 1 or len(days) == 1:
        return {d: solve_day(instance, d, by_day[d], lim, cancel) for d in days}
    with ThreadPoolExecutor(max_workers=workers) as ex:
        sols = list(ex.map(lambda d: solve_day(instance, d, by_day[d], lim, cancel), days))
    return dict(zip(days, sols))


def merge_plans(plans: Mapping[int, TheaterSolution]):
    """Patient-to-theater map of a plan set."""
    assignment = {}
    for sol in plans.values():
        assignment.update(sol.assignment)
    return assignment


def plan_cost(instance: Instance, plans: Mapping[int, TheaterSolution]):
    w = instance.weights
    return sum(w.open_theater * len(s.opened) + w.surgeon_transfer * s.transfers() for s in plans.values())
