"""Patient-to-admission-day MIP over aggregated bed, nurse and theater capacity."""
from __future__ import annotations

import math
import time
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, FrozenSet, Mapping, Optional, Tuple

from . import milp
from .carebounds import UNCOVERABLE
from .model import Instance, InstanceError


class DegenerateCapacityError(InstanceError):
    pass


class AdmissionInfeasible(RuntimeError):
    """No admission vector satisfies the aggregated model at this rho."""

    def __init__(self, rho):
        self.rho = rho
        super().__init__(f"admission model infeasible at rho={rho}")


@dataclass(frozen=True)
class AdmissionSolution:
    admitted: Mapping[str, int]
    postponed: FrozenSet[str]
    opened_theaters: Mapping[int, Tuple[str, ...]] = field(default_factory=dict)
    bound_contribution: float = 0.0
    rho: int = 0

    @property
    def key(self):
        return tuple(sorted(self.admitted.items()))


class AdmissionModel(milp.MilpModel):
    """MilpModel plus the index maps needed to decode solutions."""

    def __init__(self, name=""):
        super().__init__(name)
        self.x: Dict[Tuple[str, int], int] = {}
        self.pi: Dict[str, int] = {}
        self.z: Dict[Tuple[str, int], int] = {}
        self.eps: Dict[Tuple[int, int], int] = {}
        self.theta: Dict[Tuple[str, int], int] = {}
        self.rho = 0


def _occupant_load(instance):
    ns = instance.n_shifts
    beds = defaultdict(int)
    work = defaultdict(int)
    for p in instance.occupants:
        for d in instance.stay_days(p, 0):
            beds[d] += 1
            for s in range(ns):
                work[d, s] += p.workload_at(d, s, ns)
    return beds, work


def nurse_capacity(instance):
    cap = defaultdict(int)
    for n in instance.nurses:
        for key, k in n.roster.items():
            cap[key] += k
    return cap


def min_theaters(instance, day, minutes):
    """Fewest theaters whose capacity on ``day`` sums to at least ``minutes``."""
    if minutes <= 0:
        return ()
    caps = sorted(((o.capacity[day], o.id) for o in instance.theaters if o.capacity[day] > 0),
                  key=lambda t: (-t[0], t[1]))
    out, total = [], 0
    for k, oid in caps:
        out.append(oid)
        total += k
        if total >= minutes:
            return tuple(out)
    return None


def build_admission_model(instance: Instance, windows, care_bounds, rho=0) -> AdmissionModel:
    """Admission MIP with aggregated bed capacity reduced by ``rho``."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if instance.total_beds < rho:
        raise DegenerateCapacityError(f"rho={rho} exceeds total bed capacity {instance.total_beds}")
    w = instance.weights
    ns = instance.n_shifts
    m = AdmissionModel(f"admission_rho{rho}")
    m.rho = rho
    offset = care_bounds.occupant_offset() if hasattr(care_bounds, "occupant_offset") else 0
    if offset == UNCOVERABLE:
        raise InstanceError("an occupant's stay has a shift with no working nurse")
    m.objective_offset = float(offset)

    for p in instance.flexible:
        days = [d for d in windows.get(p.id, ()) if care_bounds[p.id, d] != UNCOVERABLE]
        if p.is_mandatory and not days:
            raise InstanceError(f"mandatory patient {p.id} has an empty window")
        for d in days:
            cost = care_bounds[p.id, d] + w.delay * (d - p.release_day)
            m.x[p.id, d] = m.add_var(f"x_{p.id}_{d}", milp.BINARY, obj=cost)
        if p.is_optional:
            m.pi[p.id] = m.add_var(f"pi_{p.id}", milp.BINARY, obj=w.unscheduled)
        row = {m.x[p.id, d]: 1 for d in days}
        if p.is_optional:
            row[m.pi[p.id]] = 1
        m.add_constr(row, "==", 1, f"assign_{p.id}")

    # presence z_{p,d} = sum of admissions covering d
    by_day = defaultdict(dict)
    for (pid, a), j in m.x.items():
        p = instance.patient_by_id[pid]
        for d in instance.stay_days(p, a):
            by_day[pid, d][j] = 1
    for (pid, d), row in sorted(by_day.items()):
        z = m.add_var(f"z_{pid}_{d}", milp.BINARY)
        m.z[pid, d] = z
        m.add_constr({**row, z: -1}, "==", 0, f"presence_{pid}_{d}")

    for u in instance.surgeons:
        for d in range(instance.days):
            row = {j: instance.patient_by_id[pid].surgery_duration for (pid, a), j in m.x.items()
                   if a == d and instance.patient_by_id[pid].surgeon == u.id}
            if row and sum(row.values()) > u.capacity[d]:
                m.add_constr(row, "<=", u.capacity[d], f"surgeon_{u.id}_{d}")

    for d in range(instance.days):
        demand = {j: instance.patient_by_id[pid].surgery_duration for (pid, a), j in m.x.items() if a == d}
        if not demand:
            continue
        row = {j: -t for j, t in demand.items()}
        for o in instance.theaters:
            if o.capacity[d] > 0:
                m.theta[o.id, d] = m.add_var(f"theta_{o.id}_{d}", milp.BINARY, obj=w.open_theater)
                row[m.theta[o.id, d]] = o.capacity[d]
        m.add_constr(row, ">=", 0, f"theater_{d}")

    occ_beds, occ_work = _occupant_load(instance)
    cap = nurse_capacity(instance)
    for d in range(instance.days):
        row = {z: 1 for (pid, dd), z in m.z.items() if dd == d}
        limit = instance.total_beds - rho - occ_beds[d]
        if row or limit < 0:
            m.add_constr(row, "<=", limit, f"beds_{d}")
    for d in range(instance.days):
        for s in range(ns):
            row = {}
            for (pid, a), j in m.x.items():
                t = instance.patient_by_id[pid].workload_at(d - a, s, ns)
                if t:
                    row[j] = -t
            rhs = occ_work[d, s] - cap[d, s]
            if not row and rhs <= 0:
                continue
            e = m.add_var(f"eps_{d}_{s}", milp.CONTINUOUS, obj=w.excess_workload)
            m.eps[d, s] = e
            row[e] = 1
            m.add_constr(row, ">=", rhs, f"excess_{d}_{s}")
    return m


def admission_terms(instance: Instance, care_bounds, admitted: Mapping[str, int]):
    """Weighted terms of the admission objective with the admission vector fixed.

    Excess and theater terms take their smallest values consistent with the
    vector.  Returns ``None`` when the vector breaks a mandatory admission,
    surgeon capacity or theater capacity.  Bed capacity (and so ``rho``) is
    not checked here.
    """
    w = instance.weights
    ns = instance.n_shifts
    terms = dict(occupant_care=care_bounds.occupant_offset() if hasattr(care_bounds, "occupant_offset") else 0,
                 care=0, delay=0, unscheduled=0, excess_workload=0, open_theaters=0)
    surgery = defaultdict(int)
    per_surgeon = defaultdict(int)
    work = defaultdict(int)
    for p in instance.flexible:
        d = admitted.get(p.id)
        if d is None:
            if p.is_mandatory:
                return None
            terms["unscheduled"] += w.unscheduled
            continue
        terms["care"] += care_bounds[p.id, d]
        terms["delay"] += w.delay * (d - p.release_day)
        surgery[d] += p.surgery_duration
        per_surgeon[p.surgeon, d] += p.surgery_duration
        for dd in instance.stay_days(p, d):
            for s in range(ns):
                work[dd, s] += p.workload_at(dd - d, s, ns)
    for (u, d), t in per_surgeon.items():
        if t > instance.surgeon_by_id[u].capacity[d]:
            return None
    for d, t in surgery.items():
        opened = min_theaters(instance, d, t)
        if opened is None:
            return None
        terms["open_theaters"] += w.open_theater * len(opened)
    _, occ_work = _occupant_load(instance)
    cap = nurse_capacity(instance)
    for d in range(instance.days):
        for s in range(ns):
            terms["excess_workload"] += w.excess_workload * max(0, work[d, s] + occ_work[d, s] - cap[d, s])
    return terms


def admission_objective(instance: Instance, care_bounds, admitted: Mapping[str, int]):
    """Exact admission objective of a fixed vector (``inf`` if it breaks capacity)."""
    terms = admission_terms(instance, care_bounds, admitted)
    return math.inf if terms is None else sum(terms.values())


def beds_ok(instance: Instance, admitted: Mapping[str, int], rho=0):
    occ_beds, _ = _occupant_load(instance)
    use = defaultdict(int, occ_beds)
    for pid, a in admitted.items():
        p = instance.patient_by_id[pid]
        if p.is_occupant:
            continue
        for d in instance.stay_days(p, a):
            use[d] += 1
    return all(v <= instance.total_beds - rho for v in use.values())


def decode(model: AdmissionModel, instance: Instance, values, objective) -> AdmissionSolution:
    admitted = {pid: d for (pid, d), j in model.x.items() if values[j] > 0.5}
    postponed = frozenset(p.id for p in instance.optional if p.id not in admitted)
    opened = defaultdict(list)
    for (oid, d), j in model.theta.items():
        if values[j] > 0.5:
            opened[d].append(oid)
    return AdmissionSolution(admitted, postponed, {d: tuple(v) for d, v in sorted(opened.items())},
                             float(objective), model.rho)


def warm_start_values(model: AdmissionModel, instance: Instance, admitted: Mapping[str, int]):
    """Full variable vector for ``admitted``, or ``None`` if it lies outside the model."""
    if any(k not in model.x for k in admitted.items()):
        return None
    ns = instance.n_shifts
    vals = {j: 0.0 for j in range(len(model.variables))}
    for key in admitted.items():
        vals[model.x[key]] = 1.0
    for pid, j in model.pi.items():
        vals[j] = 0.0 if pid in admitted else 1.0
    for (pid, d), j in model.z.items():
        a = admitted.get(pid)
        if a is not None and d in instance.stay_days(instance.patient_by_id[pid], a):
            vals[j] = 1.0
    surgery = defaultdict(int)
    for pid, a in admitted.items():
        surgery[a] += instance.patient_by_id[pid].surgery_duration
    for d, t in surgery.items():
        opened = min_theaters(instance, d, t)
        if opened is None:
            return None
        for oid in opened:
            if (oid, d) in model.theta:
                vals[model.theta[oid, d]] = 1.0
    _, occ_work = _occupant_load(instance)
    cap = nurse_capacity(instance)
    for (d, s), j in model.eps.items():
        load = occ_work[d, s] + sum(instance.patient_by_id[pid].workload_at(d - a, s, ns)
                                    for pid, a in admitted.items())
        vals[j] = float(max(0, load - cap[d, s]))
    return vals


def _nogood(model: AdmissionModel, instance: Instance, values):
    """Row excluding exactly the admission vector encoded in ``values``."""
    ones = [j for j in model.x.values() if values[j] > 0.5]
    ones += [j for j in model.pi.values() if values[j] > 0.5]
    return {j: 1 for j in ones}, len(ones) - 1


def _ceil_bound(b):
    if b is None or b == math.inf:
        return b
    return math.ceil(b - 1e-6)


@dataclass
class AdmissionRun:
    dual_bound: Optional[float]
    status: str
    found: int = 0
    exhausted: bool = False
    pruned: bool = False


def run_admission(instance: Instance, windows, care_bounds, rho, limits: Optional[milp.Limits], sink,
                  cancel: Optional[milp.CancelToken] = None, warm_start: Optional[Mapping[str, int]] = None,
                  enumerate_all=False, prune: Optional[Callable[[float], bool]] = None,
                  throttle: Optional[Callable[[], bool]] = None, model: Optional[AdmissionModel] = None) -> AdmissionRun:
    """Solve the admission MIP and push every incumbent to ``sink``.

    ``sink`` is a callable or has ``put``.  With ``enumerate_all`` the model is
    re-solved after cutting off each optimum, so admissions come out in
    nondecreasing objective order until the space is exhausted, ``prune``
    returns true for the next optimum, time runs out or ``cancel`` fires.
    ``throttle`` is polled between re-solves and blocks while downstream is busy.

    Returns the dual bound of the uncut model (rounded up; all objective
    coefficients are integers).
    """
    put = sink if callable(sink) else sink.put
    m = model or build_admission_model(instance, windows, care_bounds, rho)
    if warm_start is not None:
        ws = warm_start_values(m, instance, warm_start)
        if ws is not None:
            m.warm_start = ws
    start = time.monotonic()
    wall = limits.wall_time if limits else None
    found = [0]

    def push(values, obj):
        found[0] += 1
        sol = decode(m, instance, values, obj)
        exact = admission_objective(instance, care_bounds, sol.admitted)
        put(replace(sol, bound_contribution=float(exact if exact < math.inf else obj)))

    session = milp.get_backend().build(m)
    out = session.solve(limits, on_incumbent=push, cancel=cancel)
    if out.status == milp.INFEASIBLE:
        raise AdmissionInfeasible(rho)
    bound = _ceil_bound(out.dual_bound)
    res = AdmissionRun(bound, out.status, found[0])
    if not enumerate_all or out.status != milp.OPTIMAL:
        return res
    m.warm_start = {}
    while True:
        if cancel is not None and cancel.cancelled:
            return res
        if throttle is not None:
            throttle()
            if cancel is not None and cancel.cancelled:
                return res
        left = None
        if wall is not None:
            left = wall - (time.monotonic() - start)
            if left <= 0:
                return res
        row, rhs = _nogood(m, instance, out.values)
        session.add_constraint(row, "<=", rhs)
        out = session.solve(milp.Limits(wall_time=left), cancel=cancel)
        if out.status == milp.INFEASIBLE:
            res.exhausted = True
            return res
        if not out.has_solution:
            return res
        if prune is not None and out.status == milp.OPTIMAL and prune(out.objective):
            res.pruned = True
            return res
        for values, obj in out.incumbents:
            push(values, obj)
        res.found = found[0]
        if out.status != milp.OPTIMAL:
            return res
