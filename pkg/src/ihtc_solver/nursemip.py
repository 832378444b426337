"""Exact nurse-to-room MIP used to polish annealed rosters."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

from . import milp
from .model import Instance
from .nursesa import NurseProblem


class NurseModel(milp.MilpModel):
    def __init__(self, name=""):
        super().__init__(name)
        self.x: Dict[Tuple[int, int], int] = {}      # (slot, nurse) -> var
        self.y: Dict[Tuple[int, int], int] = {}      # (nurse, patient) -> var
        self.eps: Dict[Tuple[int, int], int] = {}    # (nurse, time) -> var
        self.big_m: Dict[Tuple[int, int], int] = {}
        self.problem: Optional[NurseProblem] = None


def build_nurse_model(instance: Instance, room_solution, warm_start: Optional[Mapping] = None,
                      problem: Optional[NurseProblem] = None) -> NurseModel:
    pb = problem or NurseProblem(instance, room_solution.admission, room_solution.room)
    m = NurseModel("nurse")
    m.problem = pb
    for k, cand in enumerate(pb.cand):
        for n in cand:
            m.x[k, n] = m.add_var(f"x_{k}_{n}", milp.BINARY, obj=pb.w_skill * pb.gap[k][n])
        m.add_constr({m.x[k, n]: 1 for n in cand}, "==", 1, f"cover_{k}")
    # slots touching each (nurse, patient)
    touch = defaultdict(list)
    for (k, n), j in m.x.items():
        for p, _, _ in pb.members[k]:
            touch[n, p].append(j)
    for (n, p), js in sorted(touch.items()):
        y = m.add_var(f"y_{n}_{p}", milp.BINARY, obj=pb.w_coc)
        m.y[n, p] = y
        m.big_m[n, p] = len(js)
        row = {j: 1 for j in js}
        row[y] = -len(js)
        m.add_constr(row, "<=", 0, f"coc_{n}_{p}")
        for j in js:
            m.add_constr({j: 1, y: -1}, "<=", 0)
    by_time = defaultdict(dict)
    for (k, n), j in m.x.items():
        by_time[n, pb.time[k]][j] = pb.work[k]
    for (n, t), row in sorted(by_time.items()):
        if sum(row.values()) <= pb.cap[n][t]:
            continue
        e = m.add_var(f"eps_{n}_{t}", milp.CONTINUOUS, obj=pb.w_wkld)
        m.eps[n, t] = e
        r = {j: -w for j, w in row.items()}
        r[e] = 1
        m.add_constr(r, ">=", -pb.cap[n][t], f"excess_{n}_{t}")
    milp.solve_root_relaxation_barrier_hint(m)
    if warm_start is not None:
        m.warm_start = warm_values(m, pb.list_from_roster(warm_start))
    return m


def warm_values(m: NurseModel, assigned):
    pb = m.problem
    vals = {j: 0.0 for j in range(len(m.variables))}
    load = defaultdict(int)
    for k, n in enumerate(assigned):
        vals[m.x[k, n]] = 1.0
        load[n, pb.time[k]] += pb.work[k]
        for p, _, _ in pb.members[k]:
            vals[m.y[n, p]] = 1.0
    for (n, t), j in m.eps.items():
        vals[j] = float(max(0, load[n, t] - pb.cap[n][t]))
    return vals


def decode(m: NurseModel, values):
    pb = m.problem
    assigned = [None] * len(pb.slots)
    for (k, n), j in m.x.items():
        if values[j] > 0.5:
            assigned[k] = n
    return assigned


@dataclass
class PolishResult:
    roster: Dict[Tuple[str, int, int], str]
    cost: int
    improved: bool
    optimal: bool
    dual_bound: Optional[float] = None


def polish(instance: Instance, room_solution, roster: Mapping, limits: Optional[milp.Limits] = None,
           cancel=None) -> PolishResult:
    """Better of the given roster and the MIP's best incumbent."""
    pb = NurseProblem(instance, room_solution.admission, room_solution.room)
    base = pb.cost_of_roster(roster)
    if not pb.slots:
        return PolishResult({}, 0, False, True, 0.0)
    m = build_nurse_model(instance, room_solution, roster, problem=pb)
    out = milp.solve(m, limits, cancel=cancel)
    optimal = out.status == milp.OPTIMAL
    if out.has_solution:
        cand = decode(m, out.values)
        if None not in cand:
            cost = pb.cost(cand)
            if cost < base:
                return PolishResult(pb.roster_from_list(cand), cost, True, optimal, out.dual_bound)
    return PolishResult(dict(roster), base, False, optimal, out.dual_bound)
