"""Nurse-to-room rostering by simulated annealing with incremental evaluation.

Only the three nurse-dependent costs move: excess workload, continuity of care
and skill shortfall.  A move reassigns one occupied (room, day, shift) slot to
another nurse working that shift; ledgers of per-nurse loads and per
(nurse, patient) contact counts make each candidate's cost change O(patients
in the room).
"""
from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .model import HardInfeasibleError, Instance, Violation

LN2 = math.log(2.0)
NORM_LOW = 0.02


def initial_temperature(obj0) -> float:
    """Temperature at which a 5% worsening is accepted with probability 1/2."""
    if obj0 < 0:
        raise ValueError("obj0 must be nonnegative")
    return 0.05 * obj0 / LN2


def normalize(phi: Sequence[float]) -> List[float]:
    """Map scores linearly onto [0.02, 1.02], best (largest) to 1.02.

    With all scores equal every entry maps to 1.02, which gives uniform
    probabilities.
    """
    lo, hi = min(phi), max(phi)
    if hi == lo:
        return [1.0 + NORM_LOW] * len(phi)
    span = hi - lo
    return [(f - lo) / span + NORM_LOW for f in phi]


def probabilities(phi: Sequence[float]) -> List[float]:
    norm = normalize(phi)
    total = math.fsum(norm)
    return [v / total for v in norm]


@dataclass
class NeighborEvaluation:
    nurses: Tuple[str, ...]
    phi: Tuple[int, ...]
    phi_norm: Tuple[float, ...]
    prob: Tuple[float, ...]


class NurseProblem:
    """Fixed patient-day and patient-room data seen by the rostering stage."""

    def __init__(self, instance: Instance, admission: Mapping[str, int], room: Mapping[str, str]):
        self.inst = instance
        ns = instance.n_shifts
        self.ns = ns
        self.nurses = instance.nurses
        self.nidx = {n.id: i for i, n in enumerate(instance.nurses)}
        room_order = {r.id: i for i, r in enumerate(instance.rooms)}
        present = {}
        pids = []
        for pid, a in admission.items():
            p = instance.patient_by_id[pid]
            r = room[pid]
            k = len(pids)
            pids.append(pid)
            for d in instance.stay_days(p, a):
                for s in range(ns):
                    present.setdefault((r, d, s), []).append(
                        (k, p.workload_at(d - a, s, ns), p.skill_at(d - a, s, ns)))
        self.pids = pids
        self.slots = sorted(present, key=lambda t: (t[1], t[2], room_order[t[0]]))
        self.slot_index = {t: k for k, t in enumerate(self.slots)}
        self.members = [tuple(present[t]) for t in self.slots]
        self.work = [sum(w for _, w, _ in m) for m in self.members]
        self.time = [d * ns + s for _, d, s in self.slots]
        self.cand = []
        self.gap = []
        for k, (r, d, s) in enumerate(self.slots):
            c = tuple(self.nidx[n.id] for n in instance.nurses_present[d, s])
            if not c:
                raise HardInfeasibleError([Violation("h", r, f"no nurse works day {d} shift {s}")])
            self.cand.append(c)
            self.gap.append({i: sum(max(0, q - self.nurses[i].skill) for _, _, q in self.members[k]) for i in c})
        T = instance.days * ns
        self.cap = [[0] * T for _ in self.nurses]
        for i, n in enumerate(self.nurses):
            for (d, s), k in n.roster.items():
                self.cap[i][d * ns + s] = k
        w = instance.weights
        self.w_wkld, self.w_coc, self.w_skill = w.excess_workload, w.continuity, w.skill

    def roster_from_list(self, assigned: Sequence[int]) -> Dict[Tuple[str, int, int], str]:
        return {t: self.nurses[assigned[k]].id for k, t in enumerate(self.slots)}

    def list_from_roster(self, roster: Mapping) -> List[int]:
        return [self.nidx[roster[t]] for t in self.slots]

    def components(self, assigned: Sequence[int]):
        """(excess, distinct nurse-patient pairs, skill shortfall) from scratch."""
        load = {}
        pairs = set()
        skill = 0
        for k, n in enumerate(assigned):
            key = (n, self.time[k])
            load[key] = load.get(key, 0) + self.work[k]
            skill += self.gap[k][n]
            for p, _, _ in self.members[k]:
                pairs.add((n, p))
        excess = sum(max(0, l - self.cap[n][t]) for (n, t), l in load.items())
        return excess, len(pairs), skill

    def cost(self, assigned: Sequence[int]) -> int:
        e, c, s = self.components(assigned)
        return self.w_wkld * e + self.w_coc * c + self.w_skill * s

    def cost_of_roster(self, roster: Mapping) -> int:
        return self.cost(self.list_from_roster(roster))


class SaState:
    """Current assignment plus ledgers kept equal to a full recomputation."""

    def __init__(self, problem: NurseProblem, assigned: Sequence[int]):
        self.pb = problem
        N = len(problem.nurses)
        T = problem.inst.days * problem.ns
        self.assigned = list(assigned)
        self.load = [[0] * T for _ in range(N)]
        self.skill_sum = [[0] * T for _ in range(N)]
        self.contact = [dict() for _ in range(N)]
        self.excess = 0
        self.pairs = 0
        self.skill = 0
        for k, n in enumerate(self.assigned):
            self._add(k, n)

    def _add(self, k, n):
        pb = self.pb
        t = pb.time[k]
        cap = pb.cap[n][t]
        old = self.load[n][t]
        new = old + pb.work[k]
        self.excess += max(0, new - cap) - max(0, old - cap)
        self.load[n][t] = new
        g = pb.gap[k][n]
        self.skill_sum[n][t] += g
        self.skill += g
        cn = self.contact[n]
        for p, _, _ in pb.members[k]:
            c = cn.get(p, 0)
            if c == 0:
                self.pairs += 1
            cn[p] = c + 1

    def _remove(self, k, n):
        pb = self.pb
        t = pb.time[k]
        cap = pb.cap[n][t]
        old = self.load[n][t]
        new = old - pb.work[k]
        self.excess += max(0, new - cap) - max(0, old - cap)
        self.load[n][t] = new
        g = pb.gap[k][n]
        self.skill_sum[n][t] -= g
        self.skill -= g
        cn = self.contact[n]
        for p, _, _ in pb.members[k]:
            c = cn[p] - 1
            if c == 0:
                self.pairs -= 1
                del cn[p]
            else:
                cn[p] = c

    @property
    def objective(self):
        pb = self.pb
        return pb.w_wkld * self.excess + pb.w_coc * self.pairs + pb.w_skill * self.skill

    def delta(self, k, n) -> int:
        """Cost change if slot ``k`` switches to nurse ``n``."""
        c = self.assigned[k]
        if n == c:
            return 0
        pb = self.pb
        t = pb.time[k]
        w = pb.work[k]
        lc, kc = self.load[c][t], pb.cap[c][t]
        ln, kn = self.load[n][t], pb.cap[n][t]
        d_ex = (max(0, lc - w - kc) - max(0, lc - kc)) + (max(0, ln + w - kn) - max(0, ln - kn))
        cc, cn = self.contact[c], self.contact[n]
        d_coc = 0
        for p, _, _ in pb.members[k]:
            if cc[p] == 1:
                d_coc -= 1
            if p not in cn:
                d_coc += 1
        d_sk = pb.gap[k][n] - pb.gap[k][c]
        return pb.w_wkld * d_ex + pb.w_coc * d_coc + pb.w_skill * d_sk

    def move(self, k, n):
        c = self.assigned[k]
        if n == c:
            return
        self._remove(k, c)
        self._add(k, n)
        self.assigned[k] = n

    def ledgers_from_scratch(self):
        fresh = SaState(self.pb, self.assigned)
        return fresh.load, fresh.skill_sum, fresh.contact, (fresh.excess, fresh.pairs, fresh.skill)

    def ledgers(self):
        return self.load, self.skill_sum, self.contact, (self.excess, self.pairs, self.skill)


def evaluate_neighbors(state: SaState, k: int) -> NeighborEvaluation:
    """Score every nurse working slot ``k``; larger ``phi`` is better."""
    pb = state.pb
    cand = pb.cand[k]
    phi = [-state.delta(k, n) for n in cand]
    norm = normalize(phi)
    total = math.fsum(norm)
    return NeighborEvaluation(tuple(pb.nurses[n].id for n in cand), tuple(phi), tuple(norm),
                              tuple(v / total for v in norm))


def construct_initial(problem: NurseProblem) -> List[int]:
    """Greedy roster: fill shifts without excess, then give leftovers to the least loaded nurse."""
    pb = problem
    by_time = {}
    for k, t in enumerate(pb.time):
        by_time.setdefault(t, []).append(k)
    assigned: List[Optional[int]] = [None] * len(pb.slots)
    load = {}
    for i, n in enumerate(pb.nurses):
        for (d, s) in sorted(n.roster):
            t = d * pb.ns + s
            for k in by_time.get(t, ()):
                if assigned[k] is None and load.get((i, t), 0) + pb.work[k] <= pb.cap[i][t]:
                    assigned[k] = i
                    load[i, t] = load.get((i, t), 0) + pb.work[k]
    for k in range(len(pb.slots)):
        if assigned[k] is None:
            t = pb.time[k]
            i = min(pb.cand[k], key=lambda j: (load.get((j, t), 0), j))
            assigned[k] = i
            load[i, t] = load.get((i, t), 0) + pb.work[k]
    return assigned


@dataclass
class SaLimits:
    wall_time: Optional[float] = 15.0
    max_no_improve: int = 5000
    max_iterations: Optional[int] = None


@dataclass
class SaResult:
    roster: Dict[Tuple[str, int, int], str]
    cost: int
    initial_cost: int
    iterations: int


def _pick(rng, weights):
    x = rng.random() * math.fsum(weights)
    acc = 0.0
    for i, v in enumerate(weights):
        acc += v
        if x < acc:
            return i
    return len(weights) - 1


def anneal(instance: Instance, room_solution, limits: Optional[SaLimits] = None, seed=0, cooling=0.999,
           initial: Optional[Mapping] = None, cancel=None, problem: Optional[NurseProblem] = None) -> SaResult:
    """Anneal a roster for ``room_solution`` (anything with ``admission`` and ``room``)."""
    limits = limits or SaLimits()
    pb = problem or NurseProblem(instance, room_solution.admission, room_solution.room)
    start = pb.list_from_roster(initial) if initial is not None else construct_initial(pb)
    state = SaState(pb, start)
    obj0 = state.objective
    if not pb.slots:
        return SaResult({}, 0, 0, 0)
    rng = random.Random(seed)
    T = initial_temperature(obj0)
    cur = obj0
    best = obj0
    best_assign = list(state.assigned)
    stall = 0
    it = 0
    t_end = time.monotonic() + limits.wall_time if limits.wall_time is not None else None
    nslots = len(pb.slots)
    while stall < limits.max_no_improve:
        if limits.max_iterations is not None and it >= limits.max_iterations:
            break
        if it & 255 == 0 and ((t_end is not None and time.monotonic() >= t_end)
                              or (cancel is not None and cancel.cancelled)):
            break
        it += 1
        k = rng.randrange(nslots)
        cand = pb.cand[k]
        deltas = [state.delta(k, n) for n in cand]
        choice = _pick(rng, normalize([-d for d in deltas]))
        n_new = cand[choice]
        delta = deltas[choice]
        new = cur + delta
        stall += 1
        if new < best:
            best = new
            stall = 0
            state.move(k, n_new)
            cur = new
            best_assign = list(state.assigned)
        elif delta < 0:
            state.move(k, n_new)
            cur = new
        elif T > 0 and rng.random() < math.exp(-delta / T):
            state.move(k, n_new)
            cur = new
        T *= cooling
    return SaResult(pb.roster_from_list(best_assign), best, obj0, it)
