"""Patient-to-room assignment by depth-first branch and bound.

Each present patient occupies one room for their whole stay.  Per (room, day)
the search keeps the head count, the gender in use and the age range, so both
feasibility (capacity, single gender, incompatible rooms) and the age-mix cost
are maintained incrementally.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

from .model import Instance

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
TIMEOUT = "timeout"


@dataclass
class RoomSolution:
    admission: Mapping[str, int]
    room: Mapping[str, str]
    age_mix_cost: int
    source: object = None
    theater: Mapping[str, str] = field(default_factory=dict)
    theater_cost: int = 0


@dataclass
class RoomSearchResult:
    status: str
    solutions: List[RoomSolution]
    optimal: bool = False
    nodes: int = 0

    @property
    def best(self):
        return self.solutions[0] if self.solutions else None


class _Cancelled(Exception):
    pass


class _Restart(Exception):
    pass


class RoomSearch:
    """One search over a fixed admission.

    ``admission`` maps admitted flexible patients to their day; occupants are
    added automatically.
    """

    def __init__(self, instance: Instance, admission: Mapping[str, int], max_solutions=8, seed=0,
                 restart_failures=50_000):
        self.inst = instance
        self.max_solutions = max_solutions
        self.rng = random.Random(seed)
        self.restart_failures = restart_failures
        rooms = instance.rooms
        self.R = len(rooms)
        self.cap = [r.capacity for r in rooms]
        rid = {r.id: i for i, r in enumerate(rooms)}
        self.rid = rid
        D = instance.days
        self.cnt = [[0] * D for _ in rooms]
        self.gen = [[None] * D for _ in rooms]
        self.lo = [[None] * D for _ in rooms]
        self.hi = [[None] * D for _ in rooms]
        self.used = [0] * self.R
        self.cost = 0
        self.full_adm = {p.id: 0 for p in instance.occupants}
        self.full_adm.update(admission)
        self.fixed: Dict[str, int] = {}
        self.infeasible_fixed = False
        for p in instance.occupants:
            r = rid[p.fixed_room]
            days = list(instance.stay_days(p, 0))
            if not self._fits(r, p.gender, days):
                self.infeasible_fixed = True
            self._place(r, p.gender, p.age_group, days)
            self.fixed[p.id] = r
        pats = []
        for pid, d in sorted(admission.items()):
            p = instance.patient_by_id[pid]
            days = list(instance.stay_days(p, d))
            cand = [i for i, r in enumerate(rooms) if r.id not in p.incompatible_rooms and r.capacity > 0]
            pats.append((pid, p.gender, p.age_group, days, cand))
        self.pats = pats
        # rooms are interchangeable if capacity and incompatibilities match and no occupant uses them
        occ_rooms = set(self.fixed.values())
        sig = {}
        for i, r in enumerate(rooms):
            if i in occ_rooms:
                sig[i] = ("occ", i)
            else:
                sig[i] = (r.capacity, tuple(k for k, q in enumerate(pats) if i not in q[4]))
        self.sig = sig
        self.assign: List[Optional[int]] = [None] * len(pats)
        self.best_cost = None
        self.found: List[RoomSolution] = []
        self.nodes = 0
        self.failures = 0
        self.deadline = None
        self.cancel = None
        self.tiebreak = None

    # state maintenance ---------------------------------------------------
    def _fits(self, r, g, days):
        cap = self.cap[r]
        cnt = self.cnt[r]
        gen = self.gen[r]
        for d in days:
            if cnt[d] >= cap or (gen[d] is not None and gen[d] != g):
                return False
        return True

    def _delta(self, r, a, days):
        lo = self.lo[r]
        hi = self.hi[r]
        inc = 0
        for d in days:
            l, h = lo[d], hi[d]
            if l is None:
                continue
            if a < l:
                inc += l - a
            elif a > h:
                inc += a - h
        return inc

    def _place(self, r, g, a, days):
        undo = []
        cnt, gen, lo, hi = self.cnt[r], self.gen[r], self.lo[r], self.hi[r]
        inc = 0
        for d in days:
            undo.append((d, gen[d], lo[d], hi[d]))
            cnt[d] += 1
            gen[d] = g
            if lo[d] is None:
                lo[d] = hi[d] = a
            elif a < lo[d]:
                inc += lo[d] - a
                lo[d] = a
            elif a > hi[d]:
                inc += a - hi[d]
                hi[d] = a
        self.cost += inc
        self.used[r] += 1
        return undo, inc

    def _unplace(self, r, undo, inc):
        cnt, gen, lo, hi = self.cnt[r], self.gen[r], self.lo[r], self.hi[r]
        for d, g, l, h in undo:
            cnt[d] -= 1
            gen[d] = g
            lo[d] = l
            hi[d] = h
        self.cost -= inc
        self.used[r] -= 1

    # search ----------------------------------------------------------------
    def _record(self):
        w = self.inst.weights.age_mix
        room_ids = [r.id for r in self.inst.rooms]
        room = {pid: room_ids[r] for pid, r in self.fixed.items()}
        for k, (pid, *_rest) in enumerate(self.pats):
            room[pid] = room_ids[self.assign[k]]
        self.best_cost = self.cost
        self.found.append(RoomSolution(dict(self.full_adm), room, w * self.cost))
        if len(self.found) > self.max_solutions:
            self.found.pop(0)

    def _check_limits(self):
        if self.cancel is not None and self.cancel.cancelled:
            raise _Cancelled
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise _Cancelled

    def _fail(self):
        self.failures += 1
        if self.fail_limit is not None and self.failures > self.fail_limit:
            raise _Restart

    def _dfs(self):
        self.nodes += 1
        if self.nodes & 255 == 0:
            self._check_limits()
        best = self.best_cost
        if best is not None and self.cost >= best:
            self._fail()
            return
        # propagate: domains and the largest forced cost increase
        pick = None
        pick_dom = None
        lower = 0
        for k, (pid, g, a, days, cand) in enumerate(self.pats):
            if self.assign[k] is not None:
                continue
            dom = []
            mn = None
            for r in cand:
                if self._fits(r, g, days):
                    inc = self._delta(r, a, days)
                    dom.append((inc, r))
                    if mn is None or inc < mn:
                        mn = inc
            if not dom:
                self._fail()
                return
            if mn > lower:
                lower = mn
            if pick is None or len(dom) < len(pick_dom):
                pick, pick_dom = k, dom
        if pick is None:
            self._record()
            return
        if best is not None and self.cost + lower >= best:
            self._fail()
            return
        pid, g, a, days, cand = self.pats[pick]
        if self.tiebreak is None:
            order = sorted(pick_dom, key=lambda t: (t[0], self.used[t[1]] == 0, t[1]))
        else:
            tb = {r: self.tiebreak.random() for _, r in pick_dom}
            order = sorted(pick_dom, key=lambda t: (t[0], self.used[t[1]] == 0, tb[t[1]]))
        tried_empty = set()
        for inc, r in order:
            if self.used[r] == 0:
                s = self.sig[r]
                if s in tried_empty:
                    continue
                tried_empty.add(s)
            if self.best_cost is not None and self.cost + inc >= self.best_cost:
                continue
            undo, inc2 = self._place(r, g, a, days)
            self.assign[pick] = r
            try:
                self._dfs()
            finally:
                self.assign[pick] = None
                self._unplace(r, undo, inc2)

    def run(self, wall_time=None, cancel=None) -> RoomSearchResult:
        if self.infeasible_fixed:
            return RoomSearchResult(INFEASIBLE, [], True, 0)
        self.deadline = time.monotonic() + wall_time if wall_time is not None else None
        self.cancel = cancel
        self.fail_limit = self.restart_failures
        complete = False
        while True:
            self.failures = 0
            try:
                self._dfs()
                complete = True
                break
            except _Cancelled:
                break
            except _Restart:
                self.fail_limit = self.fail_limit * 2
                self.tiebreak = random.Random(self.rng.random())
        sols = sorted(self.found, key=lambda s: s.age_mix_cost)
        if sols:
            return RoomSearchResult(FEASIBLE, sols, complete, self.nodes)
        return RoomSearchResult(INFEASIBLE if complete else TIMEOUT, [], complete, self.nodes)


def solve_rooms(instance: Instance, admission, limits=None, sink=None, max_solutions=8, seed=0,
                cancel=None) -> RoomSearchResult:
    """Search rooms for an admission (an ``AdmissionSolution`` or a day map).

    Solutions are pushed to ``sink`` best-first after the search stops.
    """
    days = admission.admitted if hasattr(admission, "admitted") else admission
    wall = getattr(limits, "wall_time", limits)
    res = RoomSearch(instance, days, max_solutions=max_solutions, seed=seed).run(wall, cancel)
    for s in res.solutions:
        s.source = admission
    if sink is not None:
        put = sink if callable(sink) else sink.put
        for s in res.solutions:
            put(s)
    return res
