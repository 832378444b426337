"""Slow reference implementations used to check the solver.

Everything here is deliberately naive and shares no code with the package
beyond the data classes.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict

from ihtc_solver.model import Schedule


def stay(inst, p, a):
    return range(a, min(a + p.length_of_stay, inst.days))


def present_nurses(inst, d, s):
    return [n for n in inst.nurses if (d, s) in n.roster]


def naive_cost(inst, sched):
    """The eight weighted components, in the order coc, unscheduled, excess, theaters, delay, age, skill, transfer."""
    w = inst.weights
    ns = len(inst.shift_types)
    pat = {p.id: p for p in inst.patients}
    nurse = {n.id: n for n in inst.nurses}
    unsched = sum(1 for p in inst.patients if p.kind == "optional" and p.id not in sched.admission)
    delay = sum(a - pat[i].release_day for i, a in sched.admission.items() if pat[i].kind != "occupant")
    opened = {(sched.admission[i], o) for i, o in sched.theater.items()}
    surg = defaultdict(set)
    for i, o in sched.theater.items():
        surg[pat[i].surgeon, sched.admission[i]].add(o)
    transfer = sum(len(v) - 1 for v in surg.values())
    age = 0
    for r in inst.rooms:
        for d in range(inst.days):
            groups = [pat[i].age_group for i, a in sched.admission.items()
                      if sched.room.get(i) == r.id and d in stay(inst, pat[i], a)]
            if groups:
                age += max(groups) - min(groups)
    carers = defaultdict(set)
    load = defaultdict(int)
    skill = 0
    for i, a in sched.admission.items():
        p = pat[i]
        for d in stay(inst, p, a):
            for s in range(ns):
                n = sched.roster[sched.room[i], d, s]
                carers[i].add(n)
                load[n, d, s] += p.workload[(d - a) * ns + s]
                skill += max(0, p.skill[(d - a) * ns + s] - nurse[n].skill)
    excess = sum(max(0, v - nurse[n].roster[d, s]) for (n, d, s), v in load.items())
    coc = sum(len(v) for v in carers.values())
    return (w.continuity * coc, w.unscheduled * unsched, w.excess_workload * excess, w.open_theater * len(opened),
            w.delay * delay, w.age_mix * age, w.skill * skill, w.surgeon_transfer * transfer)


# ---------------------------------------------------------------- rooms
def room_assignments(inst, admission):
    """Yield every hard-feasible full room map (occupants included) for an admission."""
    pat = {p.id: p for p in inst.patients}
    adm = dict(admission)
    fixed = {p.id: p.fixed_room for p in inst.patients if p.kind == "occupant"}
    for p in inst.patients:
        if p.kind == "occupant":
            adm[p.id] = 0
    free = sorted(i for i in adm if i not in fixed)
    rooms = [r.id for r in inst.rooms]
    cap = {r.id: r.capacity for r in inst.rooms}
    for combo in itertools.product(rooms, repeat=len(free)):
        room = dict(fixed)
        room.update(zip(free, combo))
        if any(room[i] in pat[i].incompatible_rooms for i in free):
            continue
        ok = True
        for r in rooms:
            for d in range(inst.days):
                here = [i for i in adm if room[i] == r and d in stay(inst, pat[i], adm[i])]
                if len(here) > cap[r] or len({pat[i].gender for i in here}) > 1:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            yield room


def age_cost(inst, admission, room):
    pat = {p.id: p for p in inst.patients}
    adm = dict(admission)
    for p in inst.patients:
        if p.kind == "occupant":
            adm[p.id] = 0
    total = 0
    for r in inst.rooms:
        for d in range(inst.days):
            g = [pat[i].age_group for i in adm if room[i] == r.id and d in stay(inst, pat[i], adm[i])]
            if g:
                total += max(g) - min(g)
    return inst.weights.age_mix * total


def best_rooms(inst, admission):
    """Minimum weighted age-mix cost, or None when no room map is feasible."""
    costs = [age_cost(inst, admission, room) for room in room_assignments(inst, admission)]
    return min(costs) if costs else None


# ---------------------------------------------------------------- theaters
def brute_theater(inst, day, pids):
    """Minimum of open-theater cost plus surgeon incidences for one day, or None."""
    pat = {p.id: p for p in inst.patients}
    w = inst.weights
    best = None
    ths = inst.theaters
    for combo in itertools.product(range(len(ths)), repeat=len(pids)):
        use = defaultdict(int)
        for i, o in zip(pids, combo):
            use[o] += pat[i].surgery_duration
        if any(v > ths[o].capacity[day] for o, v in use.items()):
            continue
        inc = {(pat[i].surgeon, o) for i, o in zip(pids, combo)}
        cost = w.open_theater * len(use) + w.surgeon_transfer * len(inc)
        if best is None or cost < best:
            best = cost
    return best


# ---------------------------------------------------------------- care
def care_enumeration(inst, p, a):
    """Cheapest continuity plus skill cost for ``p`` alone, by enumerating a nurse per shift."""
    ns = len(inst.shift_types)
    w = inst.weights
    slots = [(d, s) for d in stay(inst, p, a) for s in range(ns)]
    options = [present_nurses(inst, d, s) for d, s in slots]
    if any(not o for o in options):
        return math.inf
    best = math.inf
    for combo in itertools.product(*options):
        gap = sum(max(0, p.skill[(d - a) * ns + s] - n.skill) for (d, s), n in zip(slots, combo))
        cost = w.continuity * len({n.id for n in combo}) + w.skill * gap
        best = min(best, cost)
    return best


def care_by_nurse_sets(inst, p, a):
    """Same minimum as ``care_enumeration``, walking shifts while tracking the set of nurses used so far."""
    ns = len(inst.shift_types)
    w = inst.weights
    states = {frozenset(): 0}
    for d in stay(inst, p, a):
        for s in range(ns):
            opts = present_nurses(inst, d, s)
            if not opts:
                return math.inf
            nxt = {}
            for used, cost in states.items():
                for n in opts:
                    key = used | {n.id}
                    c = cost + w.skill * max(0, p.skill[(d - a) * ns + s] - n.skill)
                    if c < nxt.get(key, math.inf):
                        nxt[key] = c
            states = nxt
    return min(cost + w.continuity * len(used) for used, cost in states.items())


def attributable_care(inst, sched, pid):
    """Continuity plus skill cost charged to one patient in a complete schedule."""
    p = next(q for q in inst.patients if q.id == pid)
    a = sched.admission[pid]
    ns = len(inst.shift_types)
    nurse = {n.id: n for n in inst.nurses}
    seen = set()
    gap = 0
    for d in stay(inst, p, a):
        for s in range(ns):
            n = sched.roster[sched.room[pid], d, s]
            seen.add(n)
            gap += max(0, p.skill[(d - a) * ns + s] - nurse[n].skill)
    return inst.weights.continuity * len(seen) + inst.weights.skill * gap


# ---------------------------------------------------------------- rosters
def _roster_slots(inst, admission, room):
    pat = {p.id: p for p in inst.patients}
    adm = dict(admission)
    for p in inst.patients:
        if p.kind == "occupant":
            adm[p.id] = 0
    ns = len(inst.shift_types)
    members = defaultdict(list)
    for i, a in adm.items():
        for d in stay(inst, pat[i], a):
            for s in range(ns):
                members[room[i], d, s].append((pat[i], d - a))
    return sorted(members), members


def roster_cost(inst, members, roster):
    w = inst.weights
    ns = len(inst.shift_types)
    nurse = {n.id: n for n in inst.nurses}
    load = defaultdict(int)
    pairs = set()
    skill = 0
    for (r, d, s), who in members.items():
        n = roster[r, d, s]
        for p, delta in who:
            load[n, d, s] += p.workload[delta * ns + s]
            skill += max(0, p.skill[delta * ns + s] - nurse[n].skill)
            pairs.add((n, p.id))
    excess = sum(max(0, v - nurse[n].roster[d, s]) for (n, d, s), v in load.items())
    return w.excess_workload * excess + w.continuity * len(pairs) + w.skill * skill


def enumerate_rosters(inst, admission, room):
    """(best nurse cost, best roster) over every roster, by plain enumeration."""
    slots, members = _roster_slots(inst, admission, room)
    options = [[n.id for n in present_nurses(inst, d, s)] for _, d, s in slots]
    best, arg = math.inf, None
    for combo in itertools.product(*options):
        roster = dict(zip(slots, combo))
        c = roster_cost(inst, members, roster)
        if c < best:
            best, arg = c, roster
    return best, arg


def roster_branch_and_bound(inst, admission, room, cutoff=math.inf):
    """Exact minimum nurse cost by depth-first search.

    Every cost term only grows as slots are filled, so the partial cost plus
    the cheapest skill cost of the open slots plus one continuity charge per
    patient who must meet a new nurse is a valid bound.  Untouched nurses with
    identical skill and roster are interchangeable, so only one is tried.
    """
    w = inst.weights
    ns = len(inst.shift_types)
    slots, members = _roster_slots(inst, admission, room)
    options = []
    for r, d, s in slots:
        opts = []
        for n in present_nurses(inst, d, s):
            gap = sum(max(0, p.skill[delta * ns + s] - n.skill) for p, delta in members[r, d, s])
            work = sum(p.workload[delta * ns + s] for p, delta in members[r, d, s])
            opts.append((w.skill * gap, n, work))
        opts.sort(key=lambda t: t[0])
        options.append(opts)
    tail = [0] * (len(slots) + 1)
    for k in range(len(slots) - 1, -1, -1):
        tail[k] = tail[k + 1] + options[k][0][0]
    visits = defaultdict(list)
    for k, (r, d, s) in enumerate(slots):
        for p, _ in members[r, d, s]:
            visits[p.id].append((k, {n.id for _, n, _ in options[k]}))
    signature = {n.id: (n.skill, tuple(sorted(n.roster.items()))) for n in inst.nurses}
    # per shift, total work is fixed, so its excess is at least the aggregate overflow
    work_at = defaultdict(int)
    last_slot = {}
    for k, (r, d, s) in enumerate(slots):
        work_at[d, s] += options[k][0][2]
        last_slot[d, s] = k
    overflow = {t: max(0, v - sum(n.roster[t] for n in present_nurses(inst, *t))) for t, v in work_at.items()}
    excess_at = defaultdict(int)
    best = [cutoff, None]
    load = defaultdict(int)
    pairs = defaultdict(int)
    contacts = defaultdict(set)
    used = defaultdict(int)
    chosen = [None] * len(slots)

    def excess_floor(k):
        return w.excess_workload * sum(max(0, overflow[t] - excess_at[t]) for t, j in last_slot.items() if j >= k)

    cover_memo = {}

    def min_cover(sets):
        if sets not in cover_memo:
            pool = sorted(set().union(*sets))
            size = next(r for r in range(1, len(pool) + 1)
                        if any(all(c & set(pick) for c in sets) for pick in itertools.combinations(pool, r)))
            cover_memo[sets] = size
        return cover_memo[sets]

    def coc_floor(k):
        # each patient meets at least as many new nurses as it takes to cover its open slots
        extra = 0
        for pid, vs in visits.items():
            c = contacts[pid]
            open_sets = frozenset(frozenset(cand) for j, cand in vs if j >= k and not (cand & c))
            if open_sets:
                extra += min_cover(open_sets)
        return w.continuity * extra

    def rec(k, cost):
        if cost + tail[k] >= best[0] or cost + tail[k] + excess_floor(k) + coc_floor(k) >= best[0]:
            return
        if k == len(slots):
            best[0] = cost
            best[1] = dict(zip(slots, chosen))
            return
        r, d, s = slots[k]
        fresh = set()
        for sk, n, work in options[k]:
            if used[n.id] == 0:
                if signature[n.id] in fresh:
                    continue
                fresh.add(signature[n.id])
            old = load[n.id, d, s]
            cap = n.roster[d, s]
            dx = max(0, old + work - cap) - max(0, old - cap)
            inc = sk + w.excess_workload * dx
            inc += w.continuity * sum(1 for p, _ in members[r, d, s] if pairs[n.id, p.id] == 0)
            load[n.id, d, s] = old + work
            excess_at[d, s] += dx
            used[n.id] += 1
            for p, _ in members[r, d, s]:
                pairs[n.id, p.id] += 1
                contacts[p.id].add(n.id)
            chosen[k] = n.id
            rec(k + 1, cost + inc)
            load[n.id, d, s] = old
            excess_at[d, s] -= dx
            used[n.id] -= 1
            for p, _ in members[r, d, s]:
                pairs[n.id, p.id] -= 1
                if pairs[n.id, p.id] == 0:
                    contacts[p.id].discard(n.id)

    rec(0, 0)
    return best[0], best[1]


# ---------------------------------------------------------------- whole problem
def admission_vectors(inst):
    """Every admission map meeting the mandatory, release, surgeon and theater-total rules."""
    flex = [p for p in inst.patients if p.kind != "occupant"]
    choices = []
    for p in flex:
        last = inst.days - 1 if p.deadline is None else min(p.deadline, inst.days - 1)
        opts = list(range(p.release_day, last + 1))
        if p.kind == "optional":
            opts.append(None)
        choices.append(opts)
    for combo in itertools.product(*choices):
        adm = {p.id: a for p, a in zip(flex, combo) if a is not None}
        use = defaultdict(int)
        for p in flex:
            if adm.get(p.id) is not None:
                use[p.surgeon, adm[p.id]] += p.surgery_duration
        surg = {u.id: u for u in inst.surgeons}
        if any(v > surg[u].capacity[d] for (u, d), v in use.items()):
            continue
        yield adm


def exhaustive_optimum(inst):
    """(optimal total, an optimal Schedule) by exhaustive search, or (inf, None)."""
    w = inst.weights
    pat = {p.id: p for p in inst.patients}
    care_min = {}

    def care(pid, a):
        if (pid, a) not in care_min:
            care_min[pid, a] = care_by_nurse_sets(inst, pat[pid], a)
        return care_min[pid, a]

    occ_care = sum(care(p.id, 0) for p in inst.patients if p.kind == "occupant")
    scored = []
    for adm in admission_vectors(inst):
        base = w.unscheduled * sum(1 for p in inst.patients if p.kind == "optional" and p.id not in adm)
        base += w.delay * sum(a - pat[i].release_day for i, a in adm.items())
        by_day = defaultdict(list)
        for i, a in adm.items():
            by_day[a].append(i)
        th = 0
        for d, ids in by_day.items():
            c = brute_theater(inst, d, sorted(ids))
            if c is None:
                th = None
                break
            th += c
        if th is None:
            continue
        surgeons_days = len({(pat[i].surgeon, a) for i, a in adm.items()})
        fixed = base + th - w.surgeon_transfer * surgeons_days
        floor = fixed + occ_care + sum(care(i, a) for i, a in adm.items())
        scored.append((floor, fixed, sorted(adm.items()), adm))
    scored.sort(key=lambda t: (t[0], t[2]))
    best, arg = math.inf, None
    for floor, fixed, _, adm in scored:
        if floor >= best:
            break
        for room in room_assignments(inst, adm):
            part = fixed + age_cost(inst, adm, room)
            if part >= best:
                continue
            nc, roster = roster_branch_and_bound(inst, adm, room, best - part)
            if roster is not None and part + nc < best:
                best = part + nc
                arg = (adm, room, roster)
    if arg is None:
        return math.inf, None
    adm, room, roster = arg
    theater = best_theater_map(inst, adm)
    full_adm = dict(adm)
    for p in inst.patients:
        if p.kind == "occupant":
            full_adm[p.id] = 0
    sched = Schedule(full_adm, dict(room), theater, roster)
    return best, sched


def best_theater_map(inst, adm):
    pat = {p.id: p for p in inst.patients}
    w = inst.weights
    out = {}
    by_day = defaultdict(list)
    for i, a in adm.items():
        by_day[a].append(i)
    for d, ids in by_day.items():
        ids = sorted(ids)
        best = None
        for combo in itertools.product(range(len(inst.theaters)), repeat=len(ids)):
            use = defaultdict(int)
            for i, o in zip(ids, combo):
                use[o] += pat[i].surgery_duration
            if any(v > inst.theaters[o].capacity[d] for o, v in use.items()):
                continue
            inc = {(pat[i].surgeon, o) for i, o in zip(ids, combo)}
            c = w.open_theater * len(use) + w.surgeon_transfer * len(inc)
            if best is None or c < best[0]:
                best = (c, combo)
        for i, o in zip(ids, best[1]):
            out[i] = inst.theaters[o].id
    return out


def knapsack_min_bins(sizes, capacities):
    """Fewest bins (given capacities) holding all sizes, or None."""
    n = len(capacities)
    best = None
    for combo in itertools.product(range(n), repeat=len(sizes)):
        use = [0] * n
        for s, b in zip(sizes, combo):
            use[b] += s
        if all(u <= c for u, c in zip(use, capacities)):
            k = sum(1 for u in use if u)
            best = k if best is None else min(best, k)
    return best
