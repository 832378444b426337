"""Seeded synthetic instances.

Every mandatory patient and occupant is placed in a hidden witness schedule
(day, room, theater) while generating, and capacities are raised to fit it.
With ``tightness <= 0.5`` the witness is always kept, so a feasible schedule
exists; above that, mandatory patients whose witness placement fails are
turned optional instead of growing capacities, and nurse capacity shrinks.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .model import (
    MANDATORY,
    OCCUPANT,
    OPTIONAL,
    Instance,
    Nurse,
    Patient,
    Room,
    Surgeon,
    Theater,
    Weights,
)

SHIFTS = ("early", "late", "night")
AGE_NAMES = ("infant", "youth", "adult", "elderly", "senior")
GENDERS = ("A", "B")


@dataclass
class GenParams:
    patients: int = 4
    days: int = 5
    rooms: int = 2
    nurses: int = 3
    occupants: int = 0
    theaters: int = 2
    surgeons: int = 2
    age_groups: int = 3
    skill_levels: int = 3
    max_stay: int = 3
    room_capacity: int = 2
    mandatory_share: float = 0.5
    tightness: float = 0.3
    shifts_per_nurse_day: int = 1
    seed: int = 0

    def check(self):
        if self.days < 1:
            raise ValueError("days must be at least 1")
        if min(self.patients, self.occupants, self.rooms, self.nurses) < 0:
            raise ValueError("counts must be nonnegative")
        if self.patients and (self.surgeons < 1 or self.theaters < 1):
            raise ValueError("patients need at least one surgeon and one theater")
        if self.occupants and self.rooms < 1:
            raise ValueError("occupants need a room")
        if self.occupants > self.rooms * self.room_capacity:
            raise ValueError("more occupants than beds")
        if self.nurses < 1 and (self.patients or self.occupants):
            raise ValueError("patients need at least one nurse")
        if not 0.0 <= self.tightness <= 1.0:
            raise ValueError("tightness must lie in [0, 1]")
        if not 1 <= self.age_groups <= len(AGE_NAMES):
            raise ValueError(f"age_groups must lie in 1..{len(AGE_NAMES)}")
        if self.skill_levels < 1 or self.max_stay < 1 or self.room_capacity < 1:
            raise ValueError("skill levels, stay and room capacity must be positive")
        if not 1 <= self.shifts_per_nurse_day <= len(SHIFTS):
            raise ValueError("shifts_per_nurse_day must lie in 1..3")


def _profile(rng, stay, ns, skill_levels, tight):
    work = tuple(rng.randint(1, 4 + int(6 * tight)) for _ in range(stay * ns))
    skill = tuple(rng.randrange(skill_levels) for _ in range(stay * ns))
    return work, skill


def generate(params: GenParams = None, **knobs) -> Instance:
    """Instance from ``params`` (or keyword knobs overriding the defaults)."""
    if params is None:
        params = GenParams(**knobs)
    elif knobs:
        raise TypeError("pass either params or knobs")
    params.check()
    g = params
    rng = random.Random(g.seed)
    ns = len(SHIFTS)
    D = g.days
    tight = g.tightness
    keep_witness = tight <= 0.5

    room_ids = [f"r{i}" for i in range(g.rooms)]
    cap = {r: rng.randint(1, g.room_capacity) for r in room_ids}
    grid = {(r, d): [] for r in room_ids for d in range(D)}

    def fits(r, gender, days):
        return all(len(grid[r, d]) < cap[r] and all(x == gender for x in grid[r, d]) for d in days)

    patients = []
    for i in range(g.occupants):
        stay = rng.randint(1, g.max_stay)
        gender = rng.choice(GENDERS)
        days = range(0, min(stay, D))
        rooms = [r for r in room_ids if fits(r, gender, days)]
        if not rooms:
            continue
        r = rng.choice(rooms)
        for d in days:
            grid[r, d].append(gender)
        work, skill = _profile(rng, stay, ns, g.skill_levels, tight)
        patients.append(Patient(f"a{i}", OCCUPANT, gender, rng.randrange(g.age_groups), stay, work, skill,
                                fixed_room=r))

    surgeon_ids = [f"s{i}" for i in range(g.surgeons)]
    theater_ids = [f"t{i}" for i in range(g.theaters)]
    base_surgeon = int(240 * (1.2 - tight))
    base_theater = int(300 * (1.2 - tight))
    s_cap = {(u, d): (base_surgeon if rng.random() > 0.15 * tight else 0) for u in surgeon_ids for d in range(D)}
    t_cap = {(o, d): (base_theater if rng.random() > 0.2 * tight else 0) for o in theater_ids for d in range(D)}
    s_use = {k: 0 for k in s_cap}
    t_use = {k: 0 for k in t_cap}

    for i in range(g.patients):
        stay = rng.randint(1, g.max_stay)
        gender = rng.choice(GENDERS)
        age = rng.randrange(g.age_groups)
        surgeon = rng.choice(surgeon_ids)
        dur = rng.choice((30, 60, 90, 120, 150))
        incompat = frozenset(r for r in room_ids if len(room_ids) > 1 and rng.random() < 0.15)
        work, skill = _profile(rng, stay, ns, g.skill_levels, tight)
        mandatory = rng.random() < g.mandatory_share
        release = rng.randrange(D)
        kind = OPTIONAL
        deadline = None
        if mandatory:
            placed = False
            for _ in range(20):
                d = rng.randint(release, min(D - 1, release + 2))
                days = range(d, min(d + stay, D))
                rooms = [r for r in room_ids if r not in incompat and fits(r, gender, days)]
                if not rooms:
                    continue
                o = max(theater_ids, key=lambda o: (t_cap[o, d] - t_use[o, d], o))
                if not keep_witness and (s_use[surgeon, d] + dur > s_cap[surgeon, d]
                                         or t_use[o, d] + dur > t_cap[o, d]):
                    continue
                r = rng.choice(rooms)
                for dd in days:
                    grid[r, dd].append(gender)
                s_use[surgeon, d] += dur
                t_use[o, d] += dur
                s_cap[surgeon, d] = max(s_cap[surgeon, d], s_use[surgeon, d])
                t_cap[o, d] = max(t_cap[o, d], t_use[o, d])
                deadline = rng.randint(d, min(D - 1, d + 2))
                release = min(release, d)
                kind = MANDATORY
                placed = True
                break
            if not placed:
                kind = OPTIONAL
        patients.append(Patient(f"p{i}", kind, gender, age, stay, work, skill, surgeon=surgeon,
                                release_day=release, deadline=deadline, surgery_duration=dur,
                                incompatible_rooms=incompat))

    nurses = []
    load_cap = max(1, int(round(12 * (1.1 - tight))))
    rosters = [dict() for _ in range(g.nurses)]
    for i in range(g.nurses):
        for d in range(D):
            if rng.random() < 0.2:
                continue
            for s in rng.sample(range(ns), g.shifts_per_nurse_day):
                rosters[i][d, s] = load_cap + rng.randint(0, 4)
    if g.nurses:
        for d in range(D):
            for s in range(ns):
                if not any((d, s) in r for r in rosters):
                    i = rng.randrange(g.nurses)
                    rosters[i][d, s] = load_cap + rng.randint(0, 4)
    for i, r in enumerate(rosters):
        nurses.append(Nurse(f"n{i}", rng.randrange(g.skill_levels), r))

    weights = Weights(
        unscheduled=rng.randint(20, 120),
        delay=rng.randint(1, 10),
        open_theater=rng.randint(5, 40),
        surgeon_transfer=rng.randint(1, 10),
        age_mix=rng.randint(1, 10),
        excess_workload=rng.randint(1, 5),
        continuity=rng.randint(1, 10),
        skill=rng.randint(1, 10),
    )
    return Instance(
        days=D,
        shift_types=SHIFTS,
        age_groups=AGE_NAMES[: g.age_groups],
        weights=weights,
        patients=tuple(patients),
        nurses=tuple(nurses),
        surgeons=tuple(Surgeon(u, tuple(s_cap[u, d] for d in range(D))) for u in surgeon_ids),
        rooms=tuple(Room(r, cap[r]) for r in room_ids),
        theaters=tuple(Theater(o, tuple(t_cap[o, d] for d in range(D))) for o in theater_ids),
        skill_levels=g.skill_levels,
        name=f"gen-{g.seed}",
    )
