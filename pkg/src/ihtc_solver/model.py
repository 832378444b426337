"""Domain types, hard-constraint checking and the soft-cost evaluator.

Days are 0-based internally (``0 .. days-1``), matching the file format.
Shifts are indices into ``Instance.shift_types``.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Mapping, NamedTuple, Optional, Tuple

OCCUPANT = "occupant"
MANDATORY = "mandatory"
OPTIONAL = "optional"

WEIGHT_KEYS = (
    "unscheduled",
    "delay",
    "open_theater",
    "surgeon_transfer",
    "age_mix",
    "excess_workload",
    "continuity",
    "skill",
)

COST_KEYS = (
    "coc",
    "unscheduled",
    "excess_workload",
    "open_theaters",
    "delay",
    "age_mix",
    "skill_mismatch",
    "surgeon_transfer",
)


class InstanceError(ValueError):
    """Base class for instance problems."""


class ParseError(InstanceError):
    def __init__(self, field_name, message):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class SemanticError(InstanceError):
    def __init__(self, entity, message):
        self.entity = entity
        super().__init__(f"{entity}: {message}")


class HardInfeasibleError(ValueError):
    """Raised when costs are requested for a schedule that breaks hard rules."""

    def __init__(self, violations):
        self.violations = list(violations)
        head = "; ".join(v.message for v in self.violations[:3])
        super().__init__(f"{len(self.violations)} hard violation(s): {head}")


@dataclass(frozen=True)
class Weights:
    unscheduled: int = 0
    delay: int = 0
    open_theater: int = 0
    surgeon_transfer: int = 0
    age_mix: int = 0
    excess_workload: int = 0
    continuity: int = 0
    skill: int = 0

    def as_dict(self):
        return {k: getattr(self, k) for k in WEIGHT_KEYS}


@dataclass(frozen=True)
class Patient:
    id: str
    kind: str
    gender: str
    age_group: int
    length_of_stay: int
    workload: Tuple[int, ...]
    skill: Tuple[int, ...]
    surgeon: Optional[str] = None
    release_day: Optional[int] = None
    deadline: Optional[int] = None
    surgery_duration: Optional[int] = None
    incompatible_rooms: frozenset = frozenset()
    fixed_room: Optional[str] = None

    @property
    def is_occupant(self):
        return self.kind == OCCUPANT

    @property
    def is_mandatory(self):
        return self.kind == MANDATORY

    @property
    def is_optional(self):
        return self.kind == OPTIONAL

    def workload_at(self, delta, shift, n_shifts=3):
        """Care minutes on stay day ``delta`` (0 outside the stay)."""
        if 0 <= delta < self.length_of_stay:
            return self.workload[delta * n_shifts + shift]
        return 0

    def skill_at(self, delta, shift, n_shifts=3):
        return self.skill[delta * n_shifts + shift]


@dataclass(frozen=True)
class Nurse:
    id: str
    skill: int
    roster: Mapping[Tuple[int, int], int]

    def works(self, day, shift):
        return (day, shift) in self.roster

    def capacity(self, day, shift):
        return self.roster.get((day, shift), 0)


@dataclass(frozen=True)
class Room:
    id: str
    capacity: int


@dataclass(frozen=True)
class Theater:
    id: str
    capacity: Tuple[int, ...]


@dataclass(frozen=True)
class Surgeon:
    id: str
    capacity: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Instance:
    days: int
    shift_types: Tuple[str, ...]
    age_groups: Tuple[str, ...]
    weights: Weights
    patients: Tuple[Patient, ...]
    nurses: Tuple[Nurse, ...]
    surgeons: Tuple[Surgeon, ...]
    rooms: Tuple[Room, ...]
    theaters: Tuple[Theater, ...]
    skill_levels: int = 3
    name: str = ""

    def __post_init__(self):
        validate_instance(self)

    @property
    def n_shifts(self):
        return len(self.shift_types)

    @cached_property
    def patient_by_id(self) -> Dict[str, Patient]:
        return {p.id: p for p in self.patients}

    @cached_property
    def nurse_by_id(self) -> Dict[str, Nurse]:
        return {n.id: n for n in self.nurses}

    @cached_property
    def room_by_id(self) -> Dict[str, Room]:
        return {r.id: r for r in self.rooms}

    @cached_property
    def theater_by_id(self) -> Dict[str, Theater]:
        return {t.id: t for t in self.theaters}

    @cached_property
    def surgeon_by_id(self) -> Dict[str, Surgeon]:
        return {u.id: u for u in self.surgeons}

    @cached_property
    def occupants(self):
        return tuple(p for p in self.patients if p.is_occupant)

    @cached_property
    def flexible(self):
        return tuple(p for p in self.patients if not p.is_occupant)

    @cached_property
    def mandatory(self):
        return tuple(p for p in self.patients if p.is_mandatory)

    @cached_property
    def optional(self):
        return tuple(p for p in self.patients if p.is_optional)

    @cached_property
    def nurses_present(self) -> Dict[Tuple[int, int], Tuple[Nurse, ...]]:
        """Nurses working each (day, shift), in instance order."""
        out = {(d, s): [] for d in range(self.days) for s in range(self.n_shifts)}
        for n in self.nurses:
            for key in n.roster:
                out[key].append(n)
        return {k: tuple(v) for k, v in out.items()}

    @property
    def total_beds(self):
        return sum(r.capacity for r in self.rooms)

    def stay_days(self, patient, admission_day):
        """Days on which a patient admitted on ``admission_day`` is present."""
        end = min(admission_day + patient.length_of_stay, self.days)
        return range(admission_day, end)

    def last_admission_day(self, patient):
        if patient.deadline is not None:
            return min(patient.deadline, self.days - 1)
        return self.days - 1


def validate_instance(inst: Instance):
    if inst.days < 1:
        raise SemanticError("days", "horizon must be at least one day")
    if len(set(inst.shift_types)) != len(inst.shift_types) or not inst.shift_types:
        raise SemanticError("shift_types", "shift types must be distinct and nonempty")
    for w in WEIGHT_KEYS:
        if getattr(inst.weights, w) < 0:
            raise SemanticError("weights", f"{w} must be nonnegative")
    for kind, items in (("patient", inst.patients), ("nurse", inst.nurses),
                        ("room", inst.rooms), ("theater", inst.theaters),
                        ("surgeon", inst.surgeons)):
        ids = [x.id for x in items]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise SemanticError(dup, f"duplicate {kind} id")
    rooms = {r.id for r in inst.rooms}
    surgeons = {u.id for u in inst.surgeons}
    for r in inst.rooms:
        if r.capacity < 0:
            raise SemanticError(r.id, "negative room capacity")
    for o in inst.theaters:
        if len(o.capacity) != inst.days:
            raise SemanticError(o.id, "theater availability must list every day")
    for u in inst.surgeons:
        if len(u.capacity) != inst.days:
            raise SemanticError(u.id, "surgeon capacity must list every day")
    n_s = inst.n_shifts
    for p in inst.patients:
        if p.length_of_stay < 1:
            raise SemanticError(p.id, "length of stay must be at least 1")
        if len(p.workload) != p.length_of_stay * n_s or len(p.skill) != p.length_of_stay * n_s:
            raise SemanticError(p.id, "workload/skill profile length must be length_of_stay * shifts")
        if not 0 <= p.age_group < len(inst.age_groups):
            raise SemanticError(p.id, "unknown age group")
        for r in p.incompatible_rooms:
            if r not in rooms:
                raise SemanticError(r, f"incompatible room of {p.id} does not exist")
        if p.is_occupant:
            if p.fixed_room not in rooms:
                raise SemanticError(p.fixed_room or p.id, f"room of occupant {p.id} does not exist")
            if p.surgeon is not None or p.surgery_duration is not None or p.release_day is not None:
                raise SemanticError(p.id, "occupants carry no surgery data")
            continue
        if p.kind not in (MANDATORY, OPTIONAL):
            raise SemanticError(p.id, f"unknown patient kind {p.kind!r}")
        if p.surgeon not in surgeons:
            raise SemanticError(p.surgeon or p.id, f"surgeon of {p.id} does not exist")
        if p.release_day is None or not 0 <= p.release_day < inst.days:
            raise SemanticError(p.id, "release day outside horizon")
        if p.surgery_duration is None or p.surgery_duration < 0:
            raise SemanticError(p.id, "missing surgery duration")
        if p.is_mandatory:
            if p.deadline is None:
                raise SemanticError(p.id, "mandatory patient needs a deadline")
            if p.deadline < p.release_day:
                raise SemanticError(p.id, "deadline before release day")
        elif p.deadline is not None:
            raise SemanticError(p.id, "optional patients have no deadline")
    for n in inst.nurses:
        for (d, s), cap in n.roster.items():
            if not (0 <= d < inst.days and 0 <= s < n_s):
                raise SemanticError(n.id, f"shift ({d}, {s}) outside horizon")
            if cap <= 0:
                raise SemanticError(n.id, "shift capacity must be positive")


@dataclass(frozen=True, eq=True)
class Schedule:
    """A complete candidate solution.

    ``admission`` lacks postponed patients; occupants are listed on day 0.
    ``roster`` maps ``(room, day, shift)`` to a nurse id.
    """

    admission: Mapping[str, int] = field(default_factory=dict)
    room: Mapping[str, str] = field(default_factory=dict)
    theater: Mapping[str, str] = field(default_factory=dict)
    roster: Mapping[Tuple[str, int, int], str] = field(default_factory=dict)

    @classmethod
    def build(cls, instance, admission, room, theater, roster):
        adm = dict(admission)
        rm = dict(room)
        for p in instance.occupants:
            adm[p.id] = 0
            rm[p.id] = p.fixed_room
        return cls(adm, rm, dict(theater), {k: v for k, v in roster.items() if v is not None})


@dataclass(frozen=True)
class CostBreakdown:
    coc: int = 0
    unscheduled: int = 0
    excess_workload: int = 0
    open_theaters: int = 0
    delay: int = 0
    age_mix: int = 0
    skill_mismatch: int = 0
    surgeon_transfer: int = 0

    @property
    def total(self):
        return sum(getattr(self, k) for k in COST_KEYS)

    @property
    def nurse_part(self):
        return self.coc + self.excess_workload + self.skill_mismatch

    def as_dict(self):
        out = {k: getattr(self, k) for k in COST_KEYS}
        out["total"] = self.total
        return out


class Violation(NamedTuple):
    rule: str
    entity: str
    message: str


def occupancy(instance, schedule):
    """Map ``(room, day)`` to the list of ``(patient, stay offset)`` present."""
    out = defaultdict(list)
    for pid, day in schedule.admission.items():
        p = instance.patient_by_id[pid]
        r = schedule.room.get(pid)
        if r is None:
            continue
        for d in instance.stay_days(p, day):
            out[r, d].append((p, d - day))
    return out


def check_hard(instance: Instance, schedule: Schedule) -> List[Violation]:
    """Return every hard-constraint violation (empty means feasible)."""
    v = []
    byid = instance.patient_by_id
    # structural consistency first; unknown ids make the rest meaningless
    for pid in schedule.admission:
        if pid not in byid:
            v.append(Violation("structure", pid, f"unknown patient {pid}"))
    for pid, r in schedule.room.items():
        if r not in instance.room_by_id:
            v.append(Violation("structure", r, f"patient {pid} in unknown room {r}"))
    for pid, o in schedule.theater.items():
        if o not in instance.theater_by_id:
            v.append(Violation("structure", o, f"patient {pid} in unknown theater {o}"))
    for (r, d, s), n in schedule.roster.items():
        if n not in instance.nurse_by_id:
            v.append(Violation("structure", n, f"unknown nurse {n}"))
        if r not in instance.room_by_id:
            v.append(Violation("structure", r, f"roster names unknown room {r}"))
    if v:
        return v

    for p in instance.patients:
        day = schedule.admission.get(p.id)
        if p.is_occupant:
            if day != 0 or schedule.room.get(p.id) != p.fixed_room:
                v.append(Violation("structure", p.id, f"occupant {p.id} must stay in {p.fixed_room} from day 0"))
            if p.id in schedule.theater:
                v.append(Violation("structure", p.id, f"occupant {p.id} has no surgery"))
            continue
        if day is None:
            if p.is_mandatory:
                v.append(Violation("a", p.id, f"mandatory patient {p.id} not admitted"))
            continue
        if not 0 <= day < instance.days:
            v.append(Violation("i", p.id, f"patient {p.id} admitted outside horizon"))
            continue
        if day < p.release_day:
            v.append(Violation("b", p.id, f"patient {p.id} admitted before release day"))
        if p.is_mandatory and day > p.deadline:
            v.append(Violation("a", p.id, f"patient {p.id} admitted after deadline"))
        if p.id not in schedule.room or p.id not in schedule.theater:
            v.append(Violation("structure", p.id, f"admitted patient {p.id} lacks room or theater"))
            continue
        if schedule.room[p.id] in p.incompatible_rooms:
            v.append(Violation("e", p.id, f"patient {p.id} in incompatible room {schedule.room[p.id]}"))
    for pid in schedule.room:
        if pid in byid and pid not in schedule.admission:
            v.append(Violation("structure", pid, f"postponed patient {pid} has a room"))
    for pid in schedule.theater:
        if pid in byid and pid not in schedule.admission:
            v.append(Violation("structure", pid, f"postponed patient {pid} has a theater"))

    occ = occupancy(instance, schedule)
    for (r, d), present in sorted(occ.items()):
        if len(present) > instance.room_by_id[r].capacity:
            v.append(Violation("c", r, f"room {r} over capacity on day {d}"))
        if len({p.gender for p, _ in present}) > 1:
            v.append(Violation("d", r, f"room {r} mixes genders on day {d}"))

    surgeon_use = defaultdict(int)
    theater_use = defaultdict(int)
    for pid, day in schedule.admission.items():
        p = byid[pid]
        if p.is_occupant or pid not in schedule.theater or not 0 <= day < instance.days:
            continue
        surgeon_use[p.surgeon, day] += p.surgery_duration
        theater_use[schedule.theater[pid], day] += p.surgery_duration
    for (u, d), t in sorted(surgeon_use.items()):
        if t > instance.surgeon_by_id[u].capacity[d]:
            v.append(Violation("f", u, f"surgeon {u} over capacity on day {d}"))
    for (o, d), t in sorted(theater_use.items()):
        if t > instance.theater_by_id[o].capacity[d]:
            v.append(Violation("g", o, f"theater {o} over capacity on day {d}"))

    for (r, d, s), n in schedule.roster.items():
        if not instance.nurse_by_id[n].works(d, s):
            v.append(Violation("h", n, f"nurse {n} does not work day {d} shift {s}"))
    for (r, d) in sorted(occ):
        for s in range(instance.n_shifts):
            if (r, d, s) not in schedule.roster:
                v.append(Violation("h", r, f"room {r} uncovered on day {d} shift {s}"))
    return v


def evaluate(instance: Instance, schedule: Schedule, check=True) -> CostBreakdown:
    """Weighted soft costs of a hard-feasible schedule."""
    if check:
        viol = check_hard(instance, schedule)
        if viol:
            raise HardInfeasibleError(viol)
    w = instance.weights
    ns = instance.n_shifts
    byid = instance.patient_by_id
    nurse = instance.nurse_by_id

    unscheduled = sum(1 for p in instance.optional if p.id not in schedule.admission)
    delay = sum(schedule.admission[p.id] - p.release_day
                for p in instance.flexible if p.id in schedule.admission)

    per_day = defaultdict(set)
    surgeon_rooms = defaultdict(set)
    for pid, o in schedule.theater.items():
        d = schedule.admission[pid]
        per_day[d].add(o)
        surgeon_rooms[byid[pid].surgeon, d].add(o)
    open_theaters = sum(len(s) for s in per_day.values())
    transfers = sum(len(s) - 1 for s in surgeon_rooms.values())

    occ = occupancy(instance, schedule)
    age_mix = 0
    load = defaultdict(int)
    skill = 0
    carers = defaultdict(set)
    for (r, d), present in occ.items():
        ages = [p.age_group for p, _ in present]
        age_mix += max(ages) - min(ages)
        for s in range(ns):
            n = schedule.roster[r, d, s]
            sk = nurse[n].skill
            for p, delta in present:
                load[n, d, s] += p.workload_at(delta, s, ns)
                skill += max(0, p.skill_at(delta, s, ns) - sk)
                carers[p.id].add(n)
    excess = sum(max(0, l - nurse[n].capacity(d, s)) for (n, d, s), l in load.items())
    coc = sum(len(v) for v in carers.values())

    return CostBreakdown(
        coc=w.continuity * coc,
        unscheduled=w.unscheduled * unscheduled,
        excess_workload=w.excess_workload * excess,
        open_theaters=w.open_theater * open_theaters,
        delay=w.delay * delay,
        age_mix=w.age_mix * age_mix,
        skill_mismatch=w.skill * skill,
        surgeon_transfer=w.surgeon_transfer * transfers,
    )
