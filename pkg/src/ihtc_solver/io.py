"""Instance and solution (de)serialization.

The canonical instance layout follows the competition JSON closely; the only
difference is the weight key names.  ``parse_instance`` accepts both spellings.
"""
from __future__ import annotations

import json
from typing import Any, Dict

from .model import (
    MANDATORY,
    OCCUPANT,
    OPTIONAL,
    WEIGHT_KEYS,
    Instance,
    Nurse,
    ParseError,
    Patient,
    Room,
    Schedule,
    SemanticError,
    Surgeon,
    Theater,
    Weights,
)

# competition key -> canonical key
OFFICIAL_WEIGHT_KEYS = {
    "unscheduled_optional": "unscheduled",
    "patient_delay": "delay",
    "open_operating_theater": "open_theater",
    "surgeon_transfer": "surgeon_transfer",
    "room_mixed_age": "age_mix",
    "nurse_eccessive_workload": "excess_workload",
    "continuity_of_care": "continuity",
    "room_nurse_skill": "skill",
}


def _get(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"{where}.{key}", "missing")
    val = obj[key]
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise ParseError(f"{where}.{key}", f"expected integer, got {val!r}")
    if kind is list and not isinstance(val, list):
        raise ParseError(f"{where}.{key}", "expected array")
    if kind is str and not isinstance(val, str):
        raise ParseError(f"{where}.{key}", "expected string")
    return val


def _int_list(obj, key, where):
    vals = _get(obj, key, list, where)
    for v in vals:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ParseError(f"{where}.{key}", f"expected integers, got {v!r}")
    return tuple(vals)


def adapt_official(doc: Dict[str, Any]) -> Dict[str, Any]:
    """Map competition weight names onto canonical ones (other keys match)."""
    weights = doc.get("weights")
    if isinstance(weights, dict) and any(k in OFFICIAL_WEIGHT_KEYS for k in weights) \
            and not all(k in weights for k in WEIGHT_KEYS):
        doc = dict(doc)
        doc["weights"] = {OFFICIAL_WEIGHT_KEYS.get(k, k): v for k, v in weights.items()}
    return doc


def instance_from_dict(doc: Dict[str, Any], name="") -> Instance:
    if not isinstance(doc, dict):
        raise ParseError("<root>", "expected a JSON object")
    doc = adapt_official(doc)
    days = _get(doc, "days", int, "instance")
    skill_levels = doc.get("skill_levels", 3)
    shift_types = tuple(_get(doc, "shift_types", list, "instance"))
    age_groups = tuple(_get(doc, "age_groups", list, "instance"))
    age_index = {a: i for i, a in enumerate(age_groups)}
    shift_index = {s: i for i, s in enumerate(shift_types)}
    wdoc = _get(doc, "weights", dict, "instance")
    weights = Weights(**{k: _get(wdoc, k, int, "weights") for k in WEIGHT_KEYS})

    def age_of(p, where):
        a = _get(p, "age_group", None, where)
        if a not in age_index:
            raise SemanticError(p.get("id", where), f"unknown age group {a!r}")
        return age_index[a]

    patients = []
    for i, p in enumerate(_get(doc, "occupants", list, "instance")):
        where = f"occupants[{i}]"
        patients.append(Patient(
            id=_get(p, "id", str, where),
            kind=OCCUPANT,
            gender=_get(p, "gender", str, where),
            age_group=age_of(p, where),
            length_of_stay=_get(p, "length_of_stay", int, where),
            workload=_int_list(p, "workload_produced", where),
            skill=_int_list(p, "skill_level_required", where),
            fixed_room=_get(p, "room_id", str, where),
        ))
    for i, p in enumerate(_get(doc, "patients", list, "instance")):
        where = f"patients[{i}]"
        mandatory = _get(p, "mandatory", None, where)
        if not isinstance(mandatory, bool):
            raise ParseError(f"{where}.mandatory", "expected boolean")
        patients.append(Patient(
            id=_get(p, "id", str, where),
            kind=MANDATORY if mandatory else OPTIONAL,
            gender=_get(p, "gender", str, where),
            age_group=age_of(p, where),
            length_of_stay=_get(p, "length_of_stay", int, where),
            workload=_int_list(p, "workload_produced", where),
            skill=_int_list(p, "skill_level_required", where),
            surgeon=_get(p, "surgeon_id", str, where),
            release_day=_get(p, "surgery_release_day", int, where),
            deadline=_get(p, "surgery_due_day", int, where) if mandatory else None,
            surgery_duration=_get(p, "surgery_duration", int, where),
            incompatible_rooms=frozenset(p.get("incompatible_room_ids", [])),
        ))
    surgeons = [
        Surgeon(_get(u, "id", str, f"surgeons[{i}]"), _int_list(u, "max_surgery_time", f"surgeons[{i}]"))
        for i, u in enumerate(_get(doc, "surgeons", list, "instance"))
    ]
    theaters = [
        Theater(_get(o, "id", str, f"operating_theaters[{i}]"),
                _int_list(o, "availability", f"operating_theaters[{i}]"))
        for i, o in enumerate(_get(doc, "operating_theaters", list, "instance"))
    ]
    rooms = [
        Room(_get(r, "id", str, f"rooms[{i}]"), _get(r, "capacity", int, f"rooms[{i}]"))
        for i, r in enumerate(_get(doc, "rooms", list, "instance"))
    ]
    nurses = []
    for i, n in enumerate(_get(doc, "nurses", list, "instance")):
        where = f"nurses[{i}]"
        nid = _get(n, "id", str, where)
        roster = {}
        for j, ws in enumerate(_get(n, "working_shifts", list, where)):
            w2 = f"{where}.working_shifts[{j}]"
            shift = _get(ws, "shift", str, w2)
            if shift not in shift_index:
                raise SemanticError(nid, f"unknown shift {shift!r}")
            key = (_get(ws, "day", int, w2), shift_index[shift])
            if key in roster:
                raise SemanticError(nid, f"duplicate working shift {key}")
            roster[key] = _get(ws, "max_load", int, w2)
        nurses.append(Nurse(nid, _get(n, "skill_level", int, where), roster))
    return Instance(
        days=days,
        shift_types=shift_types,
        age_groups=age_groups,
        weights=weights,
        patients=tuple(patients),
        nurses=tuple(nurses),
        surgeons=tuple(surgeons),
        rooms=tuple(rooms),
        theaters=tuple(theaters),
        skill_levels=skill_levels,
        name=name or doc.get("name", ""),
    )


def parse_instance(raw, name="") -> Instance:
    """Parse canonical (or competition) instance JSON from bytes or str."""
    if isinstance(raw, (bytes, bytearray)):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError("<json>", str(exc)) from exc
    return instance_from_dict(doc, name=name)


def instance_to_dict(inst: Instance) -> Dict[str, Any]:
    occupants, patients = [], []
    for p in inst.patients:
        if p.is_occupant:
            occupants.append({
                "id": p.id,
                "gender": p.gender,
                "age_group": inst.age_groups[p.age_group],
                "length_of_stay": p.length_of_stay,
                "workload_produced": list(p.workload),
                "skill_level_required": list(p.skill),
                "room_id": p.fixed_room,
            })
            continue
        d = {
            "id": p.id,
            "mandatory": p.is_mandatory,
            "gender": p.gender,
            "age_group": inst.age_groups[p.age_group],
            "length_of_stay": p.length_of_stay,
            "surgery_release_day": p.release_day,
        }
        if p.is_mandatory:
            d["surgery_due_day"] = p.deadline
        d.update({
            "surgery_duration": p.surgery_duration,
            "surgeon_id": p.surgeon,
            "incompatible_room_ids": sorted(p.incompatible_rooms),
            "workload_produced": list(p.workload),
            "skill_level_required": list(p.skill),
        })
        patients.append(d)
    nurses = []
    for n in inst.nurses:
        shifts = [{"day": d, "shift": inst.shift_types[s], "max_load": cap}
                  for (d, s), cap in sorted(n.roster.items())]
        nurses.append({"id": n.id, "skill_level": n.skill, "working_shifts": shifts})
    doc = {"name": inst.name} if inst.name else {}
    doc.update({
        "days": inst.days,
        "skill_levels": inst.skill_levels,
        "shift_types": list(inst.shift_types),
        "age_groups": list(inst.age_groups),
        "weights": inst.weights.as_dict(),
        "occupants": occupants,
        "patients": patients,
        "surgeons": [{"id": u.id, "max_surgery_time": list(u.capacity)} for u in inst.surgeons],
        "operating_theaters": [{"id": o.id, "availability": list(o.capacity)} for o in inst.theaters],
        "rooms": [{"id": r.id, "capacity": r.capacity} for r in inst.rooms],
        "nurses": nurses,
    })
    return doc


def dump_instance(inst: Instance) -> bytes:
    return (json.dumps(instance_to_dict(inst), indent=2) + "\n").encode("utf-8")


def solution_to_dict(instance: Instance, schedule: Schedule) -> Dict[str, Any]:
    patients = []
    for p in instance.flexible:
        if p.id in schedule.admission:
            patients.append({
                "id": p.id,
                "admission_day": schedule.admission[p.id],
                "room": schedule.room[p.id],
                "operating_theater": schedule.theater[p.id],
            })
        else:
            patients.append({"id": p.id, "admission_day": "none"})
    by_nurse = {n.id: {} for n in instance.nurses}
    room_order = {r.id: i for i, r in enumerate(instance.rooms)}
    for (r, d, s), n in schedule.roster.items():
        by_nurse[n].setdefault((d, s), []).append(r)
    nurses = []
    for n in instance.nurses:
        assignments = [
            {"day": d, "shift": instance.shift_types[s],
             "rooms": sorted(rooms, key=room_order.__getitem__)}
            for (d, s), rooms in sorted(by_nurse[n.id].items())
        ]
        nurses.append({"id": n.id, "assignments": assignments})
    return {"patients": patients, "nurses": nurses}


def write_solution(instance: Instance, schedule: Schedule) -> bytes:
    return (json.dumps(solution_to_dict(instance, schedule), indent=2) + "\n").encode("utf-8")


def read_solution(raw, instance: Instance) -> Schedule:
    if isinstance(raw, (bytes, bytearray)):
        raw = raw.decode("utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError("<json>", str(exc)) from exc
    return solution_from_dict(doc, instance)


def solution_from_dict(doc, instance: Instance) -> Schedule:
    if not isinstance(doc, dict):
        raise ParseError("<root>", "expected a JSON object")
    shift_index = {s: i for i, s in enumerate(instance.shift_types)}
    admission, room, theater, roster = {}, {}, {}, {}
    for i, p in enumerate(_get(doc, "patients", list, "solution")):
        where = f"patients[{i}]"
        pid = _get(p, "id", str, where)
        pat = instance.patient_by_id.get(pid)
        if pat is None or pat.is_occupant:
            raise SemanticError(pid, "unknown patient")
        day = _get(p, "admission_day", None, where)
        if day == "none":
            continue
        if isinstance(day, bool) or not isinstance(day, int):
            raise ParseError(f"{where}.admission_day", f"expected integer or 'none', got {day!r}")
        r = _get(p, "room", str, where)
        o = _get(p, "operating_theater", str, where)
        if r not in instance.room_by_id:
            raise SemanticError(r, "unknown room")
        if o not in instance.theater_by_id:
            raise SemanticError(o, "unknown operating theater")
        admission[pid] = day
        room[pid] = r
        theater[pid] = o
    for i, n in enumerate(_get(doc, "nurses", list, "solution")):
        where = f"nurses[{i}]"
        nid = _get(n, "id", str, where)
        if nid not in instance.nurse_by_id:
            raise SemanticError(nid, "unknown nurse")
        for j, a in enumerate(_get(n, "assignments", list, where)):
            w2 = f"{where}.assignments[{j}]"
            d = _get(a, "day", int, w2)
            s = _get(a, "shift", str, w2)
            if s not in shift_index:
                raise SemanticError(s, "unknown shift")
            for r in _get(a, "rooms", list, w2):
                if r not in instance.room_by_id:
                    raise SemanticError(r, "unknown room")
                key = (r, d, shift_index[s])
                if key in roster and roster[key] != nid:
                    raise SemanticError(r, f"two nurses in room {r} on day {d} shift {s}")
                roster[key] = nid
    return Schedule.build(instance, admission, room, theater, roster)
