"""Small hand-built instances shared by several test modules."""
from ihtc_solver.model import MANDATORY, OCCUPANT, OPTIONAL, Instance, Nurse, Patient, Room, Surgeon, Theater, Weights

SHIFTS = ("early", "late", "night")


def profile(stay, work=5, skill=0):
    return (work,) * (stay * 3), (skill,) * (stay * 3)


def all_shifts(days, cap=50):
    return {(d, s): cap for d in range(days) for s in range(3)}


def clash_instance(days=5, room_capacity=3, optional=3):
    """One room held by a male occupant all horizon, plus optional female patients.

    Any admitted female is room-infeasible, so admissions only become
    room-feasible once enough beds are withheld that nobody is admitted.
    """
    w, k = profile(days)
    patients = [Patient("a0", OCCUPANT, "M", 0, days, w, k, fixed_room="r0")]
    for i in range(optional):
        w1, k1 = profile(1)
        patients.append(Patient(f"f{i}", OPTIONAL, "F", 0, 1, w1, k1, surgeon="s0", release_day=0,
                                surgery_duration=30))
    return Instance(
        days=days, shift_types=SHIFTS, age_groups=("young", "old"),
        weights=Weights(unscheduled=1000, delay=1, open_theater=1, surgeon_transfer=1, age_mix=1,
                        excess_workload=1, continuity=1, skill=1),
        patients=tuple(patients),
        nurses=(Nurse("n0", 2, all_shifts(days)),),
        surgeons=(Surgeon("s0", (600,) * days),),
        rooms=(Room("r0", room_capacity),),
        theaters=(Theater("t0", (600,) * days),),
        name="gender-clash",
    )


def forced_clash_instance(days=3):
    """Two mandatory patients of different genders who must share the only room."""
    w, k = profile(1)
    patients = (
        Patient("m", MANDATORY, "M", 0, 1, w, k, surgeon="s0", release_day=0, deadline=0, surgery_duration=30),
        Patient("f", MANDATORY, "F", 0, 1, w, k, surgeon="s0", release_day=0, deadline=0, surgery_duration=30),
    )
    return Instance(
        days=days, shift_types=SHIFTS, age_groups=("young",),
        weights=Weights(unscheduled=10, delay=1, open_theater=1, surgeon_transfer=1, age_mix=1,
                        excess_workload=1, continuity=1, skill=1),
        patients=patients,
        nurses=(Nurse("n0", 2, all_shifts(days)),),
        surgeons=(Surgeon("s0", (600,) * days),),
        rooms=(Room("r0", 2),),
        theaters=(Theater("t0", (600,) * days),),
        name="forced-clash",
    )


def empty_instance(days=2):
    return Instance(
        days=days, shift_types=SHIFTS, age_groups=("a",), weights=Weights(),
        patients=(), nurses=(Nurse("n0", 1, all_shifts(days)),), surgeons=(), rooms=(Room("r0", 1),),
        theaters=(), name="empty",
    )


def random_admission(inst, rng, skip=0.25):
    """Any day per flexible patient (some left out); capacity rules are ignored."""
    adm = {}
    for p in inst.flexible:
        if rng.random() >= skip:
            adm[p.id] = rng.randint(p.release_day, inst.days - 1)
    return adm


def room_solution(inst, rng, tries=5):
    """A room-feasible RoomSolution for some random admission (empty as a last resort)."""
    from ihtc_solver.roomcp import solve_rooms

    for _ in range(tries):
        res = solve_rooms(inst, random_admission(inst, rng), seed=rng.randrange(100))
        if res.best is not None:
            return res.best
    return solve_rooms(inst, {}).best


def escalation_runs(lines):
    """For each failure-driven escalation: (from rho, consecutive room failures seen at that rho just before).

    Counts restart at every escalation and at every room success on the
    current level; results at other levels (negative counters) are ignored.
    """
    from ihtc_solver.orchestrator import parse_log_line

    out = []
    streak = {}
    for line in lines:
        ev = parse_log_line(line)
        name = ev.get("event")
        if name == "room_result" and int(ev["consecutive"]) >= 0:
            rho = int(ev["rho"])
            streak[rho] = streak.get(rho, 0) + 1 if ev["status"] != "feasible" else 0
        elif name == "rho_escalate":
            frm = int(ev["from"])
            if ev.get("reason") == "failures":
                out.append((frm, streak.get(frm, 0), int(ev["failures"])))
            streak[frm] = 0
    return out
