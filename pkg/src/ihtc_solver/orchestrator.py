"""Three-phase pipeline over a fixed worker budget.

Phase 1 runs the admission MIP with cheap care bounds while the other workers
compute exact care bounds.  Phase 2 streams admission solutions through the
room search and theater MIPs into simulated annealing.  Phase 3 polishes the
best complete schedules with the exact nurse MIP.  Stages talk only through
``SolutionPools``.
"""
from __future__ import annotations

import heapq
import itertools
import math
import threading
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional

from . import milp
from .admission import (
    AdmissionInfeasible,
    DegenerateCapacityError,
    _occupant_load,
    admission_objective,
    min_theaters,
    nurse_capacity,
    run_admission,
)
from .carebounds import UNCOVERABLE, CareBoundTable, bound_all
from .model import CostBreakdown, Instance, InstanceError, Schedule, check_hard, evaluate
from .nursemip import polish
from .nursesa import SaLimits, anneal
from .preprocess import EmptyWindowError, compute_windows
from .roomcp import FEASIBLE, solve_rooms
from .theater import TheaterInfeasible, merge_plans, plan_cost, solve_all_days

TIME_FIELDS = ("total_time", "phase12_budget", "phase3_budget", "room_cp_time", "theater_time_per_day", "sa_time")


@dataclass
class RunConfig:
    total_time: float = 600.0
    phase12_budget: float = 300.0
    phase3_budget: float = 300.0
    room_cp_time: float = 5.0
    theater_time_per_day: float = 1.0
    sa_time: float = 15.0
    sa_max_no_improve: int = 5000
    rho_failure_threshold: int = 6
    phase3_pool_size: int = 4
    room_solutions_per_admission: int = 8
    seed: int = 0
    worker_count: int = 4
    cooling: float = 0.999
    time_scale: float = 1.0
    # share of the phase 1+2 budget care bounds may use before trivial bounds stand in
    care_bound_share: float = 0.25
    # keep admissions coming by cutting off each optimum and re-solving
    enumerate_admissions: bool = True
    care_cache: Optional[str] = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in TIME_FIELDS:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.phase12_budget > self.total_time or self.phase3_budget > self.total_time:
            raise ValueError("phase budgets must not exceed total_time")
        if self.worker_count < 1 or self.time_scale <= 0:
            raise ValueError("worker_count and time_scale must be positive")
        if not 0 < self.cooling < 1:
            raise ValueError("cooling must lie in (0, 1)")
        if self.rho_failure_threshold < 1:
            raise ValueError("rho_failure_threshold must be at least 1")

    def scaled(self) -> "RunConfig":
        """Copy with every time limit multiplied by ``time_scale``."""
        vals = asdict(self)
        for name in TIME_FIELDS:
            vals[name] = vals[name] * self.time_scale
        vals["time_scale"] = 1.0
        return RunConfig(**vals)

    @classmethod
    def from_text(cls, text: str, **overrides) -> "RunConfig":
        """Parse flat ``key=value`` lines (``#`` starts a comment)."""
        types = {f.name: f.type for f in fields(cls)}
        vals = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in types:
                raise ValueError(f"line {lineno}: unknown or malformed setting {raw.strip()!r}")
            vals[key] = _coerce(types[key], value)
        vals.update(overrides)
        return cls(**vals)


def _coerce(kind, value):
    kind = str(kind)
    if "bool" in kind:
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value}")
    if "Optional[str]" in kind or kind == "str":
        return value or None
    if "int" in kind:
        return int(value)
    return float(value)


class RunLog:
    """Thread-safe ``key=value`` event log."""

    def __init__(self, stream=None):
        self.t0 = time.monotonic()
        self.lines: List[str] = []
        self.stream = stream
        self._lock = threading.Lock()

    def event(self, name, **kv):
        parts = [f"t={time.monotonic() - self.t0:.3f}", f"event={name}"]
        parts += [f"{k}={_fmt(v)}" for k, v in kv.items()]
        line = " ".join(parts)
        with self._lock:
            self.lines.append(line)
            if self.stream is not None:
                self.stream.write(line + "\n")
                self.stream.flush()
        return line


def _fmt(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return f"{v:.6g}"
    return str(v).replace(" ", "_")


def parse_log_line(line: str) -> Dict[str, str]:
    return dict(tok.split("=", 1) for tok in line.split())


class _NoToken:
    def cancel(self):
        pass


_NO_TOKEN = _NoToken()


@dataclass
class Complete:
    total: int
    schedule: Schedule
    breakdown: CostBreakdown
    room_solution: object
    polished: bool = False


class SolutionPools:
    """Queues between stages plus the bookkeeping for rho and bounds."""

    def __init__(self, instance: Instance, config: RunConfig, log: RunLog):
        self.inst = instance
        self.cfg = config
        self.log = log
        self.cv = threading.Condition()
        self._seq = itertools.count()
        self.admissions = []        # heap of (penalty, bound, seq, solution)
        self.seen = set()
        self.rooms = []             # heap of (lower bound, seq, room solution)
        self.complete: List = []    # heap of (total, seq, Complete)
        self.rho = 0
        self.fails = 0
        self.level_successes = 0
        self.level_done = False
        self.admission_token: Optional[milp.CancelToken] = None
        self.in_rooms = 0
        self.in_sa = 0
        self.pending_rho = {}
        self.escalations = 0
        self.rho_capped = False
        self.bounds_valid: List[float] = []
        self.bounds_heuristic: List[tuple] = []

    # complete pool ------------------------------------------------------
    @property
    def best_total(self):
        with self.cv:
            return self.complete[0][0] if self.complete else math.inf

    def add_complete(self, entry: Complete):
        viol = check_hard(self.inst, entry.schedule)
        if viol:
            raise AssertionError(f"infeasible schedule reached the pool: {viol[:3]}")
        with self.cv:
            improved = not self.complete or entry.total < self.complete[0][0]
            heapq.heappush(self.complete, (entry.total, next(self._seq), entry))
            self.cv.notify_all()
        if improved:
            self.log.event("incumbent", total=entry.total, polished=int(entry.polished))

    def best_complete(self, k=None):
        with self.cv:
            items = sorted(self.complete, key=lambda t: (t[0], t[1]))
        items = [c for _, _, c in items]
        return items if k is None else items[:k]

    # admissions ---------------------------------------------------------
    def put_admission(self, sol):
        with self.cv:
            if sol.key in self.seen:
                return False
            self.seen.add(sol.key)
            pen = 1 if sol.rho < self.rho else 0
            heapq.heappush(self.admissions, (pen, sol.bound_contribution, next(self._seq), sol))
            self.pending_rho[sol.rho] = self.pending_rho.get(sol.rho, 0) + 1
            self.cv.notify_all()
        self.log.event("admission", rho=sol.rho, bound=sol.bound_contribution, admitted=len(sol.admitted))
        return True

    def get_admission(self, timeout=0.01):
        with self.cv:
            if not self.admissions:
                self.cv.wait(timeout)
            if not self.admissions:
                return None
            _, _, _, sol = heapq.heappop(self.admissions)
            self.pending_rho[sol.rho] -= 1
            self.in_rooms += 1
            return sol

    def throttle(self, stop: threading.Event, target=2):
        """Block the admission producer while enough admissions wait."""
        with self.cv:
            while not stop.is_set() and len(self.admissions) >= target:
                self.cv.wait(0.05)

    def prune_admission(self, bound):
        return bound >= self.best_total

    def _penalise_lower_levels(self):
        items = [(1 if s.rho < self.rho else 0, b, q, s) for _, b, q, s in self.admissions]
        heapq.heapify(items)
        self.admissions = items

    def room_result(self, sol, success):
        """Record a room-search outcome; may escalate rho."""
        token = None
        with self.cv:
            self.in_rooms -= 1
            current = sol.rho == self.rho
            if current:
                if success:
                    self.fails = 0
                    self.level_successes += 1
                else:
                    self.fails += 1
            consecutive = self.fails if current else -1
            # logged under the lock so counts and escalations appear in order
            self.log.event("room_result", rho=sol.rho, status="feasible" if success else "infeasible",
                           consecutive=consecutive)
            if current and not success and consecutive >= self.cfg.rho_failure_threshold:
                token = self._escalate_locked("failures")
            self.cv.notify_all()
        if token is not None:
            token.cancel()

    def _escalate_locked(self, reason):
        """Raise rho by one; returns the admission token to cancel, or None at the cap."""
        if self.rho + 1 > self.inst.total_beds:
            if not self.rho_capped:
                self.rho_capped = True
                self.log.event("rho_cap", rho=self.rho)
            return None
        old = self.rho
        failures = self.fails
        self.rho += 1
        self.fails = 0
        self.level_successes = 0
        self.level_done = False
        self.escalations += 1
        self._penalise_lower_levels()
        self.log.event("rho_escalate", **{"from": old, "to": old + 1, "failures": failures, "reason": reason})
        return self.admission_token or _NO_TOKEN

    def escalate(self, reason):
        with self.cv:
            token = self._escalate_locked(reason)
            self.cv.notify_all()
        if token is None:
            return False
        token.cancel()
        return True

    def maybe_escalate_exhausted(self):
        """Escalate when the current level produced nothing room-feasible and has nothing left."""
        with self.cv:
            stuck = (self.level_done and self.level_successes == 0 and self.pending_rho.get(self.rho, 0) == 0
                     and self.in_rooms == 0 and not self.rho_capped)
        if stuck:
            self.escalate("exhausted")

    # room pool ----------------------------------------------------------
    def put_room(self, lower, rs):
        with self.cv:
            heapq.heappush(self.rooms, (lower, next(self._seq), rs))
            self.cv.notify_all()

    def get_room(self, timeout=0.01):
        with self.cv:
            if not self.rooms:
                self.cv.wait(timeout)
            if not self.rooms:
                return None
            lower, _, rs = heapq.heappop(self.rooms)
            self.in_sa += 1
            return lower, rs

    def sa_done(self):
        with self.cv:
            self.in_sa -= 1
            self.cv.notify_all()

    def idle(self, admission_finished):
        with self.cv:
            return (admission_finished and not self.admissions and not self.rooms
                    and self.in_rooms == 0 and self.in_sa == 0)


@dataclass
class RunReport:
    status: str
    schedule: Optional[Schedule]
    breakdown: Optional[CostBreakdown]
    lower_bound: Optional[float]
    lower_bound_valid: bool
    heuristic_bounds: List[tuple] = field(default_factory=list)
    rho: int = 0
    timings: Dict[str, float] = field(default_factory=dict)
    counts: Dict[str, int] = field(default_factory=dict)
    log: List[str] = field(default_factory=list)
    message: str = ""

    @property
    def objective(self):
        return self.breakdown.total if self.breakdown is not None else None

    @property
    def gap(self):
        if self.objective is None or self.lower_bound is None or not self.objective:
            return None
        return (self.objective - self.lower_bound) / self.objective

    def to_dict(self):
        return {
            "status": self.status,
            "objective": self.objective,
            "breakdown": self.breakdown.as_dict() if self.breakdown else None,
            "lower_bound": self.lower_bound,
            "lower_bound_valid": self.lower_bound_valid,
            "heuristic_bounds": [list(b) for b in self.heuristic_bounds],
            "gap": self.gap,
            "rho": self.rho,
            "timings": self.timings,
            "counts": self.counts,
            "message": self.message,
        }


def theater_floor(instance, admitted):
    w = instance.weights
    per_day = {}
    for pid, d in admitted.items():
        per_day[d] = per_day.get(d, 0) + instance.patient_by_id[pid].surgery_duration
    total = 0
    for d, t in per_day.items():
        opened = min_theaters(instance, d, t)
        total += w.open_theater * (len(opened) if opened else 0)
    return total


def nurse_floor(instance, table, admission):
    """Lower bound on the nurse part for a fixed admission (rooms irrelevant)."""
    w = instance.weights
    ns = instance.n_shifts
    care = sum(table[pid, d] for pid, d in admission.items())
    _, occ_work = _occupant_load(instance)
    cap = nurse_capacity(instance)
    work = dict(occ_work)
    for pid, a in admission.items():
        p = instance.patient_by_id[pid]
        if p.is_occupant:
            continue
        for d in instance.stay_days(p, a):
            for s in range(ns):
                work[d, s] = work.get((d, s), 0) + p.workload_at(d - a, s, ns)
    excess = sum(max(0, v - cap[k]) for k, v in work.items())
    return care + w.excess_workload * excess


def _trivial_table(instance):
    return CareBoundTable(instance)


def phase1(instance: Instance, config: RunConfig, log: RunLog, cancel: milp.CancelToken):
    """Care bounds plus the cheap-bound admission run; returns (table, windows, solutions, bound)."""
    cfg = config
    t0 = time.monotonic()
    windows0 = compute_windows(instance)
    trivial = _trivial_table(instance)
    deadline = t0 + cfg.care_bound_share * cfg.phase12_budget
    sols = []
    adm_token = milp.CancelToken(cancel)
    result = {}

    def admission_job():
        try:
            res = run_admission(instance, windows0, trivial, 0, milp.Limits(wall_time=max(0.01, deadline - time.monotonic())),
                                sols.append, cancel=adm_token)
            result["bound"] = res.dual_bound
            result["status"] = res.status
        except AdmissionInfeasible:
            result["infeasible"] = True

    th = threading.Thread(target=admission_job, name="phase1-admission")
    th.start()
    table = bound_all(instance, windows0, workers=max(1, cfg.worker_count - 1), deadline=deadline, cancel=cancel,
                      cache_path=cfg.care_cache)
    th.join(timeout=0.0)
    if th.is_alive():
        # bounds are done; the admission run only supplies a warm start now
        th.join(timeout=max(0.0, min(1.0, deadline - time.monotonic())))
        adm_token.cancel()
        th.join()
    log.event("phase1_done", bounds=len(table), admissions=len(sols), bound=result.get("bound"),
              status=result.get("status", "infeasible" if result.get("infeasible") else "none"))
    return table, windows0, sols, result


def run(instance: Instance, config: Optional[RunConfig] = None, log_stream=None,
        cancel: Optional[milp.CancelToken] = None) -> RunReport:
    cfg = (config or RunConfig()).scaled()
    log = RunLog(log_stream)
    cancel = cancel or milp.CancelToken()
    t0 = time.monotonic()
    end_all = t0 + cfg.total_time
    timings = {}
    log.event("start", instance=instance.name or "-", patients=len(instance.flexible), days=instance.days,
              workers=cfg.worker_count)

    def report(status, pools=None, message="", bound=None, valid=False):
        timings["total"] = time.monotonic() - t0
        best = pools.best_complete(1) if pools else []
        sched = best[0].schedule if best else None
        bd = best[0].breakdown if best else None
        if best:
            status = "feasible"
        log.event("finish", status=status, objective=bd.total if bd else "none",
                  bound=bound if bound is not None else "none")
        return RunReport(status, sched, bd, bound, valid and bound is not None,
                         list(pools.bounds_heuristic) if pools else [], pools.rho if pools else 0,
                         dict(timings), dict(counts), list(log.lines), message)

    counts = {"admissions": 0, "room_searches": 0, "room_solutions": 0, "anneals": 0, "polishes": 0}
    try:
        compute_windows(instance)
    except EmptyWindowError as e:
        log.event("infeasible", reason="empty_window", patient=e.patient)
        return report("infeasible", message=str(e))

    # ---- phase 1
    table, windows0, p1_sols, p1 = phase1(instance, cfg, log, cancel)
    timings["phase1"] = time.monotonic() - t0
    if p1.get("infeasible"):
        log.event("infeasible", reason="admission", rho=0)
        return report("infeasible", message="admission model infeasible at rho=0", bound=math.inf, valid=True)
    valid_bounds = [b for b in [p1.get("bound")] if b is not None]

    # ---- phase 2
    try:
        windows = compute_windows(instance, table)
    except EmptyWindowError as e:
        log.event("infeasible", reason="empty_window", patient=e.patient)
        return report("infeasible", message=str(e))
    pools = SolutionPools(instance, cfg, log)
    pools.bounds_valid = valid_bounds
    warm = None
    ranked = []
    for s in p1_sols:
        if all(d in windows.get(pid, ()) for pid, d in s.admitted.items()):
            ranked.append((admission_objective(instance, table, s.admitted), len(ranked), s))
    if ranked:
        warm = min(ranked)[2].admitted
    t2 = time.monotonic()
    end2 = min(t0 + cfg.phase12_budget, end_all)
    log.event("phase2_start", rho=0)
    stop = threading.Event()
    adm_state = {"finished": False}
    errors = []

    def solve_level(rho, token, warm_start=None):
        left = end2 - time.monotonic()
        if left <= 0:
            return False
        try:
            res = run_admission(instance, windows, table, rho, milp.Limits(wall_time=left), pools.put_admission,
                                cancel=token, warm_start=warm_start,
                                enumerate_all=cfg.enumerate_admissions, prune=pools.prune_admission,
                                throttle=lambda: pools.throttle(stop))
        except AdmissionInfeasible:
            log.event("admission_infeasible", rho=rho)
            if rho == 0:
                pools.bounds_valid.append(math.inf)
            with pools.cv:
                pools.rho_capped = True
            return False
        except DegenerateCapacityError:
            with pools.cv:
                pools.rho_capped = True
            return False
        counts["admissions"] += res.found
        if rho == 0:
            if res.dual_bound is not None:
                pools.bounds_valid.append(res.dual_bound)
        else:
            pools.bounds_heuristic.append((rho, res.dual_bound))
        log.event("admission_done", rho=rho, bound=res.dual_bound, status=res.status,
                  exhausted=int(res.exhausted), pruned=int(res.pruned))
        return True

    def admission_worker():
        rho = 0
        while not stop.is_set():
            token = milp.CancelToken(cancel)
            with pools.cv:
                rho = pools.rho
                pools.admission_token = token
                pools.level_done = False
            ok = solve_level(rho, token, warm if rho == 0 else None)
            with pools.cv:
                if pools.rho == rho:
                    pools.level_done = True
                pools.cv.notify_all()
            if not ok:
                break
            # wait until rho moves on, or the level settles with a room-feasible admission
            settled = False
            while not stop.is_set():
                pools.maybe_escalate_exhausted()
                with pools.cv:
                    if pools.rho != rho:
                        break
                    if pools.idle(True) and (pools.level_successes > 0 or pools.rho_capped):
                        settled = True
                        break
                    pools.cv.wait(0.02)
            if settled:
                break
        # Escalation stops the rho=0 enumeration early; spend leftover time finishing it.
        # Admissions already seen are skipped and room failures here never escalate.
        if pools.escalations and not stop.is_set() and time.monotonic() < end2:
            log.event("backfill", rho=0, from_level=pools.rho)
            token = milp.CancelToken(cancel)
            with pools.cv:
                pools.admission_token = token
            solve_level(0, token)
        with pools.cv:
            adm_state["finished"] = True
            pools.cv.notify_all()

    def room_worker(wid):
        while not stop.is_set():
            sol = pools.get_admission()
            if sol is None:
                continue
            try:
                if sol.bound_contribution >= pools.best_total:
                    with pools.cv:
                        pools.in_rooms -= 1
                        pools.cv.notify_all()
                    log.event("admission_pruned", rho=sol.rho, bound=sol.bound_contribution)
                    continue
                wall = max(0.01, min(cfg.room_cp_time, end2 - time.monotonic()))
                res = solve_rooms(instance, sol, wall, max_solutions=cfg.room_solutions_per_admission,
                                  seed=cfg.seed + wid, cancel=cancel)
                counts["room_searches"] += 1
                ok = res.status == FEASIBLE
                plans = None
                if ok:
                    try:
                        plans = solve_all_days(instance, sol, cfg.theater_time_per_day, workers=1, cancel=cancel)
                    except TheaterInfeasible as e:
                        log.event("theater_failed", reason=str(e))
                        ok = False
                if ok:
                    theater = merge_plans(plans)
                    tcost = plan_cost(instance, plans)
                    base = sol.bound_contribution - theater_floor(instance, sol.admitted) + tcost
                    for rs in res.solutions:
                        rs.theater = theater
                        rs.theater_cost = tcost
                        pools.put_room(base + rs.age_mix_cost, rs)
                        counts["room_solutions"] += 1
                pools.room_result(sol, ok)
            except Exception as e:  # surface worker crashes to the caller
                errors.append(e)
                stop.set()

    def sa_worker():
        k = 0
        while not stop.is_set():
            item = pools.get_room()
            if item is None:
                continue
            lower, rs = item
            try:
                if lower >= pools.best_total:
                    continue
                wall = max(0.01, min(cfg.sa_time, end2 - time.monotonic()))
                sa = anneal(instance, rs, SaLimits(wall, cfg.sa_max_no_improve), seed=cfg.seed + k,
                            cooling=cfg.cooling, cancel=cancel)
                k += 1
                counts["anneals"] += 1
                sched = Schedule.build(instance, rs.admission, rs.room, rs.theater, sa.roster)
                bd = evaluate(instance, sched)
                pools.add_complete(Complete(bd.total, sched, bd, rs))
            except Exception as e:
                errors.append(e)
                stop.set()
            finally:
                pools.sa_done()

    n_room = max(1, cfg.worker_count - 2)
    threads = [threading.Thread(target=admission_worker, name="admission")]
    threads += [threading.Thread(target=room_worker, args=(i,), name=f"rooms{i}") for i in range(n_room)]
    threads.append(threading.Thread(target=sa_worker, name="anneal"))
    for th in threads:
        th.start()
    while True:
        if errors or cancel.cancelled or time.monotonic() >= end2:
            break
        if pools.idle(adm_state["finished"]):
            break
        time.sleep(0.01)
    stop.set()
    with pools.cv:
        if pools.admission_token is not None:
            pools.admission_token.cancel()
        pools.cv.notify_all()
    for th in threads:
        th.join()
    if errors:
        raise errors[0]
    timings["phase2"] = time.monotonic() - t2
    log.event("phase2_done", complete=len(pools.complete), rho=pools.rho)

    # ---- phase 3
    t3 = time.monotonic()
    end3 = min(t3 + cfg.phase3_budget, end_all)
    queue = pools.best_complete(cfg.phase3_pool_size)
    qlock = threading.Lock()

    def polish_worker():
        while not cancel.cancelled and time.monotonic() < end3:
            with qlock:
                if not queue:
                    return
                cand = queue.pop(0)
            bd = cand.breakdown
            floor = bd.total - bd.nurse_part + nurse_floor(instance, table, cand.room_solution.admission)
            if floor >= pools.best_total:
                continue
            res = polish(instance, cand.room_solution, cand.schedule.roster,
                         milp.Limits(wall_time=max(0.01, end3 - time.monotonic())), cancel=cancel)
            counts["polishes"] += 1
            if res.improved:
                rs = cand.room_solution
                sched = Schedule.build(instance, rs.admission, rs.room, rs.theater, res.roster)
                nb = evaluate(instance, sched)
                pools.add_complete(Complete(nb.total, sched, nb, rs, polished=True))
            log.event("polished", before=bd.total, after=bd.total - bd.nurse_part + res.cost,
                      optimal=int(res.optimal))

    workers = [threading.Thread(target=polish_worker, name=f"polish{i}") for i in range(cfg.worker_count)]
    for th in workers:
        th.start()
    for th in workers:
        th.join()
    timings["phase3"] = time.monotonic() - t3

    bound = max(pools.bounds_valid) if pools.bounds_valid else None
    if bound is not None and bound == math.inf:
        return report("infeasible", pools, "admission model infeasible at rho=0", bound, True)
    status = "feasible" if pools.complete else "infeasible-or-exhausted"
    msg = "" if pools.complete else f"no complete schedule; rho reached {pools.rho}"
    return report(status, pools, msg, bound, True)


def escalate_rho(stats: Dict, threshold=6, cap=None):
    """Pure form of the escalation rule used by the pools.

    ``stats`` holds ``rho`` and ``consecutive_failures``; returns the new rho.
    """
    rho = stats["rho"]
    if stats["consecutive_failures"] >= threshold and (cap is None or rho + 1 <= cap):
        return rho + 1
    return rho


def lower_bound_only(instance: Instance, config: Optional[RunConfig] = None):
    """Phase 1 alone: care bounds and the rho=0 admission bound with its terms."""
    from .admission import admission_terms

    cfg = (config or RunConfig()).scaled()
    log = RunLog()
    windows0 = compute_windows(instance)
    table = bound_all(instance, windows0, workers=max(1, cfg.worker_count - 1),
                      deadline=time.monotonic() + cfg.care_bound_share * cfg.phase12_budget,
                      cache_path=cfg.care_cache)
    windows = compute_windows(instance, table)
    sols = []
    res = run_admission(instance, windows, table, 0, milp.Limits(wall_time=cfg.phase12_budget), sols.append)
    best = min(sols, key=lambda s: s.bound_contribution) if sols else None
    terms = admission_terms(instance, table, best.admitted) if best else None
    log.event("bound", value=res.dual_bound, status=res.status)
    return {"bound": res.dual_bound, "status": res.status, "terms": terms,
            "admission": dict(best.admitted) if best else None}
