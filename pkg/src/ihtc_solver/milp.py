"""Solver-neutral MILP model description and a HiGHS backend.

Models are plain data.  A backend turns one into a session (``build``), which
can be solved repeatedly (``solve``), extended with rows between solves and
cancelled from another thread (``cancel``).
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

INF = math.inf
INT_TOL = 1e-6

BINARY = "binary"
INTEGER = "integer"
CONTINUOUS = "continuous"

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
LIMIT_NO_SOLUTION = "limit-no-solution"


class BackendError(RuntimeError):
    pass


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    lb: float
    ub: float


@dataclass(frozen=True)
class Constraint:
    coeffs: Tuple[Tuple[int, float], ...]
    sense: str
    rhs: float
    name: str = ""


@dataclass(frozen=True)
class Hint:
    """Advisory backend option; semantics-preserving by contract."""

    key: str
    value: str

    def to_str(self):
        return f"{self.key}={self.value}"

    @classmethod
    def parse(cls, text):
        key, _, value = text.partition("=")
        if not key or not value:
            raise ValueError(f"malformed hint {text!r}")
        return cls(key, value)


def solve_root_relaxation_barrier_hint(model=None) -> Hint:
    """Ask the backend to solve LP relaxations by interior point.

    When a model is given the hint is attached to it as well.
    """
    hint = Hint("relaxation_method", "interior_point")
    if model is not None:
        model.hints.append(hint)
    return hint


class MilpModel:
    """Minimisation model with sparse rows."""

    def __init__(self, name=""):
        self.name = name
        self.variables: List[Variable] = []
        self.constraints: List[Constraint] = []
        self.objective: Dict[int, float] = {}
        self.objective_offset = 0.0
        self.warm_start: Dict[int, float] = {}
        self.hints: List[Hint] = []
        self._index: Dict[str, int] = {}

    def __len__(self):
        return len(self.variables)

    def add_var(self, name, kind=CONTINUOUS, lb=0.0, ub=INF, obj=0.0) -> int:
        if name in self._index:
            raise ModelError(f"duplicate variable {name}")
        if kind == BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        elif kind not in (INTEGER, CONTINUOUS):
            raise ModelError(f"unknown variable kind {kind}")
        idx = len(self.variables)
        self.variables.append(Variable(name, kind, float(lb), float(ub)))
        self._index[name] = idx
        if obj:
            self.objective[idx] = float(obj)
        return idx

    def var(self, name) -> int:
        return self._index[name]

    def has_var(self, name):
        return name in self._index

    def add_constr(self, coeffs, sense, rhs, name=""):
        if sense not in ("<=", ">=", "=="):
            raise ModelError(f"unknown sense {sense}")
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        merged: Dict[int, float] = {}
        for j, a in items:
            if not 0 <= j < len(self.variables):
                raise ModelError(f"constraint {name!r} references unknown variable {j}")
            merged[j] = merged.get(j, 0.0) + float(a)
        row = Constraint(tuple((j, a) for j, a in merged.items() if a != 0.0), sense, float(rhs), name)
        self.constraints.append(row)
        return len(self.constraints) - 1

    def set_objective(self, coeffs, offset=0.0):
        self.objective = {j: float(a) for j, a in coeffs.items() if a}
        self.objective_offset = float(offset)

    def is_integral(self):
        return any(v.kind != CONTINUOUS for v in self.variables)

    def objective_value(self, values: Sequence[float]) -> float:
        return self.objective_offset + sum(a * values[j] for j, a in self.objective.items())

    def violated(self, values: Sequence[float], tol=1e-6) -> List[int]:
        """Indices of rows (or -1-j for bound j) violated by ``values``."""
        bad = []
        for j, v in enumerate(self.variables):
            x = values[j]
            if x < v.lb - tol or x > v.ub + tol:
                bad.append(-1 - j)
            if v.kind != CONTINUOUS and abs(x - round(x)) > tol:
                bad.append(-1 - j)
        for i, c in enumerate(self.constraints):
            lhs = sum(a * values[j] for j, a in c.coeffs)
            if (c.sense == "<=" and lhs > c.rhs + tol) or (c.sense == ">=" and lhs < c.rhs - tol) \
                    or (c.sense == "==" and abs(lhs - c.rhs) > tol):
                bad.append(i)
        return bad

    def to_lp(self, decimals=6) -> str:
        """CPLEX-LP text with deterministic variable order."""
        fmt = f"{{:.{decimals}f}}"

        def term(a, j):
            sign = "-" if a < 0 else "+"
            return f"{sign} {fmt.format(abs(a))} x{j}"

        lines = [f"\\ {self.name}" if self.name else "\\ model", "Minimize"]
        obj = " ".join(term(a, j) for j, a in sorted(self.objective.items())) or "0 x0"
        if self.objective_offset:
            obj += f" + {fmt.format(self.objective_offset)}"
        lines.append(f" obj: {obj}")
        lines.append("Subject To")
        op = {"<=": "<=", ">=": ">=", "==": "="}
        for i, c in enumerate(self.constraints):
            body = " ".join(term(a, j) for j, a in sorted(c.coeffs)) or "0 x0"
            lines.append(f" c{i}: {body} {op[c.sense]} {fmt.format(c.rhs)}")
        lines.append("Bounds")
        for j, v in enumerate(self.variables):
            lo = "-inf" if v.lb == -INF else fmt.format(v.lb)
            hi = "+inf" if v.ub == INF else fmt.format(v.ub)
            lines.append(f" {lo} <= x{j} <= {hi}")
        ints = [f"x{j}" for j, v in enumerate(self.variables) if v.kind == INTEGER]
        bins = [f"x{j}" for j, v in enumerate(self.variables) if v.kind == BINARY]
        if ints:
            lines.append("General")
            lines.append(" " + " ".join(ints))
        if bins:
            lines.append("Binary")
            lines.append(" " + " ".join(bins))
        lines.append("End")
        return "\n".join(lines) + "\n"


@dataclass
class Limits:
    # worker_count is advisory; HiGHS branch-and-bound is serial
    wall_time: Optional[float] = None
    worker_count: int = 1
    rel_gap: float = 0.0


@dataclass
class MilpOutcome:
    status: str
    incumbents: List[Tuple[List[float], float]] = field(default_factory=list)
    dual_bound: Optional[float] = None

    @property
    def has_solution(self):
        return bool(self.incumbents)

    @property
    def values(self):
        return self.incumbents[-1][0] if self.incumbents else None

    @property
    def objective(self):
        return self.incumbents[-1][1] if self.incumbents else None


class CancelToken:
    """Cooperative stop flag shared between an orchestrator and solves."""

    def __init__(self, parent: Optional["CancelToken"] = None):
        self._event = threading.Event()
        self._parent = parent

    def cancel(self):
        self._event.set()

    @property
    def cancelled(self):
        return self._event.is_set() or (self._parent is not None and self._parent.cancelled)


def round_solution(model: MilpModel, raw: Sequence[float]) -> List[float]:
    out = []
    for v, x in zip(model.variables, raw):
        if v.kind == CONTINUOUS:
            out.append(float(x))
        else:
            out.append(float(round(x)))
    return out


class HighsSession:
    def __init__(self, model: MilpModel):
        import highspy

        self._hs = highspy
        self.model = model
        self.h = highspy.Highs()
        self.h.setOptionValue("output_flag", False)
        self._token: Optional[CancelToken] = None
        self._on_incumbent = None
        self._best = INF
        self._incumbents: List[Tuple[List[float], float]] = []
        self._empty_rows: List[Tuple[str, float]] = []
        self._lock = threading.Lock()
        self._load()
        self.h.cbMipImprovingSolution.subscribe(self._improving)
        self.h.cbMipInterrupt.subscribe(self._interrupt)

    def _load(self):
        hs = self._hs
        m = self.model
        n = len(m.variables)
        lp = hs.HighsLp()
        lp.num_col_ = n
        lp.num_row_ = len(m.constraints)
        cost = np.zeros(n)
        for j, a in m.objective.items():
            cost[j] = a
        lp.col_cost_ = cost
        lp.offset_ = m.objective_offset
        lp.col_lower_ = np.array([v.lb if v.lb > -INF else -hs.kHighsInf for v in m.variables])
        lp.col_upper_ = np.array([v.ub if v.ub < INF else hs.kHighsInf for v in m.variables])
        lo, hi, start, index, value = [], [], [0], [], []
        for c in m.constraints:
            lo.append(c.rhs if c.sense in (">=", "==") else -hs.kHighsInf)
            hi.append(c.rhs if c.sense in ("<=", "==") else hs.kHighsInf)
            for j, a in c.coeffs:
                index.append(j)
                value.append(a)
            start.append(len(index))
        lp.row_lower_ = np.array(lo, dtype=float)
        lp.row_upper_ = np.array(hi, dtype=float)
        lp.a_matrix_.format_ = hs.MatrixFormat.kRowwise
        lp.a_matrix_.start_ = np.array(start, dtype=np.int32)
        lp.a_matrix_.index_ = np.array(index, dtype=np.int32)
        lp.a_matrix_.value_ = np.array(value, dtype=float)
        lp.a_matrix_.num_col_ = n
        lp.a_matrix_.num_row_ = len(m.constraints)
        if m.is_integral():
            lp.integrality_ = [hs.HighsVarType.kContinuous if v.kind == CONTINUOUS else hs.HighsVarType.kInteger
                               for v in m.variables]
        status = self.h.passModel(lp)
        if status == hs.HighsStatus.kError:
            raise BackendError("HiGHS rejected the model")
        for hint in m.hints:
            if hint.key == "relaxation_method" and hint.value == "interior_point":
                self.h.setOptionValue("mip_lp_solver", "ipm")
                if not m.is_integral():
                    self.h.setOptionValue("solver", "ipm")

    def _improving(self, event):
        raw = event.data_out.mip_solution
        values = round_solution(self.model, raw)
        obj = self.model.objective_value(values)
        if obj < self._best - 1e-9:
            self._best = obj
            self._incumbents.append((values, obj))
            if self._on_incumbent is not None:
                self._on_incumbent(values, obj)

    def _interrupt(self, event):
        if self._token is not None and self._token.cancelled:
            event.data_in.user_interrupt = True

    def add_constraint(self, coeffs, sense, rhs):
        hs = self._hs
        items = list(coeffs.items() if isinstance(coeffs, dict) else coeffs)
        if not self.model.variables:
            self._empty_rows.append((sense, rhs))
            return
        lo = rhs if sense in (">=", "==") else -hs.kHighsInf
        hi = rhs if sense in ("<=", "==") else hs.kHighsInf
        self.h.addRow(lo, hi, len(items), np.array([j for j, _ in items], dtype=np.int32),
                      np.array([a for _, a in items], dtype=float))

    def set_warm_start(self, start: Dict[int, float]):
        if not start:
            return
        sol = self._hs.HighsSolution()
        vals = [0.0] * len(self.model.variables)
        for j, x in start.items():
            vals[j] = float(x)
        sol.col_value = vals
        sol.value_valid = True
        self.h.setSolution(sol)

    def cancel(self):
        if self._token is not None:
            self._token.cancel()
        try:
            self.h.cancelSolve()
        except Exception:  # not running
            pass

    def solve(self, limits: Optional[Limits] = None, on_incumbent=None, cancel: Optional[CancelToken] = None):
        hs = self._hs
        limits = limits or Limits()
        self._token = CancelToken(cancel) if cancel is not None else CancelToken()
        self._on_incumbent = on_incumbent
        self._best = INF
        self._incumbents = []
        h = self.h
        h.setOptionValue("time_limit", float(limits.wall_time) if limits.wall_time else hs.kHighsInf)
        h.setOptionValue("mip_rel_gap", float(limits.rel_gap))
        h.setOptionValue("mip_abs_gap", 1e-6)
        h.setOptionValue("mip_feasibility_tolerance", INT_TOL)
        if self._token.cancelled:
            return MilpOutcome(LIMIT_NO_SOLUTION)
        if not self.model.variables:
            # HiGHS reports such models as "empty"; decide them directly
            broken = any((sense in ("<=", "==") and 0 > rhs + 1e-9) or (sense in (">=", "==") and 0 < rhs - 1e-9)
                         for sense, rhs in self._empty_rows)
            if broken or self.model.violated([]):
                return MilpOutcome(INFEASIBLE, dual_bound=INF)
            obj = self.model.objective_value([])
            if on_incumbent is not None:
                on_incumbent([], obj)
            return MilpOutcome(OPTIMAL, [([], obj)], obj)
        if self.model.warm_start:
            self.set_warm_start(self.model.warm_start)
        h.run()
        status = h.getModelStatus()
        ms = hs.HighsModelStatus
        info = h.getInfo()
        integral = self.model.is_integral()

        if status in (ms.kInfeasible,):
            return MilpOutcome(INFEASIBLE, dual_bound=INF)
        if status in (ms.kUnbounded, ms.kUnboundedOrInfeasible):
            if status == ms.kUnboundedOrInfeasible and integral:
                return MilpOutcome(INFEASIBLE, dual_bound=INF)
            raise BackendError(f"unbounded model {self.model.name}")
        has_primal = info.primal_solution_status == 2
        if has_primal:
            values = round_solution(self.model, h.getSolution().col_value)
            obj = self.model.objective_value(values)
            if obj < self._best - 1e-9 or not self._incumbents:
                self._best = obj
                self._incumbents.append((values, obj))
                if on_incumbent is not None:
                    on_incumbent(values, obj)
        if status == ms.kOptimal:
            bound = info.mip_dual_bound if integral else self._incumbents[-1][1]
            best = self._incumbents[-1][1]
            return MilpOutcome(OPTIMAL, list(self._incumbents), min(bound, best))
        if status in (ms.kTimeLimit, ms.kInterrupt, ms.kIterationLimit, ms.kSolutionLimit,
                      ms.kObjectiveBound, ms.kObjectiveTarget):
            bound = info.mip_dual_bound if integral else None
            if bound is not None and (math.isnan(bound) or abs(bound) >= hs.kHighsInf):
                bound = None
            if self._incumbents:
                if bound is not None:
                    bound = min(bound, self._incumbents[-1][1])
                return MilpOutcome(FEASIBLE, list(self._incumbents), bound)
            return MilpOutcome(LIMIT_NO_SOLUTION, [], bound)
        raise BackendError(f"HiGHS returned {h.modelStatusToString(status)}")


class HighsBackend:
    name = "highs"

    def build(self, model: MilpModel) -> HighsSession:
        return HighsSession(model)


_BACKENDS: Dict[str, Callable[[], object]] = {"highs": HighsBackend}


def register_backend(name, factory):
    _BACKENDS[name] = factory


def get_backend(name="highs"):
    try:
        return _BACKENDS[name]()
    except KeyError:
        raise BackendError(f"unknown backend {name}") from None


def solve(model: MilpModel, limits: Optional[Limits] = None, on_incumbent=None,
          cancel: Optional[CancelToken] = None, backend=None, hints: Sequence[Hint] = ()) -> MilpOutcome:
    """Solve ``model`` in a fresh session."""
    if hints:
        model.hints.extend(h for h in hints if h not in model.hints)
    session = (backend or get_backend()).build(model)
    return session.solve(limits, on_incumbent=on_incumbent, cancel=cancel)
