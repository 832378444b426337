import io
import threading

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import tiny
from helpers import clash_instance, empty_instance, escalation_runs, forced_clash_instance
from ihtc_solver import milp
from ihtc_solver.model import check_hard, evaluate
from ihtc_solver.orchestrator import (
    RunConfig,
    RunLog,
    escalate_rho,
    lower_bound_only,
    parse_log_line,
    run,
)
from oracles import exhaustive_optimum


def quick(**over):
    cfg = dict(total_time=30, phase12_budget=15, phase3_budget=15, room_cp_time=2, sa_time=1,
               sa_max_no_improve=500)
    cfg.update(over)
    return RunConfig(**cfg)


def test_config_text_round_trip():
    cfg = RunConfig.from_text("total_time = 20  # short\nphase12_budget=10\nphase3_budget=10\n"
                              "enumerate_admissions=off\ncare_cache=\n", seed=3)
    assert (cfg.total_time, cfg.enumerate_admissions, cfg.care_cache, cfg.seed) == (20.0, False, None, 3)
    with pytest.raises(ValueError):
        RunConfig.from_text("bogus=1")
    with pytest.raises(ValueError):
        RunConfig.from_text("enumerate_admissions=maybe")


def test_config_validation_and_scaling():
    with pytest.raises(ValueError):
        RunConfig(total_time=10, phase12_budget=20)
    with pytest.raises(ValueError):
        RunConfig(cooling=1.0)
    with pytest.raises(ValueError):
        RunConfig(rho_failure_threshold=0)
    s = RunConfig(time_scale=0.5).scaled()
    assert (s.total_time, s.room_cp_time, s.time_scale) == (300, 2.5, 1.0)


@given(st.integers(0, 20), st.integers(0, 20), st.integers(1, 10), st.one_of(st.none(), st.integers(0, 20)))
def test_escalation_rule(rho, fails, threshold, cap):
    new = escalate_rho({"rho": rho, "consecutive_failures": fails}, threshold, cap)
    if fails >= threshold and (cap is None or rho < cap):
        assert new == rho + 1
    else:
        assert new == rho


def test_log_lines_parse():
    buf = io.StringIO()
    log = RunLog(buf)
    line = log.event("bound", value=float("inf"), note="a b")
    ev = parse_log_line(line)
    assert (ev["event"], ev["value"], ev["note"]) == ("bound", "inf", "a_b")
    assert buf.getvalue().strip() == line


def test_tiny_run_is_feasible_and_bounded():
    for seed in (1, 4, 7):
        inst = tiny(seed)
        want, _ = exhaustive_optimum(inst)
        rep = run(inst, quick(seed=seed))
        assert rep.status == "feasible"
        assert check_hard(inst, rep.schedule) == []
        assert evaluate(inst, rep.schedule).total == rep.objective
        assert rep.lower_bound_valid and rep.lower_bound <= want <= rep.objective
        assert set(rep.to_dict()) >= {"status", "objective", "breakdown", "lower_bound", "gap"}


def test_clash_escalates_after_threshold():
    inst = clash_instance()
    rep = run(inst, quick(rho_failure_threshold=6))
    runs = escalation_runs(rep.log)
    assert runs and all(streak == 6 == failures for _, streak, failures in runs)
    assert rep.status == "feasible" and rep.rho == 2


def test_forced_clash_reports_no_solution():
    rep = run(forced_clash_instance(), quick(total_time=10, phase12_budget=5, phase3_budget=5))
    assert rep.status == "infeasible-or-exhausted"
    assert rep.schedule is None


def test_empty_instance():
    rep = run(empty_instance(), quick())
    assert rep.status == "feasible" and rep.objective == 0


def test_cancel_returns_promptly():
    token = milp.CancelToken()
    threading.Timer(0.5, token.cancel).start()
    rep = run(tiny(5, patients=12, days=10), quick(total_time=120, phase12_budget=60, phase3_budget=60),
              cancel=token)
    assert rep.timings.get("total", 0) < 30


def test_bound_only_matches_full_run_bound():
    inst = tiny(3)
    out = lower_bound_only(inst, quick())
    want, _ = exhaustive_optimum(inst)
    assert out["bound"] <= want
    assert out["admission"] is not None and out["terms"] is not None
