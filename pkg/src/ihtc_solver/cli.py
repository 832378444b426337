"""``ihtc`` command line: solve, validate, bound, gen."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import generator
from .io import dump_instance, parse_instance, read_solution, write_solution
from .model import HardInfeasibleError, InstanceError, check_hard, evaluate
from .orchestrator import RunConfig, lower_bound_only, run

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NO_SOLUTION = 3
EXIT_INVALID = 4


class InputError(Exception):
    pass


def _load_instance(path):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return parse_instance(raw, name=Path(path).stem)
    except InstanceError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _config(args):
    overrides = {}
    if args.time is not None:
        if args.time <= 0:
            raise InputError("--time must be positive")
        overrides.update(total_time=args.time, phase12_budget=args.time / 2, phase3_budget=args.time / 2)
    if args.time_scale is not None:
        overrides["time_scale"] = args.time_scale
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["worker_count"] = args.threads
    try:
        if args.config:
            return RunConfig.from_text(Path(args.config).read_text(), **overrides)
        return RunConfig(**overrides)
    except (OSError, ValueError, TypeError) as exc:
        raise InputError(f"bad configuration: {exc}") from exc


def _emit(doc, out=None):
    text = json.dumps(doc, indent=2, sort_keys=True)
    print(text, file=out or sys.stdout)


def cmd_solve(args):
    inst = _load_instance(args.instance)
    cfg = _config(args)
    log_file = open(args.log, "w") if args.log else None
    try:
        report = run(inst, cfg, log_stream=log_file)
    finally:
        if log_file:
            log_file.close()
    doc = report.to_dict()
    if report.schedule is not None:
        data = write_solution(inst, report.schedule)
        if args.out:
            Path(args.out).write_bytes(data)
        else:
            doc["solution"] = json.loads(data)
    _emit(doc)
    return EXIT_OK if report.schedule is not None else EXIT_NO_SOLUTION


def cmd_validate(args):
    inst = _load_instance(args.instance)
    try:
        sched = read_solution(Path(args.solution).read_bytes(), inst)
    except OSError as exc:
        raise InputError(f"cannot read {args.solution}: {exc.strerror}") from exc
    except InstanceError as exc:
        raise InputError(f"{args.solution}: {exc}") from exc
    viol = check_hard(inst, sched)
    if viol:
        for v in viol:
            print(f"violation {v.rule} {v.entity}: {v.message}")
        return EXIT_INVALID
    _emit(evaluate(inst, sched, check=False).as_dict())
    return EXIT_OK


def cmd_bound(args):
    inst = _load_instance(args.instance)
    res = lower_bound_only(inst, _config(args))
    _emit(res)
    return EXIT_OK


def cmd_gen(args):
    knobs = {k: getattr(args, k) for k in ("patients", "days", "rooms", "nurses", "occupants", "theaters",
                                            "surgeons", "tightness", "seed")}
    try:
        inst = generator.generate(**knobs)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    data = dump_instance(inst)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="ihtc", description="Integrated hospital timetabling solver")
    sub = ap.add_subparsers(dest="command", required=True)

    def run_flags(p):
        p.add_argument("--time", type=float, help="total wall-clock budget in seconds (split evenly by phase)")
        p.add_argument("--time-scale", type=float, help="multiply every time limit")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, help="worker count (default 4)")
        p.add_argument("--config", help="key=value file with RunConfig fields")

    p = sub.add_parser("solve", help="solve an instance")
    p.add_argument("instance")
    p.add_argument("-o", "--out", help="solution file (default: embed in the report)")
    p.add_argument("--log", help="event log file")
    run_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a solution and print its costs")
    p.add_argument("instance")
    p.add_argument("solution")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bound", help="lower bound only")
    p.add_argument("instance")
    run_flags(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("gen", help="write a synthetic instance")
    defaults = generator.GenParams()
    for name in ("patients", "days", "rooms", "nurses", "occupants", "theaters", "surgeons", "seed"):
        p.add_argument(f"--{name}", type=int, default=getattr(defaults, name))
    p.add_argument("--tightness", type=float, default=defaults.tightness)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HardInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
