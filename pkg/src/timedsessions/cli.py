"""Command-line front end over spec files.

Subcommands: check (well-formedness), dual (direction flip), progress
(bounded verification), compat (system compatibility), run (process
interpreter), simulate (system walk).  Exit codes: 0 pass, 1 property
violation or counterexample, 2 usage or parse error, 3 bound exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
import time
from pathlib import Path

from .errors import ParseError, ProtocolError, SpecError
from .parser import parse_spec_file, parse_valuation
from .processes import RunPolicy, RunStatus, run as run_process
from .rational import format_rational, parse_rational
from .semantics import (
    ExploreLimits,
    check_progress,
    compatible,
    digest_system,
    make_system,
    system_steps,
)
from .sessiontypes import check_well_formed, dual, format_type

EXIT_PASS = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_BOUND = 3


def _load(path: str):
    source = Path(path).read_text(encoding="utf-8")
    digest = hashlib.sha256(source.encode("utf-8")).hexdigest()[:16]
    return parse_spec_file(source), digest


def _envelope(command: str, digest: str, verdict: str, diagnostics,
              started: float) -> dict:
    return {
        "command": command,
        "input": digest,
        "verdict": verdict,
        "diagnostics": diagnostics,
        "timing": round(time.monotonic() - started, 6),
    }


def _emit(args, envelope: dict, text_lines) -> None:
    if args.json:
        print(json.dumps(envelope, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _sys_action_json(action) -> dict:
    out = {"action": action.kind}
    if action.t is not None:
        out["t"] = format_rational(action.t)
    if action.message is not None:
        out["label"] = action.message.label
        out["dir"] = "!" if action.kind.startswith("comm") else "?"
    return out


def cmd_check(args) -> int:
    started = time.monotonic()
    spec, digest = _load(args.file)
    if args.type_name not in spec.types:
        raise ParseError(f"unknown type {args.type_name!r}")
    node = spec.types[args.type_name]
    nu = parse_valuation(args.at) if args.at else None
    report = check_well_formed(node, nu, clocks=spec.clocks)
    diags = [{"path": list(v.path), "condition": v.condition,
              "witness": v.witness} for v in report.violations]
    verdict = "well-formed" if report.verdict else "ill-formed"
    lines = [f"{args.type_name}: {verdict}"]
    for v in report.violations:
        lines.append(f"  {v.condition} at [{' '.join(v.path) or 'root'}]: "
                     f"{v.witness}")
    _emit(args, _envelope("check", digest, verdict, diags, started), lines)
    return EXIT_PASS if report.verdict else EXIT_VIOLATION


def cmd_dual(args) -> int:
    started = time.monotonic()
    spec, digest = _load(args.file)
    if args.type_name not in spec.types:
        raise ParseError(f"unknown type {args.type_name!r}")
    text = format_type(dual(spec.types[args.type_name]))
    _emit(args, _envelope("dual", digest, "ok", {"type": text}, started),
          [text])
    return EXIT_PASS


def _limits(args) -> ExploreLimits:
    horizon = parse_rational(args.horizon) if args.horizon else None
    return ExploreLimits(max_depth=args.depth, max_queue=args.queue,
                         horizon=horizon, max_states=args.states)


def cmd_progress(args) -> int:
    started = time.monotonic()
    spec, digest = _load(args.file)
    left, right = spec.resolve_system(args.system_name)
    system = make_system(left, right, spec.clocks)
    report = check_progress(system, _limits(args), monitor=args.monitor)
    trace = [dict(_sys_action_json(action), state=state)
             for action, state in report.trace]
    diags = {"states": report.states_visited, "reason": report.reason,
             "trace": trace,
             "invariant_violations": report.invariant_violations}
    lines = [f"{args.system_name}: {report.verdict} "
             f"({report.states_visited} states)"]
    if report.reason:
        lines.append(f"  {report.reason}")
    for depth, (action, state) in enumerate(report.trace):
        lines.append(f"{depth} {action} {state}")
    for violation in report.invariant_violations:
        lines.append(f"  invariant: {violation}")
    _emit(args, _envelope("progress", digest, report.verdict, diags, started),
          lines)
    if report.verdict == "ok":
        return EXIT_PASS
    if report.verdict == "bound-exceeded":
        return EXIT_BOUND
    return EXIT_VIOLATION


def cmd_compat(args) -> int:
    started = time.monotonic()
    spec, digest = _load(args.file)
    left, right = spec.resolve_system(args.system_name)
    system = make_system(left, right, spec.clocks)
    ok, why = compatible(system)
    verdict = "compatible" if ok else "incompatible"
    _emit(args, _envelope("compat", digest, verdict, {"explanation": why},
                          started),
          [f"{args.system_name}: {verdict} ({why})"])
    return EXIT_PASS if ok else EXIT_VIOLATION


def cmd_run(args) -> int:
    started = time.monotonic()
    spec, digest = _load(args.file)
    if args.process_name not in spec.processes:
        raise ParseError(f"unknown process {args.process_name!r}")
    node = spec.processes[args.process_name]
    schedule = None
    if args.delays:
        schedule = [parse_rational(x) for x in args.delays.split(",")]
    policy = RunPolicy(seed=args.seed, fuel=args.fuel,
                       delay_resolution=schedule)
    result = run_process(node, policy)
    diags = {"status": result.status, "detail": result.detail,
             "elapsed": format_rational(result.elapsed),
             "trace": result.trace}
    lines = list(result.trace)
    lines.append(f"status: {result.status} ({result.detail}) after "
                 f"{format_rational(result.elapsed)} time units")
    _emit(args, _envelope("run", digest, result.status, diags, started), lines)
    if result.status == RunStatus.COMPLETED:
        return EXIT_PASS
    if result.status == RunStatus.FUEL_EXHAUSTED:
        return EXIT_BOUND
    return EXIT_VIOLATION


def cmd_simulate(args) -> int:
    started = time.monotonic()
    spec, digest = _load(args.file)
    left, right = spec.resolve_system(args.system_name)
    system = make_system(left, right, spec.clocks)
    rng = random.Random(args.seed)
    lines = []
    trace = []
    verdict = "ok"
    for depth in range(args.trace_len):
        try:
            steps = system_steps(system)
        except ProtocolError as exc:
            verdict = "protocol-error"
            lines.append(f"  {exc}")
            break
        if not steps:
            if not (system.left.is_final() and system.right.is_final()):
                verdict = "stuck"
            break
        action, system = steps[rng.randrange(len(steps))]
        if (len(system.left.queue) > args.queue
                or len(system.right.queue) > args.queue):
            verdict = "bound-exceeded"
            break
        line = (f"{depth} {action} "
                f"{digest_system(system)}")
        lines.append(line)
        trace.append(dict(_sys_action_json(action),
                          state=digest_system(system)))
    lines.append(f"verdict: {verdict}")
    _emit(args, _envelope("simulate", digest, verdict,
                          {"trace": trace}, started), lines)
    if verdict == "ok":
        return EXIT_PASS
    if verdict == "bound-exceeded":
        return EXIT_BOUND
    return EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timedsessions",
        description="Verify and simulate timed session types with safe "
                    "mixed-choice")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true",
                       help="emit a machine-readable report envelope")

    p = sub.add_parser("check", help="decide well-formedness of a type")
    p.add_argument("file")
    p.add_argument("type_name")
    p.add_argument("--at", help="initial valuation, e.g. x=0,y=1/2")
    common(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("dual", help="print the dual of a type")
    p.add_argument("file")
    p.add_argument("type_name")
    common(p)
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("progress", help="bounded progress verification")
    p.add_argument("file")
    p.add_argument("system_name")
    p.add_argument("--depth", type=int, default=64)
    p.add_argument("--queue", type=int, default=8)
    p.add_argument("--horizon", help="delay sampling horizon (rational)")
    p.add_argument("--states", type=int, default=100000)
    p.add_argument("--monitor", action="store_true",
                   help="assert the run-time invariants at every state")
    common(p)
    p.set_defaults(func=cmd_progress)

    p = sub.add_parser("compat", help="decide system compatibility")
    p.add_argument("file")
    p.add_argument("system_name")
    common(p)
    p.set_defaults(func=cmd_compat)

    p = sub.add_parser("run", help="interpret a process")
    p.add_argument("file")
    p.add_argument("process_name")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fuel", type=int, default=10000)
    p.add_argument("--delays",
                   help="comma-separated durations resolving delay(c) "
                        "constraints in order")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simulate", help="random walk over system steps")
    p.add_argument("file")
    p.add_argument("system_name")
    p.add_argument("--trace-len", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--queue", type=int, default=8)
    common(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except (ParseError, SpecError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
