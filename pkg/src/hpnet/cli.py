"""``hpnet`` command line.

Exit status: 0 when every requested check passes, 1 when a check fails or
cannot be decided within the limits, 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from importlib import resources
from pathlib import Path

from . import __version__
from .dsl import ParseError, parse_net, parse_pattern, serialize_net
from .hierarchy import HierarchicalNet, HierarchyError, check_condition_alteration, check_hierarchy, flatten
from .net import validate_structure
from .patterns import EQUAL, CONTAINS, check_bounds_against_oracle, teb_eval
from .report import FAIL, PASS, UNKNOWN, Verdict
from .timed import check_schedulability, check_time_consistency, timed_state_graph
from .untimed import (ExploreLimits, check_boundedness, check_deadlock_freedom, check_proper_completion,
                      check_wellformed_workflow, reachability_graph)

FIXTURE_PREFIX = "fixture:"


class UsageError(Exception):
    pass


def fixture_path(name: str) -> Path:
    path = resources.files("hpnet") / "fixtures" / name
    if not path.is_file():
        raise UsageError(f"no bundled fixture named {name!r}")
    return Path(str(path))


def read_input(arg: str) -> tuple[bytes, str]:
    if arg.startswith(FIXTURE_PREFIX):
        name = arg[len(FIXTURE_PREFIX):]
        if "." not in name:
            name += ".hpn"
        return fixture_path(name).read_bytes(), arg
    path = Path(arg)
    if not path.is_file():
        raise UsageError(f"input file {arg!r} does not exist")
    return path.read_bytes(), arg


def healthcare_fixture() -> HierarchicalNet:
    """The bundled healthcare workflow with its HealthService refinement (timings are illustrative)."""
    return parse_net(fixture_path("healthcare.hpn").read_bytes(), "healthcare.hpn")


def _validate(h: HierarchicalNet, strict: bool) -> list[Verdict]:
    found = []
    for name, net in h.nets.items():
        found += [{"net": name, "location": v.location, "code": v.code, "message": v.message}
                  for v in validate_structure(net, strict_intervals=strict)]
    found += [{"net": "", "location": "", "code": e.code, "message": str(e)} for e in check_hierarchy(h)]
    out = [Verdict("validate_structure", FAIL if found else PASS, None,
                   {"violations": found} if found else {"nets": sorted(h.nets)})]
    if not found:
        for owner, t in sorted(h.bindings):
            out.append(check_condition_alteration(h, t, owner))
    return out


def _analyze(h, args, lim) -> list[Verdict]:
    net = flatten(h)
    structural = validate_structure(net, strict_intervals=args.strict_intervals)
    out = [Verdict("validate_structure", FAIL if structural else PASS, None,
                   {"violations": [{"location": v.location, "code": v.code, "message": v.message}
                                   for v in structural]} if structural else {})]
    if structural:
        return out
    start = {net.entry: 1}
    g = reachability_graph(net, start, lim)
    out.append(check_wellformed_workflow(net))
    out.append(check_boundedness(net, start, args.k, lim, graph=g))
    out.append(check_deadlock_freedom(net, start, lim, graph=g))
    out.append(check_proper_completion(net, lim, graph=g))
    return out


def _schedule(h, args, lim) -> list[Verdict]:
    net = flatten(h)
    structural = validate_structure(net, strict_intervals=args.strict_intervals)
    if structural:
        return [Verdict("validate_structure", FAIL, None,
                        {"violations": [{"location": v.location, "code": v.code} for v in structural]})]
    g = timed_state_graph(net, lim)
    rep = check_schedulability(net, args.deadline, lim, graph=g)
    result = {"yes": PASS, "no": FAIL, "unknown": UNKNOWN}[rep.schedulable]
    details = {
        "schedulable": rep.schedulable,
        "completion": None if rep.completion is None else str(rep.completion),
        "deadline": args.deadline,
        "states": rep.states,
        "truncated": rep.truncated,
        "violations": [v.to_json() for v in rep.violations],
    }
    if rep.max_witness is not None:
        details["max_witness"] = [s.to_json() for s in rep.max_witness]
    out = [Verdict("schedulability", result, rep.min_witness, details)]
    tc = check_time_consistency(net, lim, graph=g)
    if g.truncated and not tc:
        out.append(Verdict("time_consistency", UNKNOWN, None, {"violations": []}))
    else:
        out.append(Verdict("time_consistency", FAIL if tc else PASS, None,
                           {"violations": [v.to_json() for v in tc]}))
    return out


def _teb(expr, args, lim) -> list[Verdict]:
    return [Verdict("teb", PASS, None, {"interval": str(teb_eval(expr))})]


def _oracle(expr, args, lim) -> list[Verdict]:
    res = check_bounds_against_oracle(expr, lim)
    result = PASS if res.relation in (EQUAL, CONTAINS) else (UNKNOWN if res.relation == UNKNOWN else FAIL)
    return [Verdict("oracle_check", result, None, res.to_json())]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hpnet", description="Hierarchical timed Petri net workbench.")
    parser.add_argument("--version", action="version", version=f"hpnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, pattern=False):
        p.add_argument("input", help="input file, or fixture:NAME for a bundled fixture")
        p.add_argument("--json", action="store_true", help="emit a JSON report")
        p.add_argument("--max-states", type=int, default=ExploreLimits.max_states)
        p.add_argument("--max-token-bound", type=int, default=ExploreLimits.max_token_bound)
        if not pattern:
            p.add_argument("--strict-intervals", action="store_true",
                           help="require lo < hi for every declared window")
        return p

    common(sub.add_parser("validate", help="check net structure and refinement bindings"))
    common(sub.add_parser("flatten", help="print the flattened net"))
    common(sub.add_parser("analyze", help="safeness, deadlock freedom, proper completion")).add_argument(
        "--k", type=int, default=1, help="token bound for the boundedness check")
    common(sub.add_parser("schedule", help="schedulability and time consistency")).add_argument(
        "--deadline", type=int, default=None)
    common(sub.add_parser("teb", help="evaluate a pattern with the interval calculus"), pattern=True)
    common(sub.add_parser("oracle-check", help="compare the calculus with the timed state space"), pattern=True)
    return parser


def _human(command: str, verdicts: list[Verdict], notes: list[str]) -> str:
    if command == "teb":
        return verdicts[0].details["interval"] + "\n"
    lines = [f"warning: {n}" for n in notes]
    for v in verdicts:
        lines.append(f"{v.check}: {v.result.upper()}")
        for key, value in v.details.items():
            if key in ("violations", "max_witness") and not value:
                continue
            if key == "net":
                continue
            lines.append(f"  {key}: {json.dumps(value) if not isinstance(value, str) else value}")
        if v.witness:
            lines.append("  witness: " + " ".join(
                s.transition if s.time is None else f"{s.transition}@{s.time}" for s in v.witness))
    if command == "flatten":
        lines.append("")
        lines.append(verdicts[0].details["net"].rstrip("\n"))
    return "\n".join(lines) + "\n"


def run_cli(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2

    try:
        lim = ExploreLimits(args.max_states, args.max_token_bound)
        data, label = read_input(args.input)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if args.command in ("teb", "oracle-check"):
                subject = parse_pattern(data, label)
            else:
                subject = parse_net(data, label)
            if args.command == "validate":
                verdicts = _validate(subject, args.strict_intervals)
            elif args.command == "flatten":
                flat = flatten(subject)
                verdicts = [Verdict("flatten", PASS, None, {"net": serialize_net(flat)})]
            else:
                handler = {"analyze": _analyze, "schedule": _schedule,
                           "teb": _teb, "oracle-check": _oracle}[args.command]
                verdicts = handler(subject, args, lim)
        notes = [str(w.message) for w in caught]
    except ParseError as exc:
        for d in exc.diagnostics:
            print(d, file=stderr)
        return 2
    except (UsageError, ValueError) as exc:
        if isinstance(exc, HierarchyError):
            print(f"{args.input}: error {exc}", file=stderr)
        else:
            print(f"hpnet: {exc}", file=stderr)
        return 2

    if args.json:
        report = {"tool_version": __version__, "command": args.command, "input": label,
                  "verdicts": [v.to_json() for v in verdicts]}
        if notes:
            report["warnings"] = notes
        stdout.write(json.dumps(report, indent=2) + "\n")
    else:
        stdout.write(_human(args.command, verdicts, notes))
    return 0 if all(v.result == PASS for v in verdicts) else 1


def main():
    sys.exit(run_cli())
