"""Command-line front end: ``nrb check|wp|prove|check-proof|model``.

Every command prints one JSON report ``{command, status, details, elapsed}``
on stdout.  Exit codes: 0 ok, 1 verdict/proof failure, 2 parse/scope/input
error, 3 wp oracle mismatch, 4 nondeterministic program, 5 state space too
large.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import kernel as kern
from .errors import (
    DomainNotClosed, EvaluationError, NotDeterministic, ParseError, ProofGenerationError,
    ScopeError, SizeLimitExceeded, TripleDoesNotHold,
)
from .evaluator import Domain
from .model import Interpreter, check_triple, colour_histogram, interpret, to_dot, to_json, transition_record
from .parser import parse_formula, parse_judgement, parse_program, show_bool
from .prover import generate_proof
from .syntax import Program, scope_check
from .wp import brute_wp, render, wp_states

log = logging.getLogger("nrb")

EXIT = {"ok": 0, "fail": 1, "error": 2}


@dataclass
class Report:
    command: str
    status: str
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0
    exit_code: int = 0

    def as_dict(self) -> dict:
        return {"command": self.command, "status": self.status, "details": self.details, "elapsed": self.elapsed}


class _Fail(Exception):
    def __init__(self, status: str, code: int, details: dict):
        self.status, self.code, self.details = status, code, details


def _load_program(path: str) -> Program:
    program = parse_program(Path(path).read_text(), path)
    diags = scope_check(program)
    if diags:
        raise ScopeError(diags)
    return program


def _domain(program: Program, args) -> Domain:
    return Domain.of_program(program, args.max_states)


def _load_judgement(path: str, program: Program):
    j = parse_judgement(Path(path).read_text(), path, default_stmt=program.main)
    diags = scope_check(program, extra=j.stmt, allow_free_labels=True)
    if diags:
        raise ScopeError(diags)
    return j


def _records(trans, dom, limit):
    return [transition_record(t, dom) for t in list(trans)[:limit]]


# -- commands -------------------------------------------------------------------------


def cmd_check(args, program: Program, judgement_path: str) -> dict:
    dom = _domain(program, args)
    j = _load_judgement(judgement_path, program)
    v = check_triple(j, dom, program.subs)
    details = {
        "judgement": judgement_path,
        "holds": v.holds,
        "counterexamples": _records(v.counterexamples, dom, args.max_counterexamples),
        "total_counterexamples": len(v.counterexamples),
    }
    if not v.holds:
        raise _Fail("fail", 1, details)
    return details


def cmd_wp(args, program: Program, formula: str) -> dict:
    dom = _domain(program, args)
    text = Path(formula).read_text() if Path(formula).is_file() else formula
    q = parse_formula(text.strip().rstrip(";"), formula)
    interp = Interpreter(dom, program.subs)
    states = wp_states(program.main, q, {}, dom, interp=interp)
    details = {"rendering": show_bool(render(states, dom)), "states": len(states), "domain_size": dom.size}
    if args.verify:
        brute = brute_wp(program.main, q, {}, dom, interp=interp)
        details["verified"] = brute == states
        if brute != states:
            details["diagnostics"] = [f"structural wp differs from the brute-force set on {len(brute ^ states)} state(s)"]
            raise _Fail("error", 3, details)
    return details


def cmd_prove(args, program: Program, judgement_path: str) -> dict:
    dom = _domain(program, args)
    j = _load_judgement(judgement_path, program)
    try:
        proof = generate_proof(j, dom, program.subs, lax_conseq=args.lax_conseq)
    except NotDeterministic as e:
        raise _Fail("error", 4, {"diagnostics": [f"NotDeterministic: {e}"]})
    except TripleDoesNotHold as e:
        raise _Fail("fail", 1, {
            "diagnostics": [f"TripleDoesNotHold: {e}"],
            "counterexamples": _records(e.counterexamples, dom, args.max_counterexamples),
        })
    except ProofGenerationError as e:
        raise _Fail("fail", 1, {"diagnostics": [f"ProofGenerationError: {e}"]})
    text = kern.to_json(proof)
    details = {"nodes": proof.size(), "rules_used": sorted(proof.rules_used()), "accepted": True}
    if args.json:
        Path(args.json).write_text(text)
        details["proof_file"] = args.json
    else:
        details["proof"] = json.loads(text)
    return details


def cmd_check_proof(args, program: Program, proof_path: str) -> dict:
    dom = _domain(program, args)
    proof = kern.from_json(Path(proof_path).read_text())
    diags = scope_check(program, extra=proof.conclusion.stmt, allow_free_labels=True)
    if diags:
        raise ScopeError(diags)
    v = kern.check_proof(proof, dom, program.subs, lax_conseq=args.lax_conseq)
    details = {"accepted": v.holds, "nodes": proof.size(), "diagnostics": [str(d) for d in v.diagnostics]}
    if not v.holds:
        raise _Fail("fail", 1, details)
    return details


def cmd_model(args, program: Program, _extra=None) -> dict:
    dom = _domain(program, args)
    trans = interpret(program.main, {}, dom, program.subs)
    details = {"transitions": len(trans), "histogram": colour_histogram(trans), "states": dom.size}
    if args.dot:
        Path(args.dot).write_text(to_dot(trans, dom))
        details["dot_file"] = args.dot
    if args.json:
        Path(args.json).write_text(to_json(trans, dom))
        details["json_file"] = args.json
    return details


COMMANDS = {
    "check": (cmd_check, "JUDGEMENT"),
    "wp": (cmd_wp, "FORMULA"),
    "prove": (cmd_prove, "JUDGEMENT"),
    "check-proof": (cmd_check_proof, "PROOF"),
    "model": (cmd_model, None),
}


def run_one(command: str, args, program_path: str, extra: str | None) -> Report:
    fn = COMMANDS[command][0]
    start = time.perf_counter()
    try:
        program = _load_program(program_path)
        details = fn(args, program, extra)
        status, code = "ok", 0
    except _Fail as f:
        status, code, details = f.status, f.code, f.details
    except (ParseError, OSError) as e:
        status, code, details = "error", 2, {"diagnostics": [f"{type(e).__name__}: {e}"]}
    except ScopeError as e:
        status, code, details = "error", 2, {"diagnostics": [str(d) for d in e.diagnostics]}
    except (DomainNotClosed, EvaluationError) as e:
        status, code, details = "error", 2, {"diagnostics": [f"{type(e).__name__}: {e}"]}
    except SizeLimitExceeded as e:
        status, code, details = "error", 5, {"diagnostics": [f"SizeLimitExceeded: {e}"]}
    elapsed = round((time.perf_counter() - start) * 1000, 3)
    return Report(command, status, details, elapsed, code)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nrb", description="Check, model and prove triples about small imperative programs.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("program", help="program file (var declarations, subroutines, main)")
    ap.add_argument("extra", nargs="?", help="judgement file, postcondition formula, or proof file")
    ap.add_argument("--verify", action="store_true", help="wp: compare with the brute-force oracle")
    ap.add_argument("--dot", metavar="PATH", help="model: write the transitions as a DOT graph")
    ap.add_argument("--json", metavar="PATH", help="model: write transitions as JSON; prove: write the proof")
    ap.add_argument("--max-states", type=int, default=None, help="state space cap (default: $NRB_MAX_STATES or 10^6)")
    ap.add_argument("--max-counterexamples", type=int, default=5)
    ap.add_argument("--suite", metavar="DIR", help="run the command on every judgement/proof file in DIR")
    ap.add_argument("--lax-conseq", action="store_true", help="drop the G(l) clause of the weakening rule")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _suite_files(command: str, directory: str) -> list[Path]:
    pattern = "*.json" if command == "check-proof" else "*.j"
    return sorted(Path(directory).glob(pattern))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    needs_extra = COMMANDS[args.command][1]
    if args.suite:
        reports = []
        for path in _suite_files(args.command, args.suite):
            own = path.with_suffix(".nrb")
            reports.append(run_one(args.command, args, str(own if own.is_file() else args.program), str(path)))
        print(json.dumps([r.as_dict() for r in reports], indent=2))
        return max((r.exit_code for r in reports), default=0)
    if needs_extra and args.extra is None:
        print(f"nrb {args.command}: missing {needs_extra} argument", file=sys.stderr)
        return 2
    report = run_one(args.command, args, args.program, args.extra)
    print(json.dumps(report.as_dict(), indent=2))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
