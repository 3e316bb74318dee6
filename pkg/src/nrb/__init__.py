"""Transition semantics with coloured exits, modal postconditions, weakest
preconditions and a checkable proof system for a small imperative language."""

from .errors import (
    DomainNotClosed, EvaluationError, NonModalRequired, NotDeterministic, NRBError, ParseError,
    ProofGenerationError, ScopeError, SizeLimitExceeded, TripleDoesNotHold, UnboundVariable,
)
from .evaluator import Domain, eval_bool, eval_term, substitute
from .kernel import ProofNode, check_proof, check_rule
from .modal import decompose, eval_modal, modal_equivalent, modal_implies, recompose
from .model import check_triple, determinism_check, interpret, label_fixpoint
from .parser import parse_bool, parse_formula, parse_judgement, parse_program, parse_stmt, parse_term
from .prover import generate_proof
from .syntax import Judgement, Program, scope_check
from .wp import brute_wp, verify_wp, wp, wp_states

__all__ = [
    "DomainNotClosed", "EvaluationError", "NonModalRequired", "NotDeterministic", "NRBError", "ParseError",
    "ProofGenerationError", "ScopeError", "SizeLimitExceeded", "TripleDoesNotHold", "UnboundVariable",
    "Domain", "eval_bool", "eval_term", "substitute", "ProofNode", "check_proof", "check_rule",
    "decompose", "eval_modal", "modal_equivalent", "modal_implies", "recompose",
    "check_triple", "determinism_check", "interpret", "label_fixpoint",
    "parse_bool", "parse_formula", "parse_judgement", "parse_program", "parse_stmt", "parse_term",
    "generate_proof", "Judgement", "Program", "scope_check", "brute_wp", "verify_wp", "wp", "wp_states",
]
