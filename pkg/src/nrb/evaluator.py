"""Evaluation of terms in a state, and the finite state space they range over."""

from __future__ import annotations

import itertools
import logging
import os
from functools import cached_property
from typing import Iterable, Mapping

from .errors import SizeLimitExceeded, UnboundVariable, EvaluationError
from .syntax import (
    Add, And, BFalse, BTrue, BoolTerm, Cond, Exists, IntConst, Not, Or, Rel, Scale, Term, Var,
    Program, term_vars,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_STATES = 10**6

State = tuple[int, ...]


def default_max_states() -> int:
    return int(os.environ.get("NRB_MAX_STATES", DEFAULT_MAX_STATES))


class Domain:
    """Per-variable inclusive ranges; states are value tuples in sorted variable-name order."""

    def __init__(self, ranges: Mapping[str, tuple[int, int]], max_states: int | None = None):
        self.names: tuple[str, ...] = tuple(sorted(ranges))
        self.ranges = {n: tuple(ranges[n]) for n in self.names}
        for n, (lo, hi) in self.ranges.items():
            if lo > hi:
                raise ValueError(f"empty range for {n!r}")
        self.max_states = default_max_states() if max_states is None else max_states
        self.index = {n: i for i, n in enumerate(self.names)}
        self._envs: dict[State, dict[str, int]] = {}
        self._ext: dict[BoolTerm, frozenset[State]] = {}

    @classmethod
    def of_program(cls, program: Program, max_states: int | None = None) -> "Domain":
        return cls(program.ranges(), max_states)

    @property
    def size(self) -> int:
        out = 1
        for lo, hi in self.ranges.values():
            out *= hi - lo + 1
        return out

    @cached_property
    def states(self) -> tuple[State, ...]:
        if self.size > self.max_states:
            raise SizeLimitExceeded(self.size, self.max_states)
        return tuple(itertools.product(*(range(lo, hi + 1) for lo, hi in self.ranges.values())))

    @cached_property
    def all_states(self) -> frozenset[State]:
        return frozenset(self.states)

    def contains(self, s: State) -> bool:
        return all(lo <= v <= hi for v, (lo, hi) in zip(s, self.ranges.values()))

    def out_of_range(self, s: State) -> tuple[str, int] | None:
        for name, v in zip(self.names, s):
            lo, hi = self.ranges[name]
            if not lo <= v <= hi:
                return name, v
        return None

    def env(self, s: State) -> dict[str, int]:
        e = self._envs.get(s)
        if e is None:
            e = self._envs[s] = dict(zip(self.names, s))
        return e

    def state(self, values: Mapping[str, int]) -> State:
        return tuple(values[n] for n in self.names)

    def update(self, s: State, var: str, value: int) -> State:
        i = self.index[var]
        return s[:i] + (value,) + s[i + 1:]

    def range_of(self, var: str) -> tuple[int, int]:
        if var in self.ranges:
            return self.ranges[var]
        # binders renamed by substitution keep the range of their original name
        base = var.split("__")[0]
        if base in self.ranges:
            return self.ranges[base]
        raise EvaluationError(f"quantified variable {var!r} has no declared range")

    def holds(self, b: BoolTerm, s: State) -> bool:
        return eval_bool(b, self.env(s), self)

    def extension(self, b: BoolTerm) -> frozenset[State]:
        out = self._ext.get(b)
        if out is None:
            if len(self._ext) > 200_000:
                self._ext.clear()
            out = self._ext[b] = frozenset(s for s in self.states if self.holds(b, s))
        return out

    def show(self, s: State) -> str:
        return "{" + ", ".join(f"{n}:{v}" for n, v in zip(self.names, s)) + "}"

    def __repr__(self) -> str:
        inner = ", ".join(f"{n}: {lo}..{hi}" for n, (lo, hi) in self.ranges.items())
        return f"Domain({{{inner}}})"


def enumerate_states(dom: Domain) -> list[dict[str, int]]:
    return [dict(dom.env(s)) for s in dom.states]


def eval_term(e: Term, s: Mapping[str, int], dom: Domain | None = None) -> int:
    match e:
        case IntConst(v):
            return v
        case Var(name):
            try:
                return s[name]
            except KeyError:
                raise UnboundVariable(name) from None
        case Scale(k, arg):
            return k * eval_term(arg, s, dom)
        case Add(a, b):
            return eval_term(a, s, dom) + eval_term(b, s, dom)
        case Cond(t, a, b):
            return eval_term(a, s, dom) if eval_bool(t, s, dom) else eval_term(b, s, dom)
    raise TypeError(f"not a term: {e!r}")


_REL = {
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}

_warned_exists = False


def eval_bool(b: BoolTerm, s: Mapping[str, int], dom: Domain | None = None) -> bool:
    """Truth of ``b`` in state ``s``.

    ``exists v. body`` ranges over the declared range of ``v`` in ``dom``,
    not over all integers.
    """
    global _warned_exists
    match b:
        case BTrue():
            return True
        case BFalse():
            return False
        case Rel(l, op, r):
            return _REL[op](eval_term(l, s, dom), eval_term(r, s, dom))
        case Or(x, y):
            return eval_bool(x, s, dom) or eval_bool(y, s, dom)
        case And(x, y):
            return eval_bool(x, s, dom) and eval_bool(y, s, dom)
        case Not(x):
            return not eval_bool(x, s, dom)
        case Exists(v, body):
            if dom is None:
                raise EvaluationError(f"cannot range over {v!r} without a domain")
            if not _warned_exists:
                log.info("exists is evaluated over declared ranges only, not over all integers")
                _warned_exists = True
            lo, hi = dom.range_of(v)
            inner = dict(s)
            for n in range(lo, hi + 1):
                inner[v] = n
                if eval_bool(body, inner, dom):
                    return True
            return False
    raise TypeError(f"not a boolean term: {b!r}")


# -- substitution -----------------------------------------------------------------


def _fresh(base: str, avoid: set[str]) -> str:
    root = base.split("__")[0]
    for i in itertools.count(1):
        cand = f"{root}__{i}"
        if cand not in avoid:
            return cand
    raise AssertionError


def subst_term(t: Term, x: str, e: Term) -> Term:
    match t:
        case IntConst(_):
            return t
        case Var(name):
            return e if name == x else t
        case Scale(k, arg):
            return Scale(k, subst_term(arg, x, e))
        case Add(a, b):
            return Add(subst_term(a, x, e), subst_term(b, x, e))
        case Cond(c, a, b):
            return Cond(substitute(c, x, e), subst_term(a, x, e), subst_term(b, x, e))
    raise TypeError(t)


def substitute(b: BoolTerm, x: str, e: Term) -> BoolTerm:
    """Capture-avoiding ``b[e/x]``."""
    match b:
        case BTrue() | BFalse():
            return b
        case Rel(l, op, r):
            return Rel(subst_term(l, x, e), op, subst_term(r, x, e))
        case Or(p, q):
            return Or(substitute(p, x, e), substitute(q, x, e))
        case And(p, q):
            return And(substitute(p, x, e), substitute(q, x, e))
        case Not(p):
            return Not(substitute(p, x, e))
        case Exists(v, body):
            if v == x:
                return b
            if v in term_vars(e):
                w = _fresh(v, term_vars(e) | term_vars(body) | {x})
                body = substitute(body, v, Var(w))
                v = w
            return Exists(v, substitute(body, x, e))
    raise TypeError(b)


def free_vars(b: BoolTerm) -> set[str]:
    match b:
        case Exists(v, body):
            return free_vars(body) - {v}
        case Or(p, q) | And(p, q):
            return free_vars(p) | free_vars(q)
        case Not(p):
            return free_vars(p)
        case Rel(l, _, r):
            return _term_free(l) | _term_free(r)
    return set()


def _term_free(t: Term) -> set[str]:
    match t:
        case Var(name):
            return {name}
        case Scale(_, a):
            return _term_free(a)
        case Add(a, b):
            return _term_free(a) | _term_free(b)
        case Cond(c, a, b):
            return free_vars(c) | _term_free(a) | _term_free(b)
    return set()


def states_of(values: Iterable[Mapping[str, int]], dom: Domain) -> frozenset[State]:
    return frozenset(dom.state(v) for v in values)
