"""Coloured-transition models of statements and the semantic triple checker.

A transition is a tuple ``(s0, colour, s1)``.  Models are computed only
from a requested set of initial states, which keeps loops and sequencing
cheap; the result equals the full model restricted to those states.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import DomainNotClosed
from .evaluator import Domain, State, eval_term
from .syntax import (
    Assign, B, BoolTerm, Break, Call, Choice, Colour, Diagnostic, Do, E, G, Goto, Guard,
    Judgement, LabelDecl, Labelled, N, R, Return, Seq, Skip, Stmt, Throw, TryCatch,
)

Transition = tuple[State, Colour, State]
TransitionSet = frozenset
GotoEnv = Mapping[str, frozenset]


def sort_key(t: Transition):
    return (t[0], str(t[1]), t[2])


def _env_key(g: GotoEnv):
    return tuple(sorted((l, s) for l, s in g.items() if s))


class Interpreter:
    """Computes models over one domain and one subroutine table, caching label fixpoints and calls."""

    def __init__(self, dom: Domain, subs: Mapping[str, Stmt] | None = None):
        self.dom = dom
        self.subs = dict(subs or {})
        self._fix: dict = {}
        self._calls: dict[str, dict[State, list]] = {}

    # -- helpers --

    def _check(self, s: State, where: Stmt):
        bad = self.dom.out_of_range(s)
        if bad is not None:
            raise DomainNotClosed(bad[0], bad[1], getattr(where, "span", None))

    def _compose(self, first: Iterable[Transition], colour: Colour, then_fn, where: Stmt) -> set:
        """Pass through transitions not of ``colour``; feed the final states of the others into ``then_fn``."""
        out, mids = set(), set()
        first = list(first)
        for s0, c, s1 in first:
            if c == colour:
                self._check(s1, where)
                mids.add(s1)
            else:
                out.add((s0, c, s1))
        if not mids:
            return out
        by_start = defaultdict(list)
        for s0, c, s1 in then_fn(frozenset(mids)):
            by_start[s0].append((c, s1))
        for s0, c, s1 in first:
            if c == colour:
                out.update((s0, c2, s2) for c2, s2 in by_start[s1])
        return out

    # -- the model --

    def run(self, stmt: Stmt, g: GotoEnv, starts: frozenset) -> set:
        dom = self.dom
        match stmt:
            case Skip():
                return {(s, N, s) for s in starts}
            case Return():
                return {(s, R, s) for s in starts}
            case Break():
                return {(s, B, s) for s in starts}
            case Goto(l):
                return {(s, G(l), s) for s in starts}
            case Throw(k):
                return {(s, E(k), s) for s in starts}
            case Assign(x, e):
                return {(s, N, dom.update(s, x, eval_term(e, dom.env(s), dom))) for s in starts}
            case Guard(b, body):
                return self.run(body, g, frozenset(s for s in starts if dom.holds(b, s)))
            case Choice(p, q):
                return self.run(p, g, starts) | self.run(q, g, starts)
            case Seq(p, q):
                return self._compose(self.run(p, g, starts), N, lambda ms: self.run(q, g, ms), p)
            case Do(body):
                return self._loop(body, g, starts)
            case Labelled(body, l):
                targets = g.get(l, frozenset())
                return self.run(body, g, starts) | {(s0, N, s1) for s0 in starts for s1 in targets}
            case LabelDecl(l, body):
                inner = {**g, l: self.label_fixpoint(l, body, g)}
                return {t for t in self.run(body, inner, starts) if t[1] != G(l)}
            case Call(h):
                table = self._call_table(h, starts)
                return {(s0, c, s1) for s0 in starts for c, s1 in table[s0]}
            case TryCatch(body, k, handler):
                return self._compose(self.run(body, g, starts), E(k), lambda ms: self.run(handler, g, ms), body)
        raise TypeError(f"not a statement: {stmt!r}")

    def _loop(self, body: Stmt, g: GotoEnv, starts: frozenset) -> set:
        # loop heads reachable through normal exits of the body
        exits: dict[State, list] = {}
        succ: dict[State, set] = {}
        todo = set(starts)
        while todo:
            batch = frozenset(todo)
            todo = set()
            for s in batch:
                exits[s], succ[s] = [], set()
            for s0, c, s1 in self.run(body, g, batch):
                if c == N:
                    self._check(s1, body)
                    succ[s0].add(s1)
                    if s1 not in exits and s1 not in batch:
                        todo.add(s1)
                else:
                    exits[s0].append((N if c == B else c, s1))
        out = set()
        for s in starts:
            seen, stack = {s}, [s]
            while stack:
                h = stack.pop()
                out.update((s, c, s1) for c, s1 in exits[h])
                for nxt in succ[h]:
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
        return out

    def label_fixpoint(self, label: str, body: Stmt, g: GotoEnv) -> frozenset:
        """Least set ``X`` with ``X = {s1 | s0 -G_label-> s1 in model(body) under g + {label: X}}``."""
        key = (label, body, _env_key(g))
        hit = self._fix.get(key)
        if hit is not None:
            return hit
        everything = frozenset(self.dom.states)
        cur: frozenset = frozenset()
        colour = G(label)
        while True:
            trans = self.run(body, {**g, label: cur}, everything)
            nxt = frozenset(s1 for _, c, s1 in trans if c == colour)
            if nxt == cur:
                break
            cur = nxt
        self._fix[key] = cur
        return cur

    def _call_table(self, h: str, starts: Iterable[State]) -> dict[State, list]:
        # filled lazily per start state; the body runs with no goto assumptions, so rows are independent
        table = self._calls.setdefault(h, {})
        missing = frozenset(s for s in starts if s not in table)
        if missing:
            for s in missing:
                table[s] = []
            for s0, c, s1 in self.run(self.subs[h], {}, missing):
                if c == R:
                    table[s0].append((N, s1))
                elif c.tag == "E":
                    table[s0].append((c, s1))
        return table

def goto_env(g, dom: Domain) -> dict[str, frozenset]:
    """Normalize a goto environment given as sets of states or as boolean terms."""
    out = {}
    for l, v in (g or {}).items():
        out[l] = dom.extension(v) if not isinstance(v, (set, frozenset)) else frozenset(v)
    return out


def interpret(stmt: Stmt, g, dom: Domain, subs=None, starts=None) -> frozenset:
    """The model of ``stmt`` under goto environment ``g`` (from ``starts``, default every state)."""
    starts = frozenset(dom.states) if starts is None else frozenset(starts)
    return frozenset(Interpreter(dom, subs).run(stmt, goto_env(g, dom), starts))


def label_fixpoint(label: str, body: Stmt, g, dom: Domain, subs=None) -> frozenset:
    return Interpreter(dom, subs).label_fixpoint(label, body, goto_env(g, dom))


@dataclass
class Verdict:
    holds: bool
    counterexamples: list = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.holds


def check_triple(j: Judgement, dom: Domain, subs=None, interp: Interpreter | None = None) -> Verdict:
    """Does every transition from a ``pre`` state satisfy ``post``, with gotos fed by the assumptions?"""
    from .modal import eval_modal

    interp = interp or Interpreter(dom, subs)
    g = {l: dom.extension(p) for l, p in j.env().items()}
    trans = interp.run(j.stmt, g, dom.extension(j.pre))
    bad = sorted((t for t in trans if not eval_modal(j.post, t, dom)), key=sort_key)
    return Verdict(not bad, bad)


def determinism_check(stmt: Stmt, g, dom: Domain, subs=None) -> bool:
    seen: set[State] = set()
    for s0, _, _ in interpret(stmt, g, dom, subs):
        if s0 in seen:
            return False
        seen.add(s0)
    return True


def colour_histogram(trans: Iterable[Transition]) -> dict[str, int]:
    out: dict[str, int] = defaultdict(int)
    for _, c, _ in trans:
        out[str(c)] += 1
    return dict(sorted(out.items()))


def transition_record(t: Transition, dom: Domain) -> dict:
    return {"from": dict(dom.env(t[0])), "colour": str(t[1]), "to": dict(dom.env(t[2]))}


def to_json(trans: Iterable[Transition], dom: Domain) -> str:
    return json.dumps([transition_record(t, dom) for t in sorted(trans, key=sort_key)], indent=2) + "\n"


def to_dot(trans: Iterable[Transition], dom: Domain, name: str = "model") -> str:
    trans = sorted(trans, key=sort_key)
    states = sorted({s for t in trans for s in (t[0], t[2])})
    ids = {s: f"s{i}" for i, s in enumerate(states)}
    lines = [f"digraph {name} {{"]
    for s in states:
        label = ", ".join(f"{n}={v}" for n, v in zip(dom.names, s))
        lines.append(f'  {ids[s]} [label="{label}"];')
    for s0, c, s1 in trans:
        lines.append(f'  {ids[s0]} -> {ids[s1]} [label="{c}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
