"""Weakest preconditions computed structurally over the finite state space.

A goal maps each colour to a test on final states.  ``wp`` returns the set
of initial states every transition of which passes the goal of its colour;
states with no transition at all are included.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .evaluator import Domain, State, eval_bool
from .model import Interpreter, check_triple, goto_env
from .modal import decompose
from .syntax import (
    FALSE, TRUE, Assign, B, BoolTerm, Break, Call, Choice, Colour, Do, E, G, Goto, Guard, IntConst,
    Judgement, LabelDecl, Labelled, ModalFormula, N, R, Rel, Return, Seq, Skip, Stmt, Throw,
    TryCatch, Var, colours_of, conj_all, disj_all, formula_colours,
)
from .evaluator import eval_term

StateTest = Callable[[State], bool]
Goal = Callable[[Colour], StateTest]


def _always(_s: State) -> bool:
    return True


@dataclass(frozen=True)
class Predicate:
    states: frozenset
    rendering: BoolTerm


def render(states, dom: Domain) -> BoolTerm:
    """Disjunction of one equality conjunction per state, in enumeration order."""
    states = frozenset(states)
    if not states:
        return FALSE
    if states >= dom.all_states:
        return TRUE
    return disj_all(
        conj_all(Rel(Var(n), "=", IntConst(v)) for n, v in zip(dom.names, s))
        for s in dom.states if s in states
    )


class WeakestPre:
    def __init__(self, dom: Domain, subs=None, interp: Interpreter | None = None):
        self.dom = dom
        self.interp = interp or Interpreter(dom, subs)
        self.subs = self.interp.subs

    def _member(self, states: frozenset) -> StateTest:
        """Membership in a set of in-range states.

        Continuing from an out-of-range state counts as failure.  Such a
        state only reaches this test from inputs for which the model itself
        raises DomainNotClosed, so the result for every other input is exact.
        """
        return states.__contains__

    def formula_goal(self, q: ModalFormula, colours=()) -> Goal:
        d = decompose(q, colours)
        dom = self.dom
        tests: dict = {}

        def goal(c: Colour) -> StateTest:
            t = tests.get(c)
            if t is None:
                p = d[c]
                t = tests[c] = (lambda s: eval_bool(p, dom.env(s), dom))
            return t
        return goal

    def states(self, stmt: Stmt, g, goal: Goal) -> frozenset:
        dom = self.dom
        every = dom.states
        match stmt:
            case Skip():
                t = goal(N)
                return frozenset(s for s in every if t(s))
            case Return():
                t = goal(R)
                return frozenset(s for s in every if t(s))
            case Break():
                t = goal(B)
                return frozenset(s for s in every if t(s))
            case Goto(l):
                t = goal(G(l))
                return frozenset(s for s in every if t(s))
            case Throw(k):
                t = goal(E(k))
                return frozenset(s for s in every if t(s))
            case Assign(x, e):
                t = goal(N)
                return frozenset(s for s in every if t(dom.update(s, x, eval_term(e, dom.env(s), dom))))
            case Seq(p, q):
                after = self._member(self.states(q, g, goal))
                return self.states(p, g, lambda c: after if c == N else goal(c))
            case Guard(b, body):
                inner = self.states(body, g, goal)
                return frozenset(s for s in every if s in inner or not dom.holds(b, s))
            case Choice(p, q):
                return self.states(p, g, goal) & self.states(q, g, goal)
            case Do(body):
                return self._loop(body, g, goal)
            case Labelled(body, l):
                t = goal(N)
                if all(t(s) for s in g.get(l, ())):
                    return self.states(body, g, goal)
                return frozenset()
            case LabelDecl(l, body):
                inner = {**g, l: self.interp.label_fixpoint(l, body, g)}
                colour = G(l)
                return self.states(body, inner, lambda c: _always if c == colour else goal(c))
            case Call(h):
                def sub_goal(c: Colour) -> StateTest:
                    if c == R:
                        return goal(N)
                    if c.tag == "E":
                        return goal(c)
                    return _always
                return self.states(self.subs[h], {}, sub_goal)
            case TryCatch(body, k, handler):
                caught = E(k)
                after = self._member(self.states(handler, g, goal))
                return self.states(body, g, lambda c: after if c == caught else goal(c))
        raise TypeError(f"not a statement: {stmt!r}")

    def _loop(self, body: Stmt, g, goal: Goal) -> frozenset:
        # greatest fixpoint: states from which no reachable body exit violates the goal
        cur = frozenset(self.dom.states)
        while True:
            again = self._member(cur)
            exit_ok = goal(N)
            nxt = self.states(body, g, lambda c: again if c == N else exit_ok if c == B else goal(c))
            if nxt == cur:
                return cur
            cur = nxt


def _colour_universe(stmt: Stmt, q: ModalFormula, g, subs) -> list[Colour]:
    cs = colours_of(stmt, subs) | formula_colours(q) | {G(l) for l in g}
    return sorted(cs, key=str)


def wp_states(stmt: Stmt, q: ModalFormula, g, dom: Domain, subs=None, interp: Interpreter | None = None) -> frozenset:
    engine = WeakestPre(dom, subs, interp)
    genv = goto_env(g, dom)
    return engine.states(stmt, genv, engine.formula_goal(q, _colour_universe(stmt, q, genv, engine.subs)))


def wp(stmt: Stmt, q: ModalFormula, g, dom: Domain, subs=None, interp: Interpreter | None = None) -> Predicate:
    states = wp_states(stmt, q, g, dom, subs, interp)
    return Predicate(states, render(states, dom))


def brute_wp(stmt: Stmt, q: ModalFormula, g, dom: Domain, subs=None, interp: Interpreter | None = None) -> frozenset:
    """States ``s`` for which the triple with precondition ``{s}`` holds."""
    interp = interp or Interpreter(dom, subs)
    genv = goto_env(g, dom)
    assumptions = tuple((l, render(v, dom)) for l, v in sorted(genv.items()))
    out = set()
    for s in dom.states:
        j = Judgement(assumptions, render({s}, dom), stmt, q)
        if check_triple(j, dom, interp=interp).holds:
            out.add(s)
    return frozenset(out)


def verify_wp(stmt: Stmt, q: ModalFormula, g, dom: Domain, subs=None) -> bool:
    interp = Interpreter(dom, subs)
    return wp_states(stmt, q, g, dom, interp=interp) == brute_wp(stmt, q, g, dom, interp=interp)
