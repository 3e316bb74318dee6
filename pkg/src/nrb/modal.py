"""Modal assertions over transitions: evaluation, per-colour decomposition, implication by enumeration."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

from .evaluator import Domain, eval_bool
from .syntax import (
    FALSE, TRUE, Base, BoolTerm, Colour, MAnd, MNot, MOr, Modal, ModalFormula, conj, disj,
    formula_colours, mand, mnot, mor, neg,
)


def eval_modal(q: ModalFormula, t, dom: Domain) -> bool:
    """Truth of ``q`` on transition ``t = (s0, colour, s1)``; plain terms look at the final state."""
    match q:
        case Base(b):
            return eval_bool(b, dom.env(t[2]), dom)
        case Modal(c, body):
            return t[1] == c and eval_modal(body, t, dom)
        case MOr(a, b):
            return eval_modal(a, t, dom) or eval_modal(b, t, dom)
        case MAnd(a, b):
            return eval_modal(a, t, dom) and eval_modal(b, t, dom)
        case MNot(a):
            return not eval_modal(a, t, dom)
    raise TypeError(q)


@dataclass(frozen=True)
class ColourDecomposition:
    """One plain component per colour.

    ``rest`` is the component shared by every colour not listed in
    ``components`` (a colour the formula never mentions behaves like any
    other unmentioned colour).
    """

    components: dict[Colour, BoolTerm]
    rest: BoolTerm

    def __getitem__(self, c: Colour) -> BoolTerm:
        return self.components.get(c, self.rest)

    @property
    def colours(self) -> tuple[Colour, ...]:
        return tuple(self.components)


def _combine(a: ColourDecomposition, b: ColourDecomposition, op) -> ColourDecomposition:
    keys = list(a.components) + [c for c in b.components if c not in a.components]
    return ColourDecomposition({c: op(a[c], b[c]) for c in keys}, op(a.rest, b.rest))


def decompose(q: ModalFormula, colours: Iterable[Colour] = ()) -> ColourDecomposition:
    """Components ``p_M`` with ``q(t) = p_M(final(t))`` for every transition ``t`` of colour ``M``."""
    return _decompose_cached(q, tuple(colours))


@lru_cache(maxsize=65536)
def _decompose_cached(q: ModalFormula, colours: tuple[Colour, ...]) -> ColourDecomposition:
    # shared result: callers treat decompositions as read-only
    cs = list(dict.fromkeys(colours + tuple(sorted(formula_colours(q), key=str))))
    return _decompose(q, cs)


def _decompose(q: ModalFormula, cs: list[Colour]) -> ColourDecomposition:
    match q:
        case Base(b):
            return ColourDecomposition({c: b for c in cs}, b)
        case Modal(m, body):
            inner = _decompose(body, cs)
            return ColourDecomposition({c: inner[c] if c == m else FALSE for c in cs}, FALSE)
        case MOr(a, b):
            return _combine(_decompose(a, cs), _decompose(b, cs), disj)
        case MAnd(a, b):
            return _combine(_decompose(a, cs), _decompose(b, cs), conj)
        case MNot(a):
            d = _decompose(a, cs)
            return ColourDecomposition({c: neg(p) for c, p in d.components.items()}, neg(d.rest))
    raise TypeError(q)


def recompose(d: ColourDecomposition | dict, rest: BoolTerm = FALSE) -> ModalFormula:
    """``M1[p1] \\/ M2[p2] \\/ ...``, omitting false components.

    A dict argument is read as a decomposition whose unlisted colours get ``rest``.
    """
    if isinstance(d, dict):
        d = ColourDecomposition(dict(d), rest)
    out: ModalFormula | None = None
    for c, p in d.components.items():
        if p == FALSE:
            continue
        part = Modal(c, Base(p))
        out = part if out is None else MOr(out, part)
    if d.rest != FALSE:
        part: ModalFormula = Base(d.rest)
        for c in d.components:
            part = mand(part, mnot(Modal(c, Base(TRUE))))
        out = part if out is None else mor(out, part)
    return out if out is not None else Base(FALSE)


def implies(p: BoolTerm, q: BoolTerm, dom: Domain) -> bool:
    """``p -> q`` in every state of the domain."""
    return all(dom.holds(q, s) for s in dom.states if dom.holds(p, s))


def equivalent(p: BoolTerm, q: BoolTerm, dom: Domain) -> bool:
    return all(dom.holds(p, s) == dom.holds(q, s) for s in dom.states)


def modal_implies(q1: ModalFormula, q2: ModalFormula, dom: Domain, colours: Iterable[Colour] = ()) -> bool:
    """``q1 -> q2`` on every transition over the domain, compared colour by colour."""
    cs = list(colours) + sorted(formula_colours(q1) | formula_colours(q2), key=str)
    d1, d2 = decompose(q1, cs), decompose(q2, cs)
    return all(implies(d1[c], d2[c], dom) for c in d1.colours) and implies(d1.rest, d2.rest, dom)


def modal_equivalent(q1: ModalFormula, q2: ModalFormula, dom: Domain, colours: Iterable[Colour] = ()) -> bool:
    return modal_implies(q1, q2, dom, colours) and modal_implies(q2, q1, dom, colours)
