"""Abstract syntax of the imperative language, its assertions, colours and judgements.

All nodes are frozen dataclasses.  Source positions ride along in a
``span`` field that takes no part in equality, so two parses of the same
text in different places compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, NamedTuple, Union

from .errors import SourceSpan

_span = field(default=None, compare=False, repr=False, kw_only=True)


def node(cls):
    """Frozen dataclass whose hash is computed once; trees are hashed a lot as cache keys."""
    cls = dataclass(frozen=True)(cls)
    structural = cls.__hash__

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = structural(self)
            object.__setattr__(self, "_hash", h)
            return h

    cls.__hash__ = __hash__
    return cls

# -- integer terms ------------------------------------------------------------


@node
class IntConst:
    value: int


@node
class Var:
    name: str


@node
class Scale:
    coeff: int
    arg: Term


@node
class Add:
    left: Term
    right: Term


@node
class Cond:
    test: BoolTerm
    then: Term
    orelse: Term


Term = Union[IntConst, Var, Scale, Add, Cond]

# -- boolean terms ------------------------------------------------------------

REL_OPS = ("<", ">", "<=", ">=", "=", "!=")


@node
class BTrue:
    pass


@node
class BFalse:
    pass


@node
class Rel:
    left: Term
    op: str
    right: Term


@node
class Or:
    left: BoolTerm
    right: BoolTerm


@node
class And:
    left: BoolTerm
    right: BoolTerm


@node
class Not:
    arg: BoolTerm


@node
class Exists:
    var: str
    body: BoolTerm


BoolTerm = Union[BTrue, BFalse, Rel, Or, And, Not, Exists]

TRUE = BTrue()
FALSE = BFalse()


def conj(a: BoolTerm, b: BoolTerm) -> BoolTerm:
    """Conjunction with unit/zero folding."""
    if isinstance(a, BFalse) or isinstance(b, BFalse):
        return FALSE
    if isinstance(a, BTrue):
        return b
    if isinstance(b, BTrue):
        return a
    return And(a, b)


def disj(a: BoolTerm, b: BoolTerm) -> BoolTerm:
    if isinstance(a, BTrue) or isinstance(b, BTrue):
        return TRUE
    if isinstance(a, BFalse):
        return b
    if isinstance(b, BFalse):
        return a
    return Or(a, b)


def neg(a: BoolTerm) -> BoolTerm:
    if isinstance(a, BTrue):
        return FALSE
    if isinstance(a, BFalse):
        return TRUE
    return Not(a)


def disj_all(terms) -> BoolTerm:
    out: BoolTerm = FALSE
    for t in terms:
        out = disj(out, t)
    return out


def conj_all(terms) -> BoolTerm:
    out: BoolTerm = TRUE
    for t in terms:
        out = conj(out, t)
    return out


# -- colours ------------------------------------------------------------------


class Colour(NamedTuple):
    tag: str  # one of N R B G E
    name: str | None = None

    def __str__(self) -> str:
        return f"{self.tag}:{self.name}" if self.name is not None else self.tag


N = Colour("N")
R = Colour("R")
B = Colour("B")
FIXED_COLOURS = (N, R, B)


def G(label: str) -> Colour:
    return Colour("G", label)


def E(kind: str) -> Colour:
    return Colour("E", kind)


def colour_from_str(text: str) -> Colour:
    tag, _, name = text.partition(":")
    if tag in ("N", "R", "B") and not name:
        return Colour(tag)
    if tag in ("G", "E") and name:
        return Colour(tag, name)
    raise ValueError(f"not a colour: {text!r}")


# -- statements ---------------------------------------------------------------


@node
class Skip:
    span: SourceSpan | None = _span


@node
class Return:
    span: SourceSpan | None = _span


@node
class Break:
    span: SourceSpan | None = _span


@node
class Goto:
    label: str
    span: SourceSpan | None = _span


@node
class Throw:
    kind: str
    span: SourceSpan | None = _span


@node
class Seq:
    first: Stmt
    second: Stmt
    span: SourceSpan | None = _span


@node
class Assign:
    var: str
    expr: Term
    span: SourceSpan | None = _span


@node
class Guard:
    test: BoolTerm
    body: Stmt
    span: SourceSpan | None = _span


@node
class Choice:
    left: Stmt
    right: Stmt
    span: SourceSpan | None = _span


@node
class Do:
    body: Stmt
    span: SourceSpan | None = _span


@node
class Labelled:
    body: Stmt
    label: str
    span: SourceSpan | None = _span


@node
class LabelDecl:
    label: str
    body: Stmt
    span: SourceSpan | None = _span


@node
class Call:
    name: str
    span: SourceSpan | None = _span


@node
class TryCatch:
    body: Stmt
    kind: str
    handler: Stmt
    span: SourceSpan | None = _span


Stmt = Union[Skip, Return, Break, Goto, Throw, Seq, Assign, Guard, Choice, Do,
             Labelled, LabelDecl, Call, TryCatch]


def children(stmt: Stmt) -> tuple[Stmt, ...]:
    match stmt:
        case Seq(a, b) | Choice(a, b):
            return (a, b)
        case Guard(_, body) | Do(body) | Labelled(body, _) | LabelDecl(_, body):
            return (body,)
        case TryCatch(body, _, handler):
            return (body, handler)
    return ()


def walk(stmt: Stmt) -> Iterator[Stmt]:
    yield stmt
    for c in children(stmt):
        yield from walk(c)


def size(stmt: Stmt) -> int:
    """Number of statement constructors in the tree."""
    return sum(1 for _ in walk(stmt))


# -- modal assertions -----------------------------------------------------------


@node
class Base:
    term: BoolTerm


@node
class Modal:
    colour: Colour
    body: ModalFormula


@node
class MOr:
    left: ModalFormula
    right: ModalFormula


@node
class MAnd:
    left: ModalFormula
    right: ModalFormula


@node
class MNot:
    arg: ModalFormula


ModalFormula = Union[Base, Modal, MOr, MAnd, MNot]


def mor(a: ModalFormula, b: ModalFormula) -> ModalFormula:
    """Disjunction that keeps modal-free subtrees inside a single ``Base``."""
    if isinstance(a, Base) and isinstance(b, Base):
        return Base(Or(a.term, b.term))
    return MOr(a, b)


def mand(a: ModalFormula, b: ModalFormula) -> ModalFormula:
    if isinstance(a, Base) and isinstance(b, Base):
        return Base(And(a.term, b.term))
    return MAnd(a, b)


def mnot(a: ModalFormula) -> ModalFormula:
    if isinstance(a, Base):
        return Base(Not(a.term))
    return MNot(a)


@lru_cache(maxsize=65536)
def formula_colours(q: ModalFormula) -> frozenset[Colour]:
    match q:
        case Base(_):
            return frozenset()
        case Modal(c, body):
            return frozenset({c}) | formula_colours(body)
        case MOr(a, b) | MAnd(a, b):
            return formula_colours(a) | formula_colours(b)
        case MNot(a):
            return formula_colours(a)
    raise TypeError(q)


def is_modal_free(q: ModalFormula) -> bool:
    return isinstance(q, Base)


# -- judgements and programs ------------------------------------------------------


@dataclass(frozen=True)
class Judgement:
    """``G_l p_l |> {pre} stmt {post}``.

    ``assumptions`` is the written list of ``(label, formula)`` entries.  A
    label may appear more than once; the entries for one label are read as
    their disjunction.
    """

    assumptions: tuple[tuple[str, BoolTerm], ...]
    pre: BoolTerm
    stmt: Stmt
    post: ModalFormula

    def env(self) -> dict[str, BoolTerm]:
        return merge_assumptions(self.assumptions)


def merge_assumptions(entries) -> dict[str, BoolTerm]:
    out: dict[str, BoolTerm] = {}
    for label, p in entries:
        out[label] = Or(out[label], p) if label in out else p
    return out


@dataclass(frozen=True)
class VarDecl:
    name: str
    low: int
    high: int
    span: SourceSpan | None = _span


@dataclass(frozen=True)
class Program:
    var_decls: tuple[VarDecl, ...]
    subs: dict[str, Stmt]
    main: Stmt

    def ranges(self) -> dict[str, tuple[int, int]]:
        return {d.name: (d.low, d.high) for d in self.var_decls}


# -- static checks ------------------------------------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: SourceSpan | None = None

    def __str__(self) -> str:
        where = f"{self.span}: " if self.span else ""
        return f"{where}{self.code}: {self.message}"


def free_labels(stmt: Stmt) -> set[str]:
    """Labels used by ``goto`` or ``P : l`` and not bound by an enclosing declaration."""
    match stmt:
        case Goto(label):
            return {label}
        case Labelled(body, label):
            return free_labels(body) | {label}
        case LabelDecl(label, body):
            return free_labels(body) - {label}
    out: set[str] = set()
    for c in children(stmt):
        out |= free_labels(c)
    return out


def called_subs(stmt: Stmt) -> set[str]:
    return {s.name for s in walk(stmt) if isinstance(s, Call)}


def colours_of(stmt: Stmt, subs: dict[str, Stmt] | None = None) -> set[Colour]:
    """Every colour a transition of ``stmt`` could conceivably carry (syntactic over-estimate)."""
    out = set(FIXED_COLOURS)
    seen: set[str] = set()
    todo = [stmt]
    while todo:
        for s in walk(todo.pop()):
            match s:
                case Goto(l) | Labelled(_, l) | LabelDecl(l, _):
                    out.add(G(l))
                case Throw(k) | TryCatch(_, k, _):
                    out.add(E(k))
                case Call(h) if subs and h in subs and h not in seen:
                    seen.add(h)
                    todo.append(subs[h])
    return out


def term_vars(e) -> set[str]:
    match e:
        case IntConst(_) | BTrue() | BFalse():
            return set()
        case Var(name):
            return {name}
        case Scale(_, arg):
            return term_vars(arg)
        case Add(a, b) | Rel(a, _, b) | Or(a, b) | And(a, b):
            return term_vars(a) | term_vars(b)
        case Cond(t, a, b):
            return term_vars(t) | term_vars(a) | term_vars(b)
        case Not(a):
            return term_vars(a)
        case Exists(v, body):
            return term_vars(body) | {v}
    raise TypeError(e)


def _stmt_terms(stmt: Stmt):
    match stmt:
        case Assign(var, expr):
            yield Var(var)
            yield expr
        case Guard(test, _):
            yield test


def _check_stmt(stmt, program, scope, diags, allow_free):
    match stmt:
        case Goto(l) | Labelled(_, l) if l not in scope and not allow_free:
            diags.append(Diagnostic("UndeclaredLabel", f"label {l!r} is not declared here", stmt.span))
        case LabelDecl(l, _) if l in scope:
            diags.append(Diagnostic("DuplicateLabel", f"label {l!r} is already declared in this scope", stmt.span))
        case Call(h) if h not in program.subs:
            diags.append(Diagnostic("UndefinedSubroutine", f"no subroutine named {h!r}", stmt.span))
    declared = program.ranges()
    for t in _stmt_terms(stmt):
        for v in sorted(term_vars(t) - set(declared)):
            diags.append(Diagnostic("UndeclaredVariable", f"variable {v!r} has no declared range", stmt.span))
    inner = scope | {stmt.label} if isinstance(stmt, LabelDecl) else scope
    for c in children(stmt):
        _check_stmt(c, program, inner, diags, allow_free)


def _call_cycles(program: Program) -> list[str]:
    graph = {h: called_subs(body) & set(program.subs) for h, body in program.subs.items()}
    on_cycle = []
    for start in program.subs:
        stack, seen = list(graph[start]), set()
        while stack:
            h = stack.pop()
            if h == start:
                on_cycle.append(start)
                break
            if h not in seen:
                seen.add(h)
                stack.extend(graph[h])
    return on_cycle


def scope_check(program: Program, extra: Stmt | None = None, allow_free_labels: bool = False) -> list[Diagnostic]:
    """Static well-formedness diagnostics for ``program`` (empty list when clean).

    ``extra`` is an additional statement checked against the program's
    declarations, e.g. the statement of a judgement, which may mention
    free labels when ``allow_free_labels`` is set.
    """
    diags: list[Diagnostic] = []
    for d in program.var_decls:
        if d.low > d.high:
            diags.append(Diagnostic("EmptyRange", f"range of {d.name!r} is empty", d.span))
    for h, body in program.subs.items():
        _check_stmt(body, program, frozenset(), diags, False)
    _check_stmt(program.main, program, frozenset(), diags, False)
    if extra is not None:
        _check_stmt(extra, program, frozenset(), diags, allow_free_labels)
    for h in _call_cycles(program):
        diags.append(Diagnostic("RecursiveCall", f"subroutine {h!r} calls itself (directly or indirectly)"))
    return diags
