"""Concrete syntax: tokenizer, recursive-descent parsers and the matching pretty-printer.

Programs::

    var x in 0..2;
    sub f { x = 0; return }
    main { while (x < 2) { x = x + 1 } }

Judgements::

    assume G(l): x = 0; pre: true; prog: goto l; post: G(l)[x = 0];

``if``/``while`` and inline labels are desugared while parsing, so the
resulting trees contain only the core constructs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import NonModalRequired, ParseError, SourceSpan
from .syntax import (
    Add, And, Assign, B, Base, BFalse, BTrue, BoolTerm, Break, Call, Choice, Colour, Cond, Do, E,
    Exists, G, Goto, Guard, IntConst, Judgement, LabelDecl, Labelled, MAnd, MNot, MOr, Modal,
    ModalFormula, N, Not, Or, Program, R, Rel, Return, Scale, Seq, Skip, Stmt, Term, Throw,
    TryCatch, Var, VarDecl, mand, mnot, mor,
)

KEYWORDS = {
    "skip", "return", "break", "goto", "throw", "do", "label", "call", "try", "catch", "if",
    "else", "while", "true", "false", "exists", "var", "in", "sub", "main",
}
STMT_KEYWORDS = {"skip", "return", "break", "goto", "throw", "do", "label", "call", "try", "if", "while"}
RELS = ("<=", ">=", "!=", "<", ">", "=")

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+|\#[^\n]*)|(?P<nl>\n)|(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>->|/\\|\\/|<=|>=|!=|\.\.|[<>=~|;:.,(){}\[\]*+?-])"
)


@dataclass(frozen=True)
class Token:
    kind: str  # int ident op eof
    text: str
    line: int
    col: int


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    out: list[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", SourceSpan(file, line, pos - line_start + 1))
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            out.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


class Parser:
    def __init__(self, text: str, file: str = "<input>"):
        self.file = file
        self.toks = tokenize(text, file)
        self.pos = 0
        self.stop: frozenset[str] = frozenset()  # `word :` that ends a statement sequence

    # -- token helpers --

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def span(self, tok: Token | None = None) -> SourceSpan:
        t = tok or self.tok
        return SourceSpan(self.file, t.line, t.col)

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        return ParseError(message, self.span(tok))

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("op", "ident")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {shown!r}")
        t = self.tok
        self.pos += 1
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            raise self.error(f"expected an identifier, found {t.text or 'end of input'!r}")
        self.pos += 1
        return t.text

    def integer(self) -> int:
        sign = -1 if self.accept("-") else 1
        t = self.tok
        if t.kind != "int":
            raise self.error(f"expected an integer, found {t.text or 'end of input'!r}")
        self.pos += 1
        return sign * int(t.text)

    def attempt(self, fn):
        """Run ``fn``; on a parse error rewind and return None."""
        saved = self.pos
        try:
            return fn()
        except ParseError:
            self.pos = saved
            return None

    def end(self):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r} after end of input")

    # -- integer terms --

    def expr(self) -> Term:
        out = self.scaled()
        while True:
            if self.accept("+"):
                out = Add(out, self.scaled())
            elif self.accept("-"):
                out = Add(out, Scale(-1, self.scaled()))
            else:
                return out

    def scaled(self) -> Term:
        t = self.tok
        if t.kind == "int" or (t.text == "-" and self.peek().kind == "int"):
            n = self.integer()
            if self.accept("*"):
                return Scale(n, self.scaled())
            return IntConst(n)
        return self.primary()

    def primary(self) -> Term:
        t = self.tok
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.pos += 1
            return Var(t.text)
        if self.accept("("):
            cond = self.attempt(self._cond_tail)
            if cond is not None:
                return cond
            inner = self.expr()
            self.expect(")")
            return inner
        raise self.error(f"expected a term, found {t.text or 'end of input'!r}")

    def _cond_tail(self) -> Term:
        test = self.bexpr()
        self.expect("?")
        a = self.expr()
        self.expect(":")
        b = self.expr()
        self.expect(")")
        return Cond(test, a, b)

    # -- boolean terms --

    def bexpr(self) -> BoolTerm:
        out = self.band()
        while self.accept("\\/"):
            out = Or(out, self.band())
        return out

    def band(self) -> BoolTerm:
        out = self.bunary()
        while self.accept("/\\"):
            out = And(out, self.bunary())
        return out

    def bunary(self) -> BoolTerm:
        if self.accept("~"):
            return Not(self.bunary())
        if self.accept("exists"):
            v = self.ident()
            self.expect(".")
            return Exists(v, self.bexpr())
        if self.accept("true"):
            return BTrue()
        if self.accept("false"):
            return BFalse()
        if self.at("("):
            grouped = self.attempt(self._paren_bexpr)
            if grouped is not None:
                return grouped
        return self.relation()

    def _paren_bexpr(self) -> BoolTerm:
        self.expect("(")
        inner = self.bexpr()
        self.expect(")")
        return inner

    def relation(self) -> BoolTerm:
        left = self.expr()
        for op in RELS:
            if self.accept(op):
                return Rel(left, op, self.expr())
        raise self.error(f"expected a comparison, found {self.tok.text or 'end of input'!r}")

    # -- modal formulas --

    def mform(self) -> ModalFormula:
        out = self.mconj()
        while self.accept("\\/"):
            out = mor(out, self.mconj())
        return out

    def mconj(self) -> ModalFormula:
        out = self.munary()
        while self.accept("/\\"):
            out = mand(out, self.munary())
        return out

    def munary(self) -> ModalFormula:
        if self.accept("~"):
            return mnot(self.munary())
        t, nxt = self.tok, self.peek()
        if t.kind == "ident" and t.text in ("N", "R", "B") and nxt.text == "[":
            self.pos += 2
            body = self.mform()
            self.expect("]")
            return Modal(Colour(t.text), body)
        if t.kind == "ident" and t.text in ("G", "E") and nxt.text == "(":
            self.pos += 2
            name = self.ident()
            self.expect(")")
            self.expect("[")
            body = self.mform()
            self.expect("]")
            return Modal(Colour(t.text, name), body)
        if self.at("("):
            grouped = self.attempt(self._paren_mform)
            if grouped is not None:
                return grouped
        if self.accept("exists"):
            v = self.ident()
            self.expect(".")
            return Base(Exists(v, self.bexpr()))
        if self.accept("true"):
            return Base(BTrue())
        if self.accept("false"):
            return Base(BFalse())
        return Base(self.relation())

    def _paren_mform(self) -> ModalFormula:
        self.expect("(")
        inner = self.mform()
        self.expect(")")
        return inner

    def plain(self, what: str) -> BoolTerm:
        start = self.tok
        q = self.mform()
        if not isinstance(q, Base):
            raise NonModalRequired(f"{what} must be free of modal operators", self.span(start))
        return q.term

    # -- statements --

    def block(self) -> Stmt:
        self.expect("{")
        if self.accept("}"):
            return Skip(span=self.span(self.toks[self.pos - 1]))
        body = self.seq()
        self.expect("}")
        return body

    def _stops(self) -> bool:
        t = self.tok
        if t.kind == "eof" or t.text == "}":
            return True
        return t.text in self.stop and self.peek().text == ":"

    def seq(self) -> Stmt:
        items: list[Stmt] = []
        while True:
            lead = None
            if self.tok.kind == "ident" and self.tok.text not in KEYWORDS and self.peek().text == ":":
                lead = self.tok
                self.pos += 2
            if lead is not None:
                # `P; l: Q` means `P : l; Q`; a leading `l: Q` means `skip : l; Q`
                prev = items.pop() if items else Skip(span=self.span(lead))
                items.append(Labelled(prev, lead.text, span=self.span(lead)))
            start = self.tok
            stmt = self.choice()
            if self.accept(":"):
                stmt = Labelled(stmt, self.ident(), span=self.span(start))
            items.append(stmt)
            if not self.accept(";") or self._stops():
                break
        out = items[-1]
        for item in reversed(items[:-1]):
            out = Seq(item, out, span=item.span)
        return out

    def choice(self) -> Stmt:
        out = self.guarded()
        while self.at("|"):
            t = self.tok
            self.pos += 1
            out = Choice(out, self.guarded(), span=self.span(t))
        return out

    def guarded(self) -> Stmt:
        t = self.tok
        if not (t.kind == "ident" and t.text in STMT_KEYWORDS) and not self.at("{"):
            test = self.attempt(self._guard_test)
            if test is not None:
                return Guard(test, self.guarded(), span=self.span(t))
        return self.atom()

    def _guard_test(self) -> BoolTerm:
        test = self.bexpr()
        self.expect("->")
        return test

    def atom(self) -> Stmt:
        t = self.tok
        sp = self.span(t)
        if self.at("{"):
            return self.block()
        if t.kind == "ident" and t.text not in KEYWORDS:
            if self.peek().text == "=":
                self.pos += 2
                return Assign(t.text, self.expr(), span=sp)
            raise self.error(f"unknown keyword {t.text!r}")
        if t.kind != "ident":
            raise self.error(f"expected a statement, found {t.text or 'end of input'!r}")
        self.pos += 1
        match t.text:
            case "skip":
                return Skip(span=sp)
            case "return":
                return Return(span=sp)
            case "break":
                return Break(span=sp)
            case "goto":
                return Goto(self.ident(), span=sp)
            case "throw":
                return Throw(self.ident(), span=sp)
            case "call":
                return Call(self.ident(), span=sp)
            case "do":
                return Do(self.block(), span=sp)
            case "try":
                body = self.block()
                self.expect("catch")
                self.expect("(")
                kind = self.ident()
                self.expect(")")
                return TryCatch(body, kind, self.block(), span=sp)
            case "label":
                labels = [self.ident()]
                while self.accept(","):
                    labels.append(self.ident())
                self.expect(".")
                body = self.seq()
                for l in reversed(labels):
                    body = LabelDecl(l, body, span=sp)
                return body
            case "if":
                self.expect("(")
                test = self.bexpr()
                self.expect(")")
                then = self.block()
                orelse = self.block() if self.accept("else") else Skip(span=sp)
                return Choice(Guard(test, then, span=sp), Guard(Not(test), orelse, span=sp), span=sp)
            case "while":
                self.expect("(")
                test = self.bexpr()
                self.expect(")")
                body = self.block()
                return Do(Choice(Guard(Not(test), Break(span=sp), span=sp), Guard(test, body, span=sp), span=sp), span=sp)
        raise self.error(f"unknown keyword {t.text!r}", t)

    # -- files --

    def program(self) -> Program:
        decls = []
        while self.at("var"):
            t = self.tok
            self.pos += 1
            name = self.ident()
            self.expect("in")
            lo = self.integer()
            self.expect("..")
            hi = self.integer()
            self.expect(";")
            decls.append(VarDecl(name, lo, hi, span=self.span(t)))
        subs: dict[str, Stmt] = {}
        while self.at("sub"):
            t = self.tok
            self.pos += 1
            name = self.ident()
            if name in subs:
                raise self.error(f"subroutine {name!r} defined twice", t)
            self.accept("=")
            subs[name] = self.block() if self.at("{") else self.choice()
            self.accept(";")
        self.expect("main")
        main = self.block()
        self.end()
        return Program(tuple(decls), subs, main)

    def judgement(self, default_stmt: Stmt | None = None) -> Judgement:
        assumptions = []
        while self.accept("assume"):
            self.expect("G")
            self.expect("(")
            label = self.ident()
            self.expect(")")
            self.expect(":")
            assumptions.append((label, self.plain("an assumption")))
            self.expect(";")
        self.expect("pre")
        self.expect(":")
        pre = self.plain("the precondition")
        self.expect(";")
        stmt = default_stmt
        if self.accept("prog"):
            self.expect(":")
            self.stop = frozenset({"post"})
            stmt = self.seq()
            self.stop = frozenset()
            if self.toks[self.pos - 1].text != ";":
                self.expect(";")
        if stmt is None:
            raise self.error("judgement has no 'prog:' and no default program")
        self.expect("post")
        self.expect(":")
        post = self.mform()
        self.accept(";")
        self.end()
        return Judgement(tuple(assumptions), pre, stmt, post)


def parse_program(text: str, file: str = "<input>") -> Program:
    return Parser(text, file).program()


def parse_stmt(text: str, file: str = "<input>") -> Stmt:
    p = Parser(text, file)
    out = p.seq()
    p.end()
    return out


def parse_formula(text: str, file: str = "<input>") -> ModalFormula:
    p = Parser(text, file)
    out = p.mform()
    p.end()
    return out


def parse_bool(text: str, file: str = "<input>") -> BoolTerm:
    p = Parser(text, file)
    out = p.bexpr()
    p.end()
    return out


def parse_term(text: str, file: str = "<input>") -> Term:
    p = Parser(text, file)
    out = p.expr()
    p.end()
    return out


def parse_judgement(text: str, file: str = "<input>", default_stmt: Stmt | None = None) -> Judgement:
    return Parser(text, file).judgement(default_stmt)


# -- pretty printing ------------------------------------------------------------------


def show_term(t: Term) -> str:
    match t:
        case IntConst(v):
            return str(v)
        case Var(name):
            return name
        case Scale(k, arg):
            inner = show_term(arg)
            return f"{k}*({inner})" if isinstance(arg, Add) else f"{k}*{inner}"
        case Add(a, b):
            right = show_term(b)
            return f"{show_term(a)} + ({right})" if isinstance(b, Add) else f"{show_term(a)} + {right}"
        case Cond(test, a, b):
            return f"({show_bool(test)} ? {show_term(a)} : {show_term(b)})"
    raise TypeError(t)


def _bool_child(b: BoolTerm, bad: tuple) -> str:
    text = show_bool(b)
    return f"({text})" if isinstance(b, bad) else text


def show_bool(b: BoolTerm) -> str:
    match b:
        case BTrue():
            return "true"
        case BFalse():
            return "false"
        case Rel(l, op, r):
            return f"{show_term(l)} {op} {show_term(r)}"
        case Or(x, y):
            return f"{_bool_child(x, (Exists,))} \\/ {_bool_child(y, (Or, Exists))}"
        case And(x, y):
            return f"{_bool_child(x, (Or, Exists))} /\\ {_bool_child(y, (Or, And, Exists))}"
        case Not(x):
            return f"~{_bool_child(x, (Rel, Or, And, Exists, Not))}"
        case Exists(v, body):
            return f"exists {v}. {show_bool(body)}"
    raise TypeError(b)


def _modal_child(q: ModalFormula, bad: tuple) -> str:
    text = show_formula(q)
    if isinstance(q, bad) or (isinstance(q, Base) and isinstance(q.term, (Or, And, Exists, Not))):
        return f"({text})"
    return text


def show_formula(q: ModalFormula) -> str:
    match q:
        case Base(b):
            return show_bool(b)
        case Modal(c, body):
            head = c.tag if c.name is None else f"{c.tag}({c.name})"
            return f"{head}[{show_formula(body)}]"
        case MOr(x, y):
            return f"{_modal_child(x, ())} \\/ {_modal_child(y, (MOr,))}"
        case MAnd(x, y):
            return f"{_modal_child(x, (MOr,))} /\\ {_modal_child(y, (MOr, MAnd))}"
        case MNot(x):
            return f"~{_modal_child(x, (MOr, MAnd, MNot))}"
    raise TypeError(q)


_ATOMIC = (Skip, Return, Break, Goto, Throw, Call, Assign, Do, TryCatch)


def _seq_body(s: Stmt) -> str:
    if isinstance(s, LabelDecl):
        return f"label {s.label}. {_seq_body(s.body)}"
    items = []
    while isinstance(s, Seq):
        items.append(s.first)
        s = s.second
    items.append(s)
    return "; ".join(_item(i) for i in items)


def _braced(s: Stmt) -> str:
    return "{" + _seq_body(s) + "}"


def _guarded(s: Stmt) -> str:
    match s:
        case Skip():
            return "skip"
        case Return():
            return "return"
        case Break():
            return "break"
        case Goto(l):
            return f"goto {l}"
        case Throw(k):
            return f"throw {k}"
        case Call(h):
            return f"call {h}"
        case Assign(v, e):
            return f"{v} = {show_term(e)}"
        case Do(body):
            return f"do {_braced(body)}"
        case TryCatch(body, k, handler):
            return f"try {_braced(body)} catch ({k}) {_braced(handler)}"
        case Guard(test, body):
            return f"{show_bool(test)} -> {_guarded(body)}"
    return _braced(s)


def _choice(s: Stmt) -> str:
    if isinstance(s, Choice):
        right = _braced(s.right) if isinstance(s.right, Choice) else _guarded(s.right)
        return f"{_choice(s.left)} | {right}"
    return _guarded(s)


def _item(s: Stmt) -> str:
    if isinstance(s, Labelled):
        return f"{_choice(s.body)} : {s.label}"
    return _choice(s)


def show_stmt(s: Stmt) -> str:
    """Render a statement so that it re-parses as a single statement."""
    return _guarded(s)


def show_judgement(j: Judgement) -> str:
    parts = [f"assume G({l}): {show_bool(p)};" for l, p in j.assumptions]
    parts.append(f"pre: {show_bool(j.pre)};")
    parts.append(f"prog: {show_stmt(j.stmt)};")
    parts.append(f"post: {show_formula(j.post)};")
    return " ".join(parts)


def show_program(p: Program) -> str:
    lines = [f"var {d.name} in {d.low}..{d.high};" for d in p.var_decls]
    lines += [f"sub {h} {_braced(body)}" for h, body in p.subs.items()]
    lines.append(f"main {_braced(p.main)}")
    return "\n".join(lines) + "\n"
