"""Derivations for true triples about deterministic programs.

The generator follows the structure of the statement.  Intermediate
assertions are weakest preconditions (rendered as state disjunctions) and
label fixpoints; ``conseq`` closes the gap between what a rule yields and
the judgement that was asked for.
"""

from __future__ import annotations

from .errors import NotDeterministic, ProofGenerationError, TripleDoesNotHold
from .evaluator import Domain, substitute
from .kernel import Kernel, ProofNode, SideCondition
from .model import Interpreter, check_triple
from .modal import decompose, recompose
from .syntax import (
    FALSE, TRUE, And, Assign, B, BoolTerm, Break, Call, Choice, Colour, Do, E, G, Goto, Guard,
    Judgement, LabelDecl, Labelled, ModalFormula, N, R, Return, Seq, Skip, Stmt, Throw, TryCatch,
    colours_of, formula_colours, merge_assumptions,
)
from .wp import WeakestPre, render

Assumptions = tuple[tuple[str, BoolTerm], ...]


class ProofGenerator:
    def __init__(self, dom: Domain, subs=None, lax_conseq: bool = False, interp: Interpreter | None = None):
        self.dom = dom
        self.interp = interp or Interpreter(dom, subs)
        self.subs = self.interp.subs
        self.wp = WeakestPre(dom, interp=self.interp)
        self.kernel = Kernel(dom, interp=self.interp, lax_conseq=lax_conseq)
        self.lax_conseq = lax_conseq
        self.universe: list[Colour] = []

    # -- helpers --

    def ext(self, b: BoolTerm) -> frozenset:
        return self.kernel.ext(b)

    def genv(self, a: Assumptions) -> dict[str, frozenset]:
        merged = merge_assumptions(a)
        return {l: e for l, v in merged.items() if (e := self.ext(v))}

    def comps(self, q: ModalFormula) -> dict[Colour, BoolTerm]:
        d = decompose(q, self.universe)
        return {c: d[c] for c in self.universe}

    def goal(self, parts: dict[Colour, BoolTerm]) -> ModalFormula:
        return recompose({c: parts.get(c, FALSE) for c in self.universe})

    def wp_states(self, stmt: Stmt, a: Assumptions, parts: dict[Colour, BoolTerm]) -> frozenset:
        dom = self.dom
        tests = {c: (lambda s, p=p: dom.holds(p, s)) for c, p in parts.items()}
        return self.wp.states(stmt, self.genv(a), lambda c: tests.get(c, _never))

    def close(self, node: ProofNode, a: Assumptions, p: BoolTerm, q: ModalFormula) -> ProofNode:
        """Weaken ``node`` to exactly ``a |> {p} stmt {q}``."""
        c = node.conclusion
        target = Judgement(a, p, c.stmt, q)
        if c == target:
            return node
        sides = [SideCondition("conclusion pre -> premise pre", p, c.pre)]
        dp, dq = decompose(c.post, self.universe), decompose(q, self.universe)
        for colour in self.universe:
            sides.append(SideCondition(f"premise {colour} component -> conclusion {colour} component", dp[colour], dq[colour]))
        env = merge_assumptions(a)
        if not self.lax_conseq:
            for l in sorted(env):
                sides.append(SideCondition(f"conclusion G({l}) component -> conclusion assumption at {l}", dq[G(l)], env[l]))
        return ProofNode("conseq", target, [node], sides)

    # -- generation --

    def gen(self, a: Assumptions, p: BoolTerm, stmt: Stmt, q: ModalFormula) -> ProofNode:
        """A derivation of ``a |> {p} stmt {q}``; the triple must hold."""
        if not self.ext(p):
            return ProofNode("preOr", Judgement(a, p, stmt, q))
        qc = self.comps(q)
        match stmt:
            case Skip():
                return self.axiom("skp", a, p, stmt, q, N)
            case Return():
                return self.axiom("ret", a, p, stmt, q, R)
            case Break():
                return self.axiom("brk", a, p, stmt, q, B)
            case Throw(k):
                return self.axiom("throw", a, p, stmt, q, E(k))
            case Goto(l):
                p_l = merge_assumptions(a).get(l, FALSE)
                if not self.ext(p) <= self.ext(p_l):
                    raise ProofGenerationError(f"states reaching goto {l} are not covered by the assumption at {l}")
                node = ProofNode("go", Judgement(a, p, stmt, self.goal({G(l): p})),
                                 side_conditions=[SideCondition(f"pre -> assumption at {l}", p, p_l)])
                return self.close(node, a, p, q)
            case Assign(x, e):
                node = ProofNode("let", Judgement(a, substitute(qc[N], x, e), stmt, self.goal({N: qc[N]})))
                return self.close(node, a, p, q)
            case Seq(first, second):
                return self.gen_seq(a, p, stmt, q, qc)
            case Guard(b, body):
                return ProofNode("grd", Judgement(a, p, stmt, q), [self.gen(a, And(b, p), body, q)])
            case Choice(left, right):
                return ProofNode("dsj", Judgement(a, p, stmt, q), [self.gen(a, p, left, q), self.gen(a, p, right, q)])
            case Do(body):
                inv = render(self.wp.states(stmt, self.genv(a), self._tests(qc)), self.dom)
                inner = dict(qc)
                inner[N], inner[B] = inv, qc[N]
                prem = self.gen(a, inv, body, self.goal(inner))
                out = dict(qc)
                out[B] = FALSE
                return self.close(ProofNode("do", Judgement(a, inv, stmt, self.goal(out)), [prem]), a, p, q)
            case Labelled(body, l):
                p_l = merge_assumptions(a).get(l, FALSE)
                return ProofNode("frm", Judgement(a, p, stmt, q), [self.gen(a, p, body, q)],
                                 [SideCondition(f"assumption at {l} -> N component", p_l, qc[N])])
            case LabelDecl(l, body):
                if l in dict(a):
                    raise ProofGenerationError(f"label {l} is declared while an assumption for it is open")
                outer = a
                fix = self.interp.label_fixpoint(l, body, self.genv(outer))
                p_l = render(fix, self.dom)
                inner_a = outer + ((l, p_l),)
                inner = dict(qc)
                inner[G(l)] = p_l
                prem = self.gen(inner_a, p, body, self.goal(inner))
                out = dict(qc)
                out[G(l)] = FALSE
                node = ProofNode("lbl", Judgement(outer, p, stmt, self.goal(out)), [prem],
                                 [SideCondition(f"states reaching goto {l} -> assumption at {l}", p_l, p_l)])
                return self.close(node, a, p, q)
            case Call(h):
                body = self.subs[h]
                inner = {c: TRUE for c in self.universe}
                inner[R] = qc[N]
                for c in self.universe:
                    if c.tag == "E":
                        inner[c] = qc[c]
                prem = self.gen((), p, body, self.goal(inner))
                out = {c: qc[c] for c in self.universe if c.tag == "E"}
                out[N] = qc[N]
                return self.close(ProofNode("sub", Judgement(a, p, stmt, self.goal(out)), [prem]), a, p, q)
            case TryCatch(body, k, handler):
                caught = E(k)
                m = render(self.wp.states(handler, self.genv(a), self._tests(qc)), self.dom)
                inner = dict(qc)
                inner[caught] = m
                return ProofNode("try", Judgement(a, p, stmt, q), [
                    self.gen(a, p, body, self.goal(inner)),
                    self.gen(a, m, handler, q),
                ])
        raise TypeError(f"not a statement: {stmt!r}")

    def _tests(self, parts: dict[Colour, BoolTerm]):
        dom = self.dom
        tests = {c: (lambda s, p=p: dom.holds(p, s)) for c, p in parts.items()}
        return lambda c: tests.get(c, _never)

    def axiom(self, rule: str, a, p, stmt, q, colour: Colour) -> ProofNode:
        return self.close(ProofNode(rule, Judgement(a, p, stmt, self.goal({colour: p}))), a, p, q)

    def gen_seq(self, a, p, stmt: Seq, q, qc) -> ProofNode:
        first, second = stmt.first, stmt.second
        r = render(self.wp.states(second, self.genv(a), self._tests(qc)), self.dom)
        # split p by the colour with which `first` ends: states that can end normally go to
        # the N case, other ending states to their first colour, diverging states to every case
        pe = self.ext(p)
        can: dict[Colour, set] = {c: set() for c in self.universe}
        exiting = set()
        for s0, c, _ in self.interp.run(first, self.genv(a), pe):
            exiting.add(s0)
            if c in can:
                can[c].add(s0)
        can = {c: frozenset(v) for c, v in can.items()}
        diverging = pe - exiting
        taken = can.get(N, frozenset())
        owned = {N: taken}
        for colour in self.universe:
            if colour != N:
                owned[colour] = can[colour] - taken
                taken |= owned[colour]
        cases = [(c, owned[c] | diverging) for c in self.universe if owned[c] | diverging]
        if len(cases) < 2:
            return self._seq_node(a, p, stmt, q, qc, r)
        nodes = []
        for colour, part in cases:
            pc = And(p, render(part, self.dom)) if part != pe else p
            nodes.append(self._seq_node(a, pc, stmt, q, qc, r if colour == N else FALSE))
        return ProofNode("preOr", Judgement(a, p, stmt, q), nodes)

    def _seq_node(self, a, p, stmt: Seq, q, qc, r: BoolTerm) -> ProofNode:
        head = dict(qc)
        head[N] = r
        return ProofNode("seq", Judgement(a, p, stmt, q), [
            self.gen(a, p, stmt.first, self.goal(head)),
            self.gen(a, r, stmt.second, q),
        ])


def _never(_s) -> bool:
    return False


def generate_proof(
    j: Judgement, dom: Domain, subs=None, lax_conseq: bool = False, check: bool = True,
    interp: Interpreter | None = None,
) -> ProofNode:
    """Derive ``j`` for a deterministic program; raises if the triple is false or the program nondeterministic.

    Pass ``interp`` to share cached models across many judgements over the same domain and subroutines.
    """
    gen = ProofGenerator(dom, subs, lax_conseq, interp)
    g = gen.genv(j.assumptions)
    starts = dom.extension(j.pre)
    seen = set()
    for s0, _, _ in gen.interp.run(j.stmt, g, starts):
        if s0 in seen:
            raise NotDeterministic("the program has more than one transition from some initial state")
        seen.add(s0)
    verdict = check_triple(j, dom, interp=gen.interp)
    if not verdict.holds:
        raise TripleDoesNotHold(verdict.counterexamples)
    labels = {l for l, _ in j.assumptions}
    gen.universe = sorted(
        colours_of(j.stmt, gen.subs) | formula_colours(j.post) | {G(l) for l in labels}, key=str
    )
    if not lax_conseq:
        d = decompose(j.post, gen.universe)
        for l, p_l in j.env().items():
            if not gen.ext(d[G(l)]) <= gen.ext(p_l):
                raise ProofGenerationError(
                    f"the postcondition's G({l}) component is weaker than the assumption at {l}; "
                    "strict weakening cannot reach it (see --lax-conseq)"
                )
    root = gen.gen(j.assumptions, j.pre, j.stmt, j.post)
    if check:
        v = gen.kernel.check_proof(root)
        if not v.holds:
            raise ProofGenerationError("generated proof rejected by the kernel: " + "; ".join(map(str, v.diagnostics)))
    return root
