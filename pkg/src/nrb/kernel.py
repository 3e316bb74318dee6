"""Proof trees for triples and the kernel that checks them rule by rule.

Statements are matched syntactically.  Preconditions, assumptions and the
per-colour components of postconditions are matched semantically over the
domain, so a rule instance is accepted whatever the written shape of its
formulas.  Only the colours that the statements involved can produce (plus
those mentioned in the formulas) are compared; other colours never occur
on a transition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .evaluator import Domain, substitute
from .model import Interpreter, Verdict
from .modal import ColourDecomposition, decompose
from .wp import render
from .parser import parse_bool, parse_judgement, show_bool, show_judgement
from .syntax import (
    B, FALSE, FIXED_COLOURS, N, R, And, Assign, BoolTerm, Break, Call, Choice, Colour, Diagnostic, Do,
    E, G, Goto, Guard, Judgement, LabelDecl, Labelled, Return, Seq, Skip, Throw, TryCatch,
    colours_of, formula_colours,
)

RULES = (
    "seq", "do", "skp", "ret", "brk", "go", "throw", "let", "grd", "dsj", "frm", "lbl", "sub",
    "try", "preOr", "postAnd", "assumeOr", "conseq",
)
ARITY = {
    "seq": 2, "do": 1, "skp": 0, "ret": 0, "brk": 0, "go": 0, "throw": 0, "let": 0, "grd": 1,
    "dsj": 2, "frm": 1, "lbl": 1, "sub": 1, "try": 2, "preOr": None, "postAnd": None,
    "assumeOr": 1, "conseq": 1,
}


@dataclass(frozen=True)
class SideCondition:
    """The implication ``lhs -> rhs`` required by a rule instance."""

    description: str
    lhs: BoolTerm
    rhs: BoolTerm


@dataclass
class ProofNode:
    rule: str
    conclusion: Judgement
    premises: list["ProofNode"] = field(default_factory=list)
    side_conditions: list[SideCondition] = field(default_factory=list)

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def rules_used(self) -> set[str]:
        out = {self.rule}
        for p in self.premises:
            out |= p.rules_used()
        return out


class Kernel:
    def __init__(self, dom: Domain, subs=None, lax_conseq: bool = False, interp: Interpreter | None = None):
        self.dom = dom
        self.interp = interp or Interpreter(dom, subs)
        self.subs = self.interp.subs
        self.lax_conseq = lax_conseq
        self._ext: dict[BoolTerm, frozenset] = {}
        self._stmt_colours: dict = {}

    # -- semantic helpers --

    def ext(self, b: BoolTerm) -> frozenset:
        out = self._ext.get(b)
        if out is None:
            out = self._ext[b] = self.dom.extension(b)
        return out

    def eq(self, a: BoolTerm, b: BoolTerm) -> bool:
        return a == b or self.ext(a) == self.ext(b)

    def imp(self, a: BoolTerm, b: BoolTerm) -> bool:
        return self.ext(a) <= self.ext(b)

    def env_ext(self, j: Judgement) -> dict[str, frozenset]:
        return {l: e for l, p in j.env().items() if (e := self.ext(p))}

    def universe(self, node: ProofNode) -> list[Colour]:
        stmt = node.conclusion.stmt
        cs = self._stmt_colours.get(stmt)
        if cs is None:
            cs = self._stmt_colours[stmt] = frozenset(FIXED_COLOURS) | colours_of(stmt, self.subs)
        cs = set(cs)
        for j in [node.conclusion] + [p.conclusion for p in node.premises]:
            cs |= formula_colours(j.post)
            cs.update(G(l) for l, _ in j.assumptions)
        return sorted(cs)

    # -- checking --

    def check_rule(self, node: ProofNode) -> list[Diagnostic]:
        """Diagnostics for this node alone (empty when it instantiates its rule)."""
        return _RuleCheck(self, node).run()

    def check_proof(self, root: ProofNode) -> Verdict:
        diags: list[Diagnostic] = []
        stack = [(root, "root")]
        while stack:
            node, path = stack.pop()
            for d in self.check_rule(node):
                diags.append(Diagnostic(d.code, f"{path}: {d.message}", d.span))
            for i, p in reversed(list(enumerate(node.premises))):
                stack.append((p, f"{path}.{i}"))
        return Verdict(not diags, [], diags)


class _RuleCheck:
    def __init__(self, kernel: Kernel, node: ProofNode):
        self.k = kernel
        self.node = node
        self.c = node.conclusion
        self.ps = [p.conclusion for p in node.premises]
        self.diags: list[Diagnostic] = []
        self.universe: list[Colour] = []

    def fail(self, code: str, message: str):
        self.diags.append(Diagnostic(code, f"[{self.node.rule}] {message}"))

    def post(self, j: Judgement) -> ColourDecomposition:
        return decompose(j.post, self.universe)

    # -- reusable checks --

    def stmt_is(self, cls) -> bool:
        if not isinstance(self.c.stmt, cls):
            self.fail("StatementMismatch", f"conclusion statement is not a {cls.__name__}")
            return False
        return True

    def premise_stmt(self, i: int, expected):
        if self.ps[i].stmt != expected:
            self.fail("StatementMismatch", f"premise {i} is about a different statement")

    def same_assumptions(self, i: int):
        if self.k.env_ext(self.ps[i]) != self.k.env_ext(self.c):
            self.fail("AssumptionMismatch", f"premise {i} assumptions differ from the conclusion's")

    def pre_eq(self, a: BoolTerm, b: BoolTerm, what: str):
        if not self.k.eq(a, b):
            self.fail("PreconditionMismatch", what)

    def comp_eq(self, a: BoolTerm, b: BoolTerm, what: str):
        if not self.k.eq(a, b):
            self.fail("PostconditionMismatch", what)

    def comps_eq(self, d1: ColourDecomposition, d2: ColourDecomposition, skip: set, what: str):
        for c in self.universe:
            if c not in skip:
                self.comp_eq(d1[c], d2[c], f"{what}: component {c} differs")

    def comps_imp(self, d1: ColourDecomposition, d2: ColourDecomposition, skip: set, what: str):
        for c in self.universe:
            if c not in skip and not self.k.imp(d1[c], d2[c]):
                self.fail("PostconditionMismatch", f"{what}: component {c} is weaker than the conclusion's")

    def comps_false(self, d: ColourDecomposition, colours, what: str):
        for c in colours:
            if self.k.ext(d[c]):
                self.fail("ColourClassViolation", f"{what}: component {c} must be false")

    def side(self, description: str, lhs: BoolTerm, rhs: BoolTerm):
        if not self.k.imp(lhs, rhs):
            self.fail("SideConditionFailed", f"side condition fails: {description}")

    # -- driver --

    def run(self) -> list[Diagnostic]:
        rule = self.node.rule
        if rule not in ARITY:
            self.fail("UnknownRule", f"no rule named {rule!r}")
            return self.diags
        want = ARITY[rule]
        if want is not None and len(self.ps) != want:
            self.fail("ArityMismatch", f"expects {want} premise(s), got {len(self.ps)}")
            return self.diags
        self.universe = self.k.universe(self.node)
        for sc in self.node.side_conditions:
            if not self.k.imp(sc.lhs, sc.rhs):
                self.fail("SideConditionFailed", f"recorded side condition fails: {sc.description}")
        getattr(self, "rule_" + rule)()
        return self.diags

    def axiom(self, cls, colour: Colour):
        if not self.stmt_is(cls):
            return
        d = self.post(self.c)
        self.comp_eq(d[colour], self.c.pre, f"component {colour} must equal the precondition")
        self.comps_false(d, [c for c in self.universe if c != colour], "axiom postcondition")

    def rule_skp(self):
        self.axiom(Skip, N)

    def rule_ret(self):
        self.axiom(Return, R)

    def rule_brk(self):
        self.axiom(Break, B)

    def rule_throw(self):
        if isinstance(self.c.stmt, Throw):
            self.axiom(Throw, E(self.c.stmt.kind))
        else:
            self.stmt_is(Throw)

    def rule_go(self):
        if not self.stmt_is(Goto):
            return
        label = self.c.stmt.label
        self.axiom(Goto, G(label))
        self.side(f"pre -> assumption at {label}", self.c.pre, self.c.env().get(label, FALSE))

    def rule_let(self):
        if not self.stmt_is(Assign):
            return
        d = self.post(self.c)
        x, e = self.c.stmt.var, self.c.stmt.expr
        self.pre_eq(self.c.pre, substitute(d[N], x, e), "precondition is not the N component with the assignment substituted")
        self.comps_false(d, [c for c in self.universe if c != N], "assignment postcondition")

    def rule_seq(self):
        if not self.stmt_is(Seq):
            return
        self.premise_stmt(0, self.c.stmt.first)
        self.premise_stmt(1, self.c.stmt.second)
        self.same_assumptions(0)
        self.same_assumptions(1)
        d0, d1, dc = self.post(self.ps[0]), self.post(self.ps[1]), self.post(self.c)
        self.pre_eq(self.ps[0].pre, self.c.pre, "first premise precondition differs from the conclusion's")
        self.pre_eq(self.ps[1].pre, d0[N], "second premise precondition is not the first premise's N component")
        self.comp_eq(d1[N], dc[N], "N component of second premise differs from the conclusion's")
        # abnormal exits of either half may be stronger than the conclusion's (seq then weakening)
        self.comps_imp(d0, dc, {N}, "first premise")
        self.comps_imp(d1, dc, {N}, "second premise")

    def rule_do(self):
        if not self.stmt_is(Do):
            return
        self.premise_stmt(0, self.c.stmt.body)
        self.same_assumptions(0)
        d, dc = self.post(self.ps[0]), self.post(self.c)
        self.pre_eq(self.ps[0].pre, self.c.pre, "premise precondition differs from the conclusion's")
        self.comp_eq(d[N], self.c.pre, "premise N component is not the loop invariant (the precondition)")
        self.comp_eq(d[B], dc[N], "premise B component differs from the conclusion's N component")
        self.comps_false(dc, [B], "loop postcondition")
        self.comps_eq(d, dc, {N, B}, "premise")

    def rule_grd(self):
        if not self.stmt_is(Guard):
            return
        self.premise_stmt(0, self.c.stmt.body)
        self.same_assumptions(0)
        self.pre_eq(self.ps[0].pre, And(self.c.stmt.test, self.c.pre), "premise precondition is not guard /\\ pre")
        self.comps_eq(self.post(self.ps[0]), self.post(self.c), set(), "premise")

    def rule_dsj(self):
        if not self.stmt_is(Choice):
            return
        self.premise_stmt(0, self.c.stmt.left)
        self.premise_stmt(1, self.c.stmt.right)
        dc = self.post(self.c)
        for i in (0, 1):
            self.same_assumptions(i)
            self.pre_eq(self.ps[i].pre, self.c.pre, f"premise {i} precondition differs from the conclusion's")
            self.comps_eq(self.post(self.ps[i]), dc, set(), f"premise {i}")

    def rule_frm(self):
        if not self.stmt_is(Labelled):
            return
        label = self.c.stmt.label
        self.premise_stmt(0, self.c.stmt.body)
        self.same_assumptions(0)
        self.pre_eq(self.ps[0].pre, self.c.pre, "premise precondition differs from the conclusion's")
        dc = self.post(self.c)
        self.comps_eq(self.post(self.ps[0]), dc, set(), "premise")
        self.side(f"assumption at {label} -> N component", self.c.env().get(label, FALSE), dc[N])

    def rule_lbl(self):
        if not self.stmt_is(LabelDecl):
            return
        label, body = self.c.stmt.label, self.c.stmt.body
        self.premise_stmt(0, body)
        pe, ce = self.k.env_ext(self.ps[0]), self.k.env_ext(self.c)
        if {l: v for l, v in pe.items() if l != label} != {l: v for l, v in ce.items() if l != label}:
            self.fail("AssumptionMismatch", "premise assumptions must be the conclusion's plus the declared label")
        p_l = self.ps[0].env().get(label, FALSE)
        d, dc = self.post(self.ps[0]), self.post(self.c)
        self.pre_eq(self.ps[0].pre, self.c.pre, "premise precondition differs from the conclusion's")
        colour = G(label)
        self.comp_eq(d[colour], p_l, f"premise {colour} component differs from the assumption at {label}")
        self.comps_false(dc, [colour], "label block postcondition")
        self.comps_eq(d, dc, {colour}, "premise")
        g = {l: v for l, v in ce.items() if l != label}
        fix = self.k.interp.label_fixpoint(label, body, g)
        self.side(f"states reaching goto {label} -> assumption at {label}", render(fix, self.k.dom), p_l)

    def rule_sub(self):
        if not self.stmt_is(Call):
            return
        name = self.c.stmt.name
        if name not in self.k.subs:
            self.fail("StatementMismatch", f"no subroutine named {name!r}")
            return
        self.premise_stmt(0, self.k.subs[name])
        if self.k.env_ext(self.ps[0]):
            self.fail("AssumptionMismatch", "subroutine body must be proved without goto assumptions")
        d, dc = self.post(self.ps[0]), self.post(self.c)
        self.pre_eq(self.ps[0].pre, self.c.pre, "premise precondition differs from the conclusion's")
        self.comp_eq(d[R], dc[N], "premise R component differs from the conclusion's N component")
        for c in self.universe:
            if c.tag == "E":
                self.comp_eq(d[c], dc[c], f"component {c} differs")
        self.comps_false(dc, [c for c in self.universe if c.tag in ("R", "B", "G")], "call postcondition")

    def rule_try(self):
        if not self.stmt_is(TryCatch):
            return
        stmt = self.c.stmt
        caught = E(stmt.kind)
        self.premise_stmt(0, stmt.body)
        self.premise_stmt(1, stmt.handler)
        self.same_assumptions(0)
        self.same_assumptions(1)
        d0, d1, dc = self.post(self.ps[0]), self.post(self.ps[1]), self.post(self.c)
        self.pre_eq(self.ps[0].pre, self.c.pre, "first premise precondition differs from the conclusion's")
        self.pre_eq(self.ps[1].pre, d0[caught], f"handler precondition is not the body's {caught} component")
        self.comp_eq(d0[N], dc[N], "body N component differs from the conclusion's")
        self.comp_eq(d1[N], dc[N], "handler N component differs from the conclusion's")
        self.comp_eq(d1[caught], dc[caught], f"handler {caught} component differs from the conclusion's")
        self.comps_eq(d0, dc, {N, caught}, "body premise")
        self.comps_eq(d1, dc, {N, caught}, "handler premise")

    def _same_shape(self, i: int, pre: bool = True, post: bool = True):
        if self.ps[i].stmt != self.c.stmt:
            self.fail("StatementMismatch", f"premise {i} is about a different statement")
        self.same_assumptions(i)
        if pre:
            self.pre_eq(self.ps[i].pre, self.c.pre, f"premise {i} precondition differs from the conclusion's")
        if post:
            self.comps_eq(self.post(self.ps[i]), self.post(self.c), set(), f"premise {i}")

    def rule_preOr(self):
        union: frozenset = frozenset()
        for i, p in enumerate(self.ps):
            self._same_shape(i, pre=False)
            union |= self.k.ext(p.pre)
        if self.k.ext(self.c.pre) != union:
            self.fail("PreconditionMismatch", "precondition is not the disjunction of the premises' preconditions")

    def rule_postAnd(self):
        dc = self.post(self.c)
        ds = [self.post(p) for p in self.ps]
        for i in range(len(self.ps)):
            self._same_shape(i, post=False)
        every = self.k.dom.all_states
        for c in self.universe:
            meet = every
            for d in ds:
                meet &= self.k.ext(d[c])
            if self.k.ext(dc[c]) != meet:
                self.fail("PostconditionMismatch", f"component {c} is not the conjunction of the premises'")

    def rule_assumeOr(self):
        if self.ps[0].stmt != self.c.stmt:
            self.fail("StatementMismatch", "premise is about a different statement")
        self.pre_eq(self.ps[0].pre, self.c.pre, "premise precondition differs from the conclusion's")
        self.comps_eq(self.post(self.ps[0]), self.post(self.c), set(), "premise")
        if self.k.env_ext(self.ps[0]) != self.k.env_ext(self.c):
            self.fail("AssumptionMismatch", "conclusion assumptions are not the disjunction of the premise's entries")

    def rule_conseq(self):
        p, c = self.ps[0], self.c
        if p.stmt != c.stmt:
            self.fail("StatementMismatch", "premise is about a different statement")
        self.side("conclusion pre -> premise pre", c.pre, p.pre)
        dp, dc = self.post(p), self.post(c)
        for colour in self.universe:
            self.side(f"premise {colour} component -> conclusion {colour} component", dp[colour], dc[colour])
        penv, cenv = p.env(), c.env()
        for l in sorted(set(penv) | set(cenv)):
            self.side(f"conclusion assumption at {l} -> premise assumption at {l}", cenv.get(l, FALSE), penv.get(l, FALSE))
        if not self.k.lax_conseq:
            for l in sorted(cenv):
                self.side(f"conclusion G({l}) component -> conclusion assumption at {l}", dc[G(l)], cenv[l])


def check_rule(node: ProofNode, dom: Domain, subs=None, lax_conseq: bool = False) -> list[Diagnostic]:
    return Kernel(dom, subs, lax_conseq).check_rule(node)


def check_proof(root: ProofNode, dom: Domain, subs=None, lax_conseq: bool = False) -> Verdict:
    return Kernel(dom, subs, lax_conseq).check_proof(root)


# -- serialization -------------------------------------------------------------------


def node_to_dict(node: ProofNode) -> dict:
    return {
        "rule": node.rule,
        "conclusion": show_judgement(node.conclusion),
        "side_conditions": [
            {"description": s.description, "lhs": show_bool(s.lhs), "rhs": show_bool(s.rhs)}
            for s in node.side_conditions
        ],
        "premises": [node_to_dict(p) for p in node.premises],
    }


def node_from_dict(data: dict) -> ProofNode:
    return ProofNode(
        data["rule"],
        parse_judgement(data["conclusion"], "<proof>"),
        [node_from_dict(p) for p in data.get("premises", [])],
        [
            SideCondition(s["description"], parse_bool(s["lhs"], "<proof>"), parse_bool(s["rhs"], "<proof>"))
            for s in data.get("side_conditions", [])
        ],
    )


def to_json(node: ProofNode) -> str:
    return json.dumps(node_to_dict(node), indent=2) + "\n"


def from_json(text: str) -> ProofNode:
    return node_from_dict(json.loads(text))
