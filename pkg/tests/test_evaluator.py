import pytest
from hypothesis import given, settings, strategies as st

import gen
from nrb.errors import SizeLimitExceeded, UnboundVariable
from nrb.evaluator import Domain, enumerate_states, eval_bool, eval_term, substitute
from nrb.parser import parse_bool, parse_term, show_bool
from nrb.syntax import And, IntConst, Not, Or

DOM = gen.dom2()


def test_linear_term():
    assert eval_term(parse_term("5*x + 4*y + 3"), {"x": 1, "y": 2, "z": 0}) == 16


def test_constant_and_conditional():
    assert eval_term(parse_term("0"), {"x": 5}) == 0
    assert eval_term(parse_term("(x < 1 ? 7 : 9)"), {"x": 0}) == 7


def test_comparison_conjunction():
    b = parse_bool("5*x + 4*y + 3 < z + -4 /\\ y <= x")
    assert eval_bool(b, {"x": 1, "y": 2, "z": 30}) is False
    assert eval_bool(parse_bool("true"), {}) is True


def test_exists_ranges_over_declared_values():
    dom = Domain({"x": (0, 3), "w": (0, 3)})
    assert eval_bool(parse_bool("exists w. w = x"), {"x": 2, "w": 0}, dom)
    assert not eval_bool(parse_bool("exists w. w = x + 4"), {"x": 2, "w": 0}, dom)


def test_terms_may_leave_variable_ranges():
    assert eval_term(parse_term("x + 100"), {"x": 2}) == 102


def test_unbound_variable():
    with pytest.raises(UnboundVariable):
        eval_term(parse_term("q + 1"), {"x": 0})


def test_state_enumeration_order():
    assert enumerate_states(Domain({"x": (0, 1)})) == [{"x": 0}, {"x": 1}]
    assert enumerate_states(Domain({"x": (0, 1), "y": (0, 1)})) == [
        {"x": 0, "y": 0}, {"x": 0, "y": 1}, {"x": 1, "y": 0}, {"x": 1, "y": 1},
    ]
    assert enumerate_states(Domain({})) == [{}]


def test_size_cap():
    with pytest.raises(SizeLimitExceeded):
        Domain({"x": (0, 99), "y": (0, 99)}, max_states=1000).states


def test_cap_from_environment(monkeypatch):
    monkeypatch.setenv("NRB_MAX_STATES", "3")
    with pytest.raises(SizeLimitExceeded):
        Domain({"x": (0, 3)}).states


def test_substitution_examples():
    assert show_bool(substitute(parse_bool("x = 2"), "x", parse_term("x + 1"))) == "x + 1 = 2"
    bound = parse_bool("exists x. x = 0")
    assert substitute(bound, "x", IntConst(5)) == bound
    assert substitute(parse_bool("y < x"), "x", IntConst(3)) == parse_bool("y < 3")


def test_substitution_avoids_capture():
    b = parse_bool("exists y. y = x")
    out = substitute(b, "x", parse_term("y + 1"))
    dom = Domain({"x": (0, 2), "y": (0, 2)})
    for s in enumerate_states(dom):
        assert eval_bool(out, s, dom) == eval_bool(b, {**s, "x": s["y"] + 1}, dom)


@settings(max_examples=100, deadline=None)
@given(gen.bool_terms, gen.bool_terms)
def test_connectives_are_pointwise(a, b):
    for s in enumerate_states(DOM):
        assert eval_bool(Not(a), s) == (not eval_bool(a, s))
        assert eval_bool(And(a, b), s) == (eval_bool(a, s) and eval_bool(b, s))
        assert eval_bool(Or(a, b), s) == (eval_bool(a, s) or eval_bool(b, s))


@settings(max_examples=100, deadline=None)
@given(gen.bool_terms, st.sampled_from(gen.VARS2), st.integers(0, 2))
def test_substitution_lemma(b, x, n):
    after = substitute(b, x, IntConst(n))
    for s in enumerate_states(DOM):
        assert eval_bool(after, s, DOM) == eval_bool(b, {**s, x: n}, DOM)


@settings(max_examples=100, deadline=None)
@given(gen.bool_terms, st.sampled_from(gen.VARS2), gen.terms)
def test_substitution_lemma_for_terms(b, x, e):
    after = substitute(b, x, e)
    for s in enumerate_states(DOM):
        assert eval_bool(after, s, DOM) == eval_bool(b, {**s, x: eval_term(e, s)}, DOM)
