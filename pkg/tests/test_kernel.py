import math
from fractions import Fraction

import pytest

from ubhl.checker.axioms import (
    SchemaMismatch, default_registry, instantiate_axiom,
)
from ubhl.checker.index import NegativeIndex, index_equal, index_eval
from ubhl.checker.kernel import check
from ubhl.checker.proof import ProofNode, ProofScript
from ubhl.lang.ast import DistExpr, Var
from ubhl.lang.parser import parse_expr, parse_program
from ubhl.lang.typecheck import typecheck


def node(rule, pre, post, index, children=(), **ann):
    return ProofNode(rule, pre, post, index, list(children), dict(ann))


def script(root, logicals=None):
    return ProofScript(logicals=logicals or {},
                       entry={"proc": "main", "arg": "0", "result": "res"},
                       root=root)


SKIP_PROG = parse_program("var x : int;\nproc main(w) { skip; } return x")
COINS = parse_program("""
var x : bool;
var y : bool;
proc main(u) { x <$ bern(1/2); y <$ bern(1/2); } return x
""")
for p in (SKIP_PROG, COINS):
    typecheck(p)


def coin_proof(root_index="1/2", weak_index=None):
    body = node("seq", "true", "true && (x == false)", "1/2", [
        node("rand", "true", "x == false", "1/2",
             schema="finite_exact", site_post="x == false", site_index="1/2"),
        node("rand", "x == false", "true && (x == false)", "0",
             schema="true_post", site_index="0", frame="x == false"),
    ])
    inner = node("weak", "true", "!(x && y)", weak_index or root_index, [body])
    return script(node("call", "true", "!(res && y)", root_index, [inner],
                       proc="main", callee_pre="true", callee_post="!(res && y)"))


def test_skip_rule():
    root = node("call", "x > 0", "x > 0", "0", [
        node("skip", "x > 0", "x > 0", "0")],
        proc="main", callee_pre="x > 0", callee_post="x > 0")
    res = check(SKIP_PROG, script(root))
    assert res.accepted and res.fully_proved


def test_skip_rule_rejects_changed_post():
    root = node("call", "x > 0", "x > 1", "0", [
        node("skip", "x > 0", "x > 1", "0")],
        proc="main", callee_pre="x > 0", callee_post="x > 1")
    res = check(SKIP_PROG, script(root))
    assert not res.accepted
    assert "pre must equal post" in res.reason


def test_coin_proof_accepted():
    res = check(COINS, coin_proof())
    assert res.accepted and res.fully_proved


def test_seq_index_mismatch_rejected():
    """Children at beta/2 each cannot justify a beta/3 conclusion."""
    body = node("seq", "true", "true", "1/3", [
        node("rand", "true", "true", "1/6",
             schema="true_post", site_index="0"),
        node("rand", "true", "true", "1/6",
             schema="true_post", site_index="0"),
    ])
    root = node("call", "true", "true", "1/3", [body],
                proc="main", callee_pre="true", callee_post="true")
    res = check(COINS, script(root))
    assert not res.accepted
    assert "index" in res.reason


def test_weak_cannot_lower_index():
    res = check(COINS, coin_proof(root_index="1/5", weak_index="1/5"))
    assert not res.accepted
    assert "index" in res.reason.lower()


def test_finite_exact_premise_is_decided():
    bad = script(node("call", "true", "res == false", "1/4", [
        node("weak", "true", "x == false", "1/4", [
            node("seq", "true", "true && (x == false)", "1/4", [
                node("rand", "true", "x == false", "1/4",
                     schema="finite_exact", site_post="x == false",
                     site_index="1/4"),
                node("rand", "x == false", "true && (x == false)", "0",
                     schema="true_post", site_index="0", frame="x == false"),
            ])])],
        proc="main", callee_pre="true", callee_post="res == false"))
    res = check(COINS, bad)
    assert not res.accepted
    assert "probability" in res.reason  # claims 1/4, true failure mass 1/2


def test_frame_rejects_modified_variable():
    root = node("call", "x == false", "x == false", "0", [
        node("frame", "x == false", "x == false", "0")],
        proc="main", callee_pre="x == false", callee_post="x == false")
    res = check(COINS, script(root))
    assert not res.accepted
    assert "modifies" in res.reason


def test_false_rule():
    root = node("call", "true", "false", "1", [
        node("weak", "true", "false", "1", [
            node("false", "true", "false", "1")])],
        proc="main", callee_pre="true", callee_post="false")
    res = check(COINS, script(root))
    assert res.accepted


# ── axiom instantiation ──


def test_lap_acc_instantiation_formula():
    reg = default_registry()
    dist = DistExpr("lap", (parse_expr("eps/2"), parse_expr("qscore[r]")))
    post, iota = instantiate_axiom(reg, "lap_acc", parse_expr("noisy[r]"),
                                   dist, parse_expr("beta/size(R0)"))
    want = parse_expr(
        "abs(noisy[r] - qscore[r]) <= (2/eps)*log(size(R0)/beta)")
    from ubhl.assertions.normform import assertions_equal
    assert assertions_equal(post, want)
    assert index_equal(iota, parse_expr("beta/size(R0)"))


def test_lap_acc_threshold_value():
    reg = default_registry()
    dist = DistExpr("lap", (parse_expr("1"), parse_expr("0")))
    post, _ = instantiate_axiom(reg, "lap_acc", Var("x"), dist, parse_expr("1/10"))
    # |x - 0| <= log(10)
    bound = post.right
    from ubhl.semantics.evalexpr import eval_expr
    assert abs(float(eval_expr(bound, {})) - math.log(10)) < 1e-9


def test_lap_acc_on_bernoulli_is_schema_mismatch():
    reg = default_registry()
    dist = DistExpr("bern", (parse_expr("1/2"),))
    with pytest.raises(SchemaMismatch):
        instantiate_axiom(reg, "lap_acc", Var("x"), dist, parse_expr("1/10"))


def test_lap_acc_validation_hook():
    """The hook reports where the natural-log radius is honest about the
    discrete distribution: fine at small budgets, short by a factor of
    at most 2/(1+e^-eps) at coarse ones (the criterion-2 docstring in
    test_acceptance.py has the full story)."""
    reg = default_registry()
    hook = reg.get("lap_acc").validate
    assert hook(1.0, 0.1)
    assert hook(4.0, 0.1)
    assert hook(1.0, 0.01)
    assert not hook(1.0, 0.5)
    assert not hook(0.5, 0.02)  # noisy-max site parameters sit past the edge


# ── index algebra ──


def test_index_examples():
    env = {"beta": Fraction(1, 5), "Q": 20}
    assert index_eval(parse_expr("(beta/(Q+1))*(Q+1)"), env) == pytest.approx(0.2)
    assert index_eval(parse_expr("10 * beta"), {"beta": Fraction(1, 50)}) == \
        pytest.approx(0.2)
    with pytest.raises(NegativeIndex):
        index_eval(parse_expr("beta - 1"), {"beta": Fraction(1, 2)})


def test_index_symbolic_equalities():
    assert index_equal(parse_expr("(beta/(Q+1))*(Q+1)"), parse_expr("beta"))
    assert index_equal(parse_expr("size(R0)*(beta/size(R0))"), parse_expr("beta"))
    assert not index_equal(parse_expr("beta/2"), parse_expr("beta"))
