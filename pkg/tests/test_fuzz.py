"""Adversarial soundness fuzzing.

Three trust anchors get attacked with randomized inputs and checked
against independent ground truth: the kernel (accepted mutant proofs
must still satisfy their claimed bound under exact evaluation), the
prover (no proved implication may be falsified by enumeration), and the
canonical equality oracle (equal keys really mean equal truth tables).
All seeds are fixed; failures print the offending instance.
"""

import json
import random
from fractions import Fraction

from ubhl.assertions.normform import assertions_equal
from ubhl.assertions.prover import Prover
from ubhl.checker.index import NegativeIndex, index_eval
from ubhl.checker.kernel import check
from ubhl.checker.proof import ProofScript
from ubhl.lang.ast import (
    BOOL, BinOp, Call, FuncCall, INT, LValue, NumLit, Quant, SETINT, SetDom,
    UnOp, Var, pretty_expr,
)
from ubhl.lang.parser import parse_expr
from ubhl.semantics.evalexpr import UbhlRuntimeError, eval_expr, eval_in_memory
from ubhl.semantics.exact import denote_exact, initial_memory

from corpus import generate_corpus


def nodes_of(doc):
    out = []

    def walk(n):
        out.append(n)
        for c in n.get("children", []):
            walk(c)

    walk(doc["root"])
    return out


def mutate(doc, rng):
    doc = json.loads(json.dumps(doc))
    ns = nodes_of(doc)
    n = rng.choice(ns)
    kind = rng.randrange(6)
    if kind == 0:
        n["index"] = f"({n['index']}) * (1/2)"
    elif kind == 1:
        n["index"] = f"({n['index']}) + 1/7"
    elif kind == 2:
        n["post"] = rng.choice(ns)["post"]
    elif kind == 3:
        n["pre"] = rng.choice(ns)["pre"]
    elif kind == 4 and len(n.get("children", [])) == 2:
        n["children"] = n["children"][::-1]
    elif "site_index" in n:
        n["site_index"] = f"({n['site_index']}) * (1/3)"
    else:
        n["index"] = "0"
    return doc


def test_kernel_survives_mutation_fuzzing():
    """A mutant that still checks must still be semantically valid."""
    rng = random.Random(424242)
    corpus = generate_corpus()
    survivors = 0
    for _ in range(200):
        program, script, _params = corpus[rng.randrange(len(corpus))]
        doc = mutate(json.loads(script.to_json()), rng)
        if rng.random() < 0.4:
            doc = mutate(doc, rng)
        try:
            mutant = ProofScript.from_json(json.dumps(doc))
            res = check(program, mutant)
        except Exception:
            continue
        if not (res.accepted and res.fully_proved):
            continue
        survivors += 1
        try:
            beta = index_eval(parse_expr(mutant.root.index), {})
        except NegativeIndex:
            raise AssertionError(f"negative index accepted: {mutant.root.index}")
        post = parse_expr(mutant.root.post)
        cmd = Call(LValue("res"), "main", parse_expr(mutant.entry.get("arg", "0")))
        dist = denote_exact(program, cmd, initial_memory(program).set("res", 0))

        def bad(m):
            try:
                return not bool(eval_in_memory(post, m, {}))
            except UbhlRuntimeError:
                return True

        mass = float(dist.prob_upper(bad))
        assert mass <= beta + 1e-9, \
            f"accepted mutant violates its bound: {mass} > {beta}\n{json.dumps(doc)[:500]}"
    assert survivors >= 20  # the fuzz actually exercises accepted trees


SORTS = {"i": INT, "j": INT, "k": INT, "b": BOOL, "S": SETINT, "T": SETINT}
_INTS = [-2, -1, 0, 1, 2]
_SETS = [frozenset(), frozenset({0}), frozenset({1, 2}), frozenset({-1, 0, 2})]
ASSIGNMENTS = [dict(i=i, j=j, k=1, b=b, S=s, T=t)
               for i in _INTS for j in _INTS for b in (False, True)
               for s in _SETS[:3] for t in _SETS[1:3]]


def _rand_term(rng, depth=0):
    if depth > 2 or rng.random() < 0.35:
        return rng.choice([Var("i"), Var("j"), Var("k"),
                           NumLit(Fraction(rng.randint(-3, 3)))])
    return BinOp(rng.choice(["+", "-", "*"]),
                 _rand_term(rng, depth + 1), _rand_term(rng, depth + 1))


def _rand_atom(rng):
    r = rng.random()
    if r < 0.5:
        op = rng.choice(["<", "<=", "==", "!=", ">", ">="])
        return BinOp(op, _rand_term(rng), _rand_term(rng))
    if r < 0.65:
        return Var("b")
    if r < 0.8:
        return BinOp("in", rng.choice([Var("i"), Var("j")]),
                     rng.choice([Var("S"), Var("T")]))
    if r < 0.9:
        return FuncCall("isempty", (rng.choice([Var("S"), Var("T")]),))
    return BinOp("<=", FuncCall("size", (Var("S"),)), _rand_term(rng))


def _rand_assert(rng, depth=0):
    r = rng.random()
    if depth > 2 or r < 0.4:
        return _rand_atom(rng)
    if r < 0.55:
        return UnOp("!", _rand_assert(rng, depth + 1))
    if r < 0.7:
        return BinOp("&&", _rand_assert(rng, depth + 1), _rand_assert(rng, depth + 1))
    if r < 0.85:
        return BinOp("||", _rand_assert(rng, depth + 1), _rand_assert(rng, depth + 1))
    if r < 0.93:
        return BinOp("==>", _rand_assert(rng, depth + 1), _rand_assert(rng, depth + 1))
    var = rng.choice(["s", "t"])
    return Quant(rng.choice(["forall", "exists"]), var,
                 SetDom(rng.choice([Var("S"), Var("T")])),
                 BinOp(rng.choice(["<", "<=", "!="]), Var(var), _rand_term(rng)))


def _truth(e, store):
    try:
        return bool(eval_expr(e, store))
    except UbhlRuntimeError:
        return None


def test_prover_and_canon_fuzzing():
    rng = random.Random(99991)
    proved = equal = 0
    for _ in range(500):
        a, c = _rand_assert(rng), _rand_assert(rng)
        prover = Prover(dict(SORTS), budget=4000)
        try:
            verdict = prover.prove_implication(a, c)
        except Exception:
            verdict = False
        if verdict:
            proved += 1
            for store in ASSIGNMENTS:
                if _truth(a, store) is True:
                    assert _truth(c, store) is not False, \
                        f"proved but false: {pretty_expr(a)} => {pretty_expr(c)} at {store}"
        try:
            are_equal = assertions_equal(a, c)
        except Exception:
            are_equal = False
        if are_equal:
            equal += 1
            for store in ASSIGNMENTS:
                assert _truth(a, store) == _truth(c, store), \
                    f"canon-equal but diverge: {pretty_expr(a)} vs {pretty_expr(c)} at {store}"
    assert proved >= 10
