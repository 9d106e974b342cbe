"""Structural mutation corpus: every tampered proof must be rejected or
leave an undischarged obligation; silent acceptance is the only failure.
"""

import json

from ubhl.checker.kernel import check
from ubhl.checker.proof import ProofScript
from ubhl.lang.parser import parse_program
from ubhl.lang.typecheck import typecheck
from ubhl.cases.programs import MWSV_SOURCE, RNM_SOURCE, SV_SOURCE
from ubhl.cases.proofs import mwsv_proof, rnm_proof, sv_proof

PROGRAMS = {}
for _name, _src in (("rnm", RNM_SOURCE), ("sv", SV_SOURCE), ("mwsv", MWSV_SOURCE)):
    _p = parse_program(_src)
    typecheck(_p)
    PROGRAMS[_name] = _p

BUILDERS = {"rnm": rnm_proof, "sv": sv_proof, "mwsv": mwsv_proof}


def reload(script: ProofScript) -> dict:
    return json.loads(script.to_json())


def rebuild(doc: dict) -> ProofScript:
    return ProofScript.from_json(json.dumps(doc))


def text_swap(doc: dict, old: str, new: str, limit: int = 0) -> dict:
    text = json.dumps(doc)
    assert old in text, f"mutation target {old!r} not found"
    text = text.replace(old, new) if not limit else text.replace(old, new, limit)
    return json.loads(text)


def walk(node: dict):
    yield node
    for child in node.get("children", []):
        yield from walk(child)


def find(doc: dict, pred):
    for n in walk(doc["root"]):
        if pred(n):
            return n
    raise AssertionError("mutation target node not found")


def detected(name: str, doc: dict, want_rejected: bool = False) -> None:
    res = check(PROGRAMS[name], rebuild(doc))
    if want_rejected:
        assert not res.accepted, f"{name}: mutation silently accepted"
        return
    assert (not res.accepted) or (not res.fully_proved), \
        f"{name}: mutation silently accepted and fully proved"


# ── report-noisy-max ──


def test_rnm_m01_root_index_decrement():
    # beta <= beta/2 is not refutable at beta == 0, so the kernel
    # exports it as an open inequality rather than rejecting outright
    doc = reload(rnm_proof())
    doc["root"]["index"] = "beta/2"
    doc["root"]["children"][0]["index"] = "beta/2"
    detected("rnm", doc)


def test_rnm_m02_loop_bound_shrunk():
    doc = reload(rnm_proof())
    loop = find(doc, lambda n: n.get("rule") == "while")
    loop["bound"] = "size(R0) - 1"
    detected("rnm", doc, want_rejected=True)


def test_rnm_m03_invariant_conjunct_dropped():
    doc = reload(rnm_proof())
    loop = find(doc, lambda n: n.get("rule") == "while")
    inv_parts = loop["invariant"].split(" && (forall s in R0 . s in R || flag == false)")
    assert len(inv_parts) == 2
    loop["invariant"] = "".join(inv_parts)
    detected("rnm", doc)


def test_rnm_m04_if_branches_swapped():
    doc = reload(rnm_proof())
    if_node = find(doc, lambda n: n.get("rule") == "if"
                   and "remove" in n.get("post", ""))
    if_node["children"] = if_node["children"][::-1]
    detected("rnm", doc, want_rejected=True)


def test_rnm_m05_sampling_budget_halved():
    doc = reload(rnm_proof())
    rand = find(doc, lambda n: n.get("rule") == "rand"
                and n.get("schema") == "lap_acc")
    rand["site_index"] = "beta/(2*size(R0))"
    detected("rnm", doc, want_rejected=True)


def test_rnm_m06_theorem_margin_tightened():
    doc = reload(rnm_proof())
    doc = text_swap(doc, "(4/eps)*log(size(R0)/beta)", "(3/eps)*log(size(R0)/beta)")
    detected("rnm", doc)


# ── interactive threshold release ──


def test_sv_m07_root_index_decrement():
    doc = reload(sv_proof())
    doc["root"]["index"] = "beta/2"
    doc["root"]["children"][0]["index"] = "beta/2"
    detected("sv", doc)


def test_sv_m08_iteration_budget_changed():
    doc = reload(sv_proof())
    loop = find(doc, lambda n: n.get("rule") == "while")
    loop["iter_index"] = "beta/(Q+2)"
    detected("sv", doc, want_rejected=True)


def test_sv_m09_margin_tightened():
    doc = reload(sv_proof())
    doc = text_swap(doc, "(6/eps)*log((Q+1)/beta)", "(5/eps)*log((Q+1)/beta)")
    detected("sv", doc)


def test_sv_m10_step_branches_swapped():
    doc = reload(sv_proof())
    if_node = find(doc, lambda n: n.get("rule") == "if"
                   and "z == true" in json.dumps(n))
    if_node["children"] = if_node["children"][::-1]
    detected("sv", doc, want_rejected=True)


def test_sv_m11_adversary_rule_pre_malformed():
    doc = reload(sv_proof())
    ext = find(doc, lambda n: n.get("rule") == "ext"
               and "forall v" in n.get("pre", ""))
    ext["pre"] = ext["post"]
    detected("sv", doc, want_rejected=True)


# ── synthetic-database release ──


def test_mwsv_m12_root_index_decrement():
    doc = reload(mwsv_proof())
    doc["root"]["index"] = "(9/10)*beta"
    detected("mwsv", doc, want_rejected=True)


def test_mwsv_m13_loop_bound_shrunk():
    doc = reload(mwsv_proof())
    loop = find(doc, lambda n: n.get("rule") == "while")
    loop["bound"] = "Q - 1"
    detected("mwsv", doc, want_rejected=True)


def test_mwsv_m14_potential_budget_inflated():
    doc = reload(mwsv_proof())
    loop = find(doc, lambda n: n.get("rule") == "while")
    loop["invariant"] = loop["invariant"].replace(
        "potential(mwdb, d) <= log(X)", "potential(mwdb, d) <= 2*log(X)")
    detected("mwsv", doc, want_rejected=True)


def test_mwsv_m15_update_noise_budget_halved():
    doc = reload(mwsv_proof())
    rand = find(doc, lambda n: n.get("rule") == "rand"
                and n.get("site_index") == "beta/(2*Q)")
    rand["site_index"] = "beta/(4*Q)"
    detected("mwsv", doc, want_rejected=True)


def test_baselines_clean():
    for name, builder in BUILDERS.items():
        res = check(PROGRAMS[name], builder())
        assert res.accepted
        if name in ("rnm", "sv"):
            assert res.fully_proved
