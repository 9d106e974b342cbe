"""Shipped case studies: checking, building, validating, file sync."""

import json
from pathlib import Path

import pytest

from ubhl.cases.export import export_cases
from ubhl.cases.registry import (
    DEFAULT_PARAMS, PreconditionViolated, build_case, case_proof, case_source,
    check_case, rnm_analytic_bound, validate_case,
)
from ubhl.checker.proof import ProofScript
from ubhl.lang.parser import parse_program
from ubhl.lang.typecheck import typecheck

REPO = Path(__file__).resolve().parent.parent


def test_check_case_rnm_fully_discharged():
    res = check_case("rnm")
    assert res.accepted and res.fully_proved


def test_check_case_sv_fully_discharged():
    res = check_case("sv")
    assert res.accepted and res.fully_proved


def test_check_case_mwsv_accepted_with_exports():
    res = check_case("mwsv")
    assert res.accepted
    open_obs = res.undischarged()
    assert open_obs, "the synthetic-db case is expected to export arithmetic"
    assert all("export" in ob.note for ob in open_obs)


def test_build_rnm_bad_event_margin():
    import math

    case = build_case("rnm")
    env = dict(case.logical_env)
    # bad event references the 4/eps ln(|R0|/beta) margin
    from ubhl.lang.ast import pretty_expr
    text = pretty_expr(case.bad_event)
    assert "4 / eps * log(size(R0) / beta)" in text
    assert float(4 * math.log(10 / 0.2)) == pytest.approx(15.648, abs=1e-3)


def test_build_sv_margin():
    case = build_case("sv")
    from ubhl.lang.ast import pretty_expr
    assert "6 / eps * log((Q + 1) / beta)" in pretty_expr(case.bad_event)


def test_mwsv_alpha_feasibility_enforced():
    case = build_case("mwsv")
    assert case.params["alpha"] == pytest.approx(9.30, abs=0.05)
    with pytest.raises(PreconditionViolated):
        build_case("mwsv", {"alpha": 1.0})
    with pytest.raises(PreconditionViolated):
        build_case("mwsv", {"counts": [1] * 8})  # does not sum to n


def test_validation_smoke_all_cases():
    r = validate_case("rnm", trials=120, seed=5)
    assert r.verdict and r.estimate.failures == 0
    r = validate_case("sv", trials=60, seed=5, adversary="random")
    assert r.verdict
    r = validate_case("mwsv", trials=30, seed=5, adversary="adaptive")
    assert r.verdict
    assert r.extras["update_budget_violations"] == 0


def test_validation_jobs_parity():
    a = validate_case("sv", trials=48, seed=11, adversary="fixed", jobs=1)
    b = validate_case("sv", trials=48, seed=11, adversary="fixed", jobs=3)
    assert a.estimate.failures == b.estimate.failures
    assert a.extras == b.extras


def test_estimate_report_schema():
    import json as _json

    r = validate_case("rnm", trials=20, seed=3)
    payload = _json.loads(r.estimate.to_json())
    assert set(payload) == {"trials", "failures", "rate", "upper95", "seed", "params"}


def test_validation_is_deterministic():
    a = validate_case("sv", trials=40, seed=9, adversary="adaptive")
    b = validate_case("sv", trials=40, seed=9, adversary="adaptive")
    assert a.to_json() == b.to_json()


def test_rnm_analytic_bound_value():
    # ten candidates, eps 1, beta 0.2: the summed per-candidate tail
    assert rnm_analytic_bound() == pytest.approx(0.228015, abs=1e-5)


def test_unknown_adversary_rejected():
    with pytest.raises(KeyError):
        validate_case("sv", trials=5, seed=1, adversary="nope")


def test_shipped_files_in_sync(tmp_path):
    export_cases(tmp_path)
    for name in ("rnm", "sv", "mwsv"):
        shipped = REPO / "cases" / name
        fresh = tmp_path / name
        assert (shipped / "program.ubhl").read_text() == \
            (fresh / "program.ubhl").read_text()
        assert json.loads((shipped / "proof.json").read_text()) == \
            json.loads((fresh / "proof.json").read_text())
        assert json.loads((shipped / "params" / "default.json").read_text()) == \
            DEFAULT_PARAMS[name]


def test_proof_files_round_trip():
    for name in ("rnm", "sv", "mwsv"):
        script = case_proof(name)
        again = ProofScript.from_json(script.to_json())
        assert again.to_json() == script.to_json()
        program = parse_program(case_source(name))
        typecheck(program)
