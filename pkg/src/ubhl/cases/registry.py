"""Case-study registry: building, checking and validating the shipped
mechanisms at concrete parameters."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ..checker.kernel import CheckResult, check
from ..checker.proof import ProofScript
from ..dp.laplace import lap_tail
from ..dp.mw import mw_alpha_formulas, solve_feasible_alpha
from ..dp.queries import Database
from ..lang.ast import Expr
from ..lang.parser import parse_expr, parse_program
from ..lang.typecheck import typecheck
from ..semantics.evalexpr import UbhlRuntimeError, eval_in_memory
from ..semantics.trial import (
    AdversaryStrategy, EstimateReport, TrialAborted, clopper_pearson_upper,
    run_trial,
)
from ..semantics.values import ArrayVal, Value
from . import adversaries as adv
from .programs import MWSV_SOURCE, RNM_SOURCE, SV_SOURCE
from .proofs import mwsv_proof, rnm_proof, sv_proof

CASE_NAMES = ("rnm", "sv", "mwsv")


class PreconditionViolated(Exception):
    pass


@dataclass
class CaseStudy:
    name: str
    source: str
    proof: ProofScript
    precondition: str
    bad_event: Expr
    index: Expr
    params: dict
    overrides: dict[str, Value]
    logical_env: dict[str, Value]
    adversary_menu: dict[str, AdversaryStrategy] = field(default_factory=dict)


@dataclass
class ValidationReport:
    case: str
    params: dict
    adversary: Optional[str]
    estimate: EstimateReport
    theorem_index: float
    verdict: bool
    extras: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({
            "case": self.case,
            "params": self.params,
            "adversary": self.adversary,
            "estimate": json.loads(self.estimate.to_json()),
            "theorem_index": self.theorem_index,
            "verdict": self.verdict,
            "extras": self.extras,
        }, sort_keys=True, indent=1)


_SOURCES = {"rnm": RNM_SOURCE, "sv": SV_SOURCE, "mwsv": MWSV_SOURCE}
_PROOFS = {"rnm": rnm_proof, "sv": sv_proof, "mwsv": mwsv_proof}

DEFAULT_PARAMS = {
    "rnm": {"size": 10, "eps": 1.0, "beta": 0.2},
    "sv": {"Q": 20, "eps": 1.0, "beta": 0.2, "threshold": 3.0,
           "universe": 8, "counts": [2, 1, 0, 1, 0, 1, 0, 1]},
    "mwsv": {"Q": 10, "eps": 40.0, "beta": 0.25, "universe": 8, "n": 6,
             "counts": [3, 1, 0, 0, 1, 0, 1, 0]},
}


def case_source(name: str) -> str:
    return _SOURCES[name]


def case_proof(name: str) -> ProofScript:
    return _PROOFS[name]()


def build_case(name: str, params: Optional[dict] = None) -> CaseStudy:
    if name not in CASE_NAMES:
        raise KeyError(f"unknown case {name!r}")
    p = dict(DEFAULT_PARAMS[name])
    p.update(params or {})
    if name == "rnm":
        return _build_rnm(p)
    if name == "sv":
        return _build_sv(p)
    return _build_mwsv(p)


def _frac(x) -> Fraction:
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


def _build_rnm(p: dict) -> CaseStudy:
    size = int(p["size"])
    eps = _frac(p["eps"])
    beta = _frac(p["beta"])
    if not (0 < beta < 1) or eps <= 0 or size < 1:
        raise PreconditionViolated("need eps > 0, beta in (0,1), a nonempty candidate set")
    candidates = frozenset(range(size))
    qscore = p.get("qscore", [i for i in range(size)])
    table = ArrayVal(Fraction(0), tuple((i, _frac(v)) for i, v in enumerate(qscore)))
    overrides = {"R": candidates, "eps": eps, "qscore": table}
    logical_env = {"beta": beta, "R0": candidates}
    bad = parse_expr(
        "exists s in R0 . qscore[res] < qscore[s] - (4/eps)*log(size(R0)/beta)")
    return CaseStudy(
        name="rnm", source=RNM_SOURCE, proof=rnm_proof(),
        precondition="R == R0", bad_event=bad, index=parse_expr("beta"),
        params=p, overrides=overrides, logical_env=logical_env,
        adversary_menu={})


def _build_sv(p: dict) -> CaseStudy:
    q_count = int(p["Q"])
    eps = _frac(p["eps"])
    beta = _frac(p["beta"])
    if not (0 < beta < 1) or eps <= 0 or q_count < 1:
        raise PreconditionViolated("need eps > 0, beta in (0,1), Q >= 1")
    counts = [_frac(c) for c in p["counts"]]
    db = Database(tuple(counts))
    overrides = {"Qn": q_count, "epsin": eps, "tin": _frac(p["threshold"]), "d": db}
    logical_env = {"beta": beta, "Q": q_count}
    bad = parse_expr(
        "exists j in 1 .. Q . ((res[j] == true && evalQ(q[j], d) < tin"
        " - (6/eps)*log((Q+1)/beta)) || (res[j] == false && evalQ(q[j], d) > tin"
        " + (6/eps)*log((Q+1)/beta)))")
    return CaseStudy(
        name="sv", source=SV_SOURCE, proof=sv_proof(),
        precondition="Qn == Q", bad_event=bad, index=parse_expr("beta"),
        params=p, overrides=overrides, logical_env=logical_env,
        adversary_menu=adv.sv_menu(int(p["universe"]), tuple(counts)))


def _build_mwsv(p: dict) -> CaseStudy:
    q_count = int(p["Q"])
    eps = float(p["eps"])
    beta = float(p["beta"])
    universe = int(p["universe"])
    n = int(p["n"])
    counts = [_frac(c) for c in p["counts"]]
    if sum(counts) != n:
        raise PreconditionViolated(f"counts must sum to n={n}")
    alpha = p.get("alpha")
    if alpha is None:
        alpha = solve_feasible_alpha(eps, q_count, universe, n, beta)
        p = dict(p)
        p["alpha"] = alpha
    _, a_sv, a_lap = mw_alpha_formulas(float(alpha), eps, q_count, universe, n, beta)
    if float(alpha) < max(a_sv, a_lap):
        raise PreconditionViolated(
            f"alpha={alpha} below max(alpha_sv, alpha_lap)="
            f"{max(a_sv, a_lap):.4f}")
    db = Database(tuple(counts))
    overrides = {
        "Qn": q_count, "eps": _frac(eps), "alpha": _frac(alpha),
        "X": universe, "n": n, "d": db,
    }
    logical_env = {"beta": _frac(beta), "Q": q_count}
    bad = parse_expr("exists j in 1 .. Q . abs(res[j] - evalQ(q[j], d)) > alpha")
    return CaseStudy(
        name="mwsv", source=MWSV_SOURCE, proof=mwsv_proof(),
        precondition="alpha >= max(alpha_sv, alpha_lap)", bad_event=bad,
        index=parse_expr("beta"), params=p, overrides=overrides,
        logical_env=logical_env, adversary_menu=adv.mwsv_menu(universe))


def check_case(name: str, prover_budget: int = 60000) -> CheckResult:
    program = parse_program(case_source(name))
    typecheck(program)
    return check(program, case_proof(name), prover_budget=prover_budget)


def rnm_analytic_bound(params: Optional[dict] = None) -> float:
    """Sum of per-candidate tail bounds at the theorem's radius; a
    tighter ceiling than the headline index."""
    p = dict(DEFAULT_PARAMS["rnm"])
    p.update(params or {})
    size = int(p["size"])
    eps = float(p["eps"])
    beta = float(p["beta"])
    radius = (2.0 / eps) * math.log(size / beta)
    return size * lap_tail(eps / 2.0, radius)


def _validate_chunk(args) -> tuple[int, dict[str, int]]:
    (name, params, seed, start, count, adversary, extra_checks, loop_cap) = args
    case = build_case(name, params)
    program = parse_program(case.source)
    strategies: dict[str, AdversaryStrategy] = {}
    if case.adversary_menu:
        strategies = {"adv": case.adversary_menu[adversary]}
    extras_src = {k: parse_expr(v) for k, v in (extra_checks or {}).items()}
    failures = 0
    extra_counts = {k: 0 for k in extras_src}
    if name == "mwsv":
        extra_counts.setdefault("update_budget_violations", 0)
    for i in range(start, start + count):
        try:
            mem = run_trial(program, "main", 0, strategies, seed, i,
                            overrides=case.overrides, loop_cap=loop_cap)
            if bool(eval_in_memory(case.bad_event, mem, case.logical_env)):
                failures += 1
            for key, e in extras_src.items():
                if bool(eval_in_memory(e, mem, case.logical_env)):
                    extra_counts[key] += 1
            if name == "mwsv" and mem.get("u") > mem.get("c"):
                extra_counts["update_budget_violations"] += 1
        except (TrialAborted, UbhlRuntimeError):
            failures += 1
            for key in extra_counts:
                extra_counts[key] += 1
    return failures, extra_counts


def validate_case(name: str, params: Optional[dict] = None, trials: int = 1000,
                  seed: int = 0, adversary: Optional[str] = None,
                  extra_checks: Optional[dict[str, str]] = None,
                  loop_cap: int = 100000, jobs: int = 1) -> ValidationReport:
    """Monte Carlo estimate of the theorem's bad event, plus optional
    per-trial trace checks (an aborted trial counts as failing all).
    Trials are independent, so they chunk across processes; counts add."""
    case = build_case(name, params)
    program = parse_program(case.source)
    typecheck(program)
    menu = case.adversary_menu
    adv_name = adversary
    if menu:
        adv_name = adversary or "fixed"
        if adv_name not in menu:
            raise KeyError(f"case {name!r} has no adversary {adv_name!r}")

    if jobs <= 1:
        failures, extra_counts = _validate_chunk(
            (name, case.params, seed, 0, trials, adv_name, extra_checks, loop_cap))
    else:
        from concurrent.futures import ProcessPoolExecutor

        chunk = (trials + jobs - 1) // jobs
        tasks = []
        start = 0
        while start < trials:
            n = min(chunk, trials - start)
            tasks.append((name, case.params, seed, start, n, adv_name,
                          extra_checks, loop_cap))
            start += n
        failures = 0
        extra_counts = {}
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for f, extras in pool.map(_validate_chunk, tasks):
                failures += f
                for k, v in extras.items():
                    extra_counts[k] = extra_counts.get(k, 0) + v
    rate = failures / trials
    estimate = EstimateReport(
        trials=trials, failures=failures, failure_rate=rate,
        clopper_pearson_upper_95=clopper_pearson_upper(failures, trials),
        seed=seed,
        params={k: str(v) for k, v in case.params.items()})
    from ..checker.index import index_eval
    theorem_index = index_eval(case.index, case.logical_env)
    return ValidationReport(
        case=name, params=case.params, adversary=adv_name,
        estimate=estimate, theorem_index=theorem_index,
        verdict=rate <= theorem_index, extras=extra_counts)
