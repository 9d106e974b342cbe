"""Seeded Monte Carlo execution and failure-rate estimation.

One trial is a deterministic function of (program, argument,
adversaries, seed, trial index); aggregation is a commutative sum of
counts, so trials can run in any order or in parallel.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from ..dp.laplace import lap_sample
from ..lang.ast import (
    Assign, Call, Command, DistExpr, Expr, ExtCall, If, Program, Sample, Seq,
    Skip, While,
)
from .evalexpr import UbhlRuntimeError, eval_expr
from .exact import initial_memory
from .rng import TrialRng
from .values import ArrayVal, Memory, Value


class TrialAborted(Exception):
    """Loop-budget guard tripped; counted as a failure by estimators."""


class AdversaryStrategy:
    """External procedure implementation.

    Operates only on its own store `ext`; may draw from `rng`. Exact
    evaluation passes rng=None, so strategies used there must be
    deterministic.
    """

    def respond(self, ext: dict[str, Value], args: tuple[Value, ...],
                rng: Optional[TrialRng]) -> tuple[dict[str, Value], Value]:
        raise NotImplementedError


class TrialInterpreter:
    def __init__(self, program: Program, adversaries: Mapping[str, AdversaryStrategy],
                 rng: TrialRng, loop_cap: int = 1_000_000):
        self.program = program
        self.adversaries = dict(adversaries)
        self.rng = rng
        self.loop_cap = loop_cap
        self.ext: dict[str, Value] = {}
        self.ghost_log: list[tuple[tuple[str, ...], Value]] = []

    def run(self, store: dict[str, Value], c: Command) -> None:
        if isinstance(c, Skip):
            return
        if isinstance(c, Assign):
            self._write(store, c, eval_expr(c.expr, store))
            return
        if isinstance(c, Sample):
            self._write(store, c, self._draw(c.dist, store))
            return
        if isinstance(c, Seq):
            self.run(store, c.first)
            self.run(store, c.second)
            return
        if isinstance(c, If):
            branch = c.then if eval_expr(c.guard, store) else c.els
            self.run(store, branch)
            return
        if isinstance(c, While):
            iters = 0
            while eval_expr(c.guard, store):
                self.run(store, c.body)
                iters += 1
                if iters >= self.loop_cap:
                    raise TrialAborted(f"loop exceeded {self.loop_cap} iterations")
            return
        if isinstance(c, Call):
            callee = self.program.procs[c.proc]
            store[callee.arg] = eval_expr(c.arg, store)
            self.run(store, callee.body)
            self._write(store, c, eval_expr(callee.ret, store))
            return
        if isinstance(c, ExtCall):
            strat = self.adversaries.get(c.ext)
            if strat is None:
                raise UbhlRuntimeError(f"no adversary bound for {c.ext!r}")
            args = tuple(eval_expr(a, store) for a in c.args)
            self.ext, value = strat.respond(self.ext, args, self.rng)
            self._write(store, c, value)
            return
        raise UbhlRuntimeError(f"unsupported command: {c!r}")

    def _write(self, store: dict[str, Value], c, value: Value) -> None:
        lv = c.target
        if lv.idx is None:
            store[lv.base] = value
            return
        idx = int(eval_expr(lv.idx, store))
        arr = store[lv.base]
        if not isinstance(arr, ArrayVal):
            raise UbhlRuntimeError(f"{lv.base!r} is not an array")
        store[lv.base] = arr.set(idx, value)

    def _draw(self, d: DistExpr, store: dict[str, Value]) -> Value:
        args = [eval_expr(a, store) for a in d.args]
        if d.name == "bern":
            p = Fraction(args[0])
            if not 0 <= p <= 1:
                raise UbhlRuntimeError(f"bern parameter {p} outside [0,1]")
            return self.rng.bernoulli(p)
        if d.name == "unifint":
            return self.rng.unif_int(int(args[0]), int(args[1]))
        if d.name == "lap":
            eps = float(args[0])
            if eps <= 0:
                raise UbhlRuntimeError("lap scale must be positive")
            return lap_sample(eps, Fraction(args[1]), self.rng)
        raise UbhlRuntimeError(f"unknown distribution {d.name!r}")


def run_trial(program: Program, entry: str, arg: Value,
              adversaries: Mapping[str, AdversaryStrategy], seed: int,
              trial: int = 0, overrides: Optional[dict[str, Value]] = None,
              result_var: str = "res", loop_cap: int = 1_000_000) -> Memory:
    """One sampled execution; deterministic in (program, arg, seed, trial)."""
    proc = program.procs[entry]
    rng = TrialRng(seed, trial)
    interp = TrialInterpreter(program, adversaries, rng, loop_cap)
    store = initial_memory(program, overrides).to_dict()
    store[proc.arg] = arg
    interp.run(store, proc.body)
    store[result_var] = eval_expr(proc.ret, store)
    return Memory(store.items())


@dataclass
class EstimateReport:
    trials: int
    failures: int
    failure_rate: float
    clopper_pearson_upper_95: float
    seed: int
    params: dict

    def to_json(self) -> str:
        return json.dumps({
            "trials": self.trials,
            "failures": self.failures,
            "rate": self.failure_rate,
            "upper95": self.clopper_pearson_upper_95,
            "seed": self.seed,
            "params": self.params,
        }, sort_keys=True)


def _log_binom_cdf(k: int, n: int, p: float) -> float:
    """log Pr[X <= k] for X ~ Binomial(n, p)."""
    if p <= 0:
        return 0.0
    if p >= 1:
        return 0.0 if k >= n else -math.inf
    log_p = math.log(p)
    log_1p = math.log1p(-p)
    total = -math.inf
    for i in range(0, k + 1):
        term = (math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)
                + i * log_p + (n - i) * log_1p)
        if total == -math.inf:
            total = term
        else:
            hi, lo = max(total, term), min(total, term)
            total = hi + math.log1p(math.exp(lo - hi))
    return total


def clopper_pearson_upper(failures: int, trials: int, confidence: float = 0.95) -> float:
    """Exact one-sided binomial upper confidence bound."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if failures >= trials:
        return 1.0
    alpha = 1.0 - confidence
    lo, hi = failures / trials, 1.0
    for _ in range(80):
        mid = (lo + hi) / 2
        if _log_binom_cdf(failures, trials, mid) > math.log(alpha):
            lo = mid
        else:
            hi = mid
    return hi


def _count_chunk(args) -> int:
    (program, entry, arg, adversaries, bad, seed, start, count,
     overrides, result_var, env, loop_cap) = args
    from .evalexpr import eval_in_memory

    failures = 0
    for i in range(start, start + count):
        try:
            mem = run_trial(program, entry, arg, adversaries, seed, i,
                            overrides, result_var, loop_cap)
            if mem.error or bool(eval_in_memory(bad, mem, env)):
                failures += 1
        except (TrialAborted, UbhlRuntimeError):
            failures += 1
    return failures


def estimate_failure(program: Program, entry: str, arg: Value,
                     adversaries: Mapping[str, AdversaryStrategy],
                     bad: Expr, trials: int, seed: int,
                     env: Optional[dict[str, Value]] = None,
                     overrides: Optional[dict[str, Value]] = None,
                     result_var: str = "res", loop_cap: int = 1_000_000,
                     jobs: int = 1,
                     params: Optional[dict] = None) -> EstimateReport:
    """Monte Carlo estimate of the probability the `bad` assertion holds
    in the final memory. Aborted or erroring trials count as failures."""
    if jobs <= 1:
        failures = _count_chunk((program, entry, arg, dict(adversaries), bad,
                                 seed, 0, trials, overrides, result_var,
                                 env or {}, loop_cap))
    else:
        chunk = (trials + jobs - 1) // jobs
        tasks = []
        start = 0
        while start < trials:
            n = min(chunk, trials - start)
            tasks.append((program, entry, arg, dict(adversaries), bad, seed,
                          start, n, overrides, result_var, env or {}, loop_cap))
            start += n
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            failures = sum(pool.map(_count_chunk, tasks))
    rate = failures / trials
    return EstimateReport(
        trials=trials, failures=failures, failure_rate=rate,
        clopper_pearson_upper_95=clopper_pearson_upper(failures, trials),
        seed=seed, params=params or {})
