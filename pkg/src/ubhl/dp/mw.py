"""Multiplicative-weights synthetic database and its potential.

The potential is the KL divergence between the normalized true
database and the synthetic distribution, which is nonnegative, at most
ln(X) from the uniform start, and drops by at least
eta*(evalQ(up,x)-evalQ(up,d))/n - eta^2 per update. The exact
definition is a reconstruction; the three properties above are the
contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .queries import Database, NotLinear, Query, eval_query

Num = Union[int, float, Fraction]


@dataclass(frozen=True)
class SynthDB:
    """Normalized weight vector over {1..X} at scale n."""
    weights: tuple[Fraction, ...]   # positive, sums to 1 exactly
    n: int

    def as_database(self) -> Database:
        return Database(tuple(self.n * w for w in self.weights))


def mw_init(eta: Num, universe: int, n: int) -> SynthDB:
    if universe < 2:
        raise ValueError("universe must have at least 2 elements")
    if n < 1:
        raise ValueError("database size must be at least 1")
    del eta  # the learning rate does not affect the uniform start
    w = Fraction(1, universe)
    return SynthDB((w,) * universe, n)


def mw_step(x: SynthDB, up: Query, eta: Num, n: int) -> SynthDB:
    """Multiplicatively shrink weight on elements the update query
    over-weights, then renormalize."""
    if not up.is_linear():
        raise NotLinear("MW update requires a linear query")
    if len(up.weights) != len(x.weights):
        raise ValueError("query dimension does not match synthetic database")
    eta_f = float(eta)
    scaled = [w * Fraction(math.exp(-eta_f * float(u))) for w, u in zip(x.weights, up.weights)]
    total = sum(scaled, Fraction(0))
    return SynthDB(tuple(s / total for s in scaled), n)


def potential(x: SynthDB, d: Database) -> float:
    """KL(normalized d || x); terms with zero true mass contribute 0."""
    size = d.size()
    if size <= 0:
        raise ValueError("potential needs a nonempty true database")
    if len(d.counts) != len(x.weights):
        raise ValueError("dimension mismatch")
    acc = 0.0
    for c, w in zip(d.counts, x.weights):
        if c == 0:
            continue
        dh = float(c / size)
        acc += dh * math.log(dh / float(w))
    return acc


def step_decrease_bound(x: SynthDB, up: Query, d: Database, eta: Num, n: int) -> float:
    """Lower bound the per-step potential drop is required to meet."""
    gap = float(eval_query(up, x.as_database()) - eval_query(up, d))
    eta_f = float(eta)
    return eta_f * gap / n - eta_f * eta_f


@dataclass(frozen=True)
class MWParams:
    """Derived parameter block for the online MW release mechanism."""
    alpha: float
    eps: float
    queries: int      # Q
    universe: int     # X
    n: int
    beta: float

    @property
    def eta(self) -> float:
        return self.alpha / (2 * self.n)

    @property
    def threshold(self) -> float:
        return 2 * self.alpha

    @property
    def gamma(self) -> float:
        return 4 * self.n * self.n * math.log(self.universe) / (self.alpha * self.alpha)

    @property
    def alpha_sv(self) -> float:
        return (24 * self.gamma / self.eps) * math.log(2 * (self.queries + 1) / self.beta)

    @property
    def alpha_lap(self) -> float:
        return (4 * self.gamma / self.eps) * math.log(2 * self.gamma / self.beta)


def mw_alpha_formulas(alpha: float, eps: float, queries: int, universe: int,
                      n: int, beta: float) -> tuple[float, float, float]:
    """(gamma, alpha_sv, alpha_lap) at a given alpha."""
    gamma = 4 * n * n * math.log(universe) / (alpha * alpha)
    alpha_sv = (24 * gamma / eps) * math.log(2 * (queries + 1) / beta)
    alpha_lap = (4 * gamma / eps) * math.log(2 * gamma / beta)
    return gamma, alpha_sv, alpha_lap


def solve_feasible_alpha(eps: float, queries: int, universe: int, n: int,
                         beta: float) -> float:
    """Smallest alpha with alpha >= max(alpha_sv, alpha_lap).

    Both requirement curves decrease in alpha, so f(alpha) =
    max(alpha_sv, alpha_lap) - alpha is strictly decreasing; bisect its
    unique root and round up a hair to keep the precondition strict.
    """

    def excess(alpha: float) -> float:
        _, a_sv, a_lap = mw_alpha_formulas(alpha, eps, queries, universe, n, beta)
        return max(a_sv, a_lap) - alpha

    lo, hi = 1e-6, 1.0
    while excess(hi) > 0:
        hi *= 2
        if hi > 1e12:
            raise ValueError("no feasible alpha below 1e12")
    for _ in range(200):
        mid = (lo + hi) / 2
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi * (1 + 1e-9)
