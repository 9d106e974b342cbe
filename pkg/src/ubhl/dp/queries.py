"""Count-vector databases and affine queries, with the query algebra.

The algebra satisfies, in exact rational arithmetic:
    evalQ(invQ(q), d)        = -evalQ(q, d)
    evalQ(negQ(q), d)        = size(d) - evalQ(q, d)      (q linear)
    evalQ(error(q, d1), d2)  = evalQ(q, d1) - evalQ(q, d2)
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

Num = Union[int, Fraction]


class DimensionMismatch(Exception):
    pass


class NotLinear(Exception):
    pass


class EmptyDatabase(Exception):
    pass


@dataclass(frozen=True)
class Query:
    """Affine query over a universe of size X: offset + <weights, counts>."""
    offset: Fraction
    weights: tuple[Fraction, ...]

    def is_linear(self) -> bool:
        return self.offset == 0 and all(0 <= w <= 1 for w in self.weights)


@dataclass(frozen=True)
class Database:
    """Count vector over {1..X}; synthetic databases may carry
    fractional counts."""
    counts: tuple[Fraction, ...]

    def size(self) -> Fraction:
        return sum(self.counts, Fraction(0))


def make_query(weights: Sequence[Num], offset: Num = 0) -> Query:
    return Query(Fraction(offset), tuple(Fraction(w) for w in weights))


def make_db(counts: Sequence[Num]) -> Database:
    return Database(tuple(Fraction(c) for c in counts))


def db_zero(universe: int) -> Database:
    return Database((Fraction(0),) * universe)


def db_add(a: Database, b: Database) -> Database:
    if len(a.counts) != len(b.counts):
        raise DimensionMismatch("database universes differ")
    return Database(tuple(x + y for x, y in zip(a.counts, b.counts)))


def db_size(d: Database) -> Fraction:
    return d.size()


def eval_query(q: Query, d: Database) -> Fraction:
    if len(q.weights) != len(d.counts):
        raise DimensionMismatch(
            f"query dimension {len(q.weights)} vs database {len(d.counts)}")
    acc = q.offset
    for w, c in zip(q.weights, d.counts):
        acc += w * c
    return acc


def inv_query(q: Query) -> Query:
    return Query(-q.offset, tuple(-w for w in q.weights))


def neg_query(q: Query) -> Query:
    if not q.is_linear():
        raise NotLinear("negQ requires a linear query (offset 0, weights in [0,1])")
    return Query(Fraction(0), tuple(1 - w for w in q.weights))


def error_query(q: Query, d1: Database) -> Query:
    # offset is the first evaluation with q's own offset removed, so the
    # third axiom holds for affine queries as well as linear ones
    if len(q.weights) != len(d1.counts):
        raise DimensionMismatch("query dimension does not match database")
    return Query(eval_query(q, d1) - q.offset, tuple(-w for w in q.weights))


# ── columnar text format ────────────────────────────────────────────
# line 1: universe size X
# line 2: X counts (the database)
# each further line: X weights (one query each, offset 0)


def load_db_text(text: str) -> tuple[Database, list[Query]]:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if len(lines) < 2:
        raise ValueError("expected universe size line and counts line")
    x = int(lines[0])
    counts = [Fraction(tok) for tok in lines[1].split()]
    if len(counts) != x:
        raise ValueError(f"expected {x} counts, got {len(counts)}")
    queries = []
    for ln in lines[2:]:
        ws = [Fraction(tok) for tok in ln.split()]
        if len(ws) != x:
            raise ValueError(f"expected {x} weights, got {len(ws)}")
        queries.append(Query(Fraction(0), tuple(ws)))
    return Database(tuple(counts)), queries


def dump_db_text(d: Database, queries: Sequence[Query] = ()) -> str:
    lines = [str(len(d.counts)), " ".join(str(c) for c in d.counts)]
    for q in queries:
        lines.append(" ".join(str(w) for w in q.weights))
    return "\n".join(lines) + "\n"
