"""Runtime values and immutable memories.

All numerics are exact: ints stay ints, reals are Fractions. Arrays are
total maps with a per-type default, so reads never fail. Memories are
hashable so sub-distributions can key on them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Optional

from ..dp.queries import Database, Query
from ..lang.ast import (
    ArrayT, BoolT, DbT, IntT, QueryT, RealT, SetIntT, Type,
)

# language-level query/database values are the dp-layer structures
QueryVal = Query
DbVal = Database


@dataclass(frozen=True)
class ArrayVal:
    """Total map int -> value with a default."""
    default: Any
    items: tuple[tuple[int, Any], ...] = ()

    def get(self, idx: int) -> Any:
        for k, v in self.items:
            if k == idx:
                return v
        return self.default

    def set(self, idx: int, value: Any) -> "ArrayVal":
        m = dict(self.items)
        if value == self.default and idx not in m:
            return self
        m[idx] = value
        return ArrayVal(self.default, tuple(sorted(m.items())))


Value = Any  # bool | int | Fraction | frozenset[int] | ArrayVal | QueryVal | DbVal


def default_value(t: Type) -> Value:
    if isinstance(t, BoolT):
        return False
    if isinstance(t, IntT):
        return 0
    if isinstance(t, RealT):
        return Fraction(0)
    if isinstance(t, SetIntT):
        return frozenset()
    if isinstance(t, ArrayT):
        return ArrayVal(default_value(t.elem))
    if isinstance(t, QueryT):
        return Query(Fraction(0), ())
    if isinstance(t, DbT):
        return Database(())
    raise TypeError(f"no default for type {t}")


class Memory:
    """Immutable internal store; external stores are plain dicts owned
    by the trial runner (adversaries mutate them freely)."""

    __slots__ = ("_items", "_hash", "error")

    def __init__(self, items: Iterable[tuple[str, Value]] = (), error: bool = False):
        self._items = tuple(sorted(dict(items).items()))
        self.error = error
        self._hash: Optional[int] = None

    @staticmethod
    def error_memory() -> "Memory":
        return Memory((), error=True)

    def get(self, name: str) -> Value:
        for k, v in self._items:
            if k == name:
                return v
        raise KeyError(name)

    def has(self, name: str) -> bool:
        return any(k == name for k, _ in self._items)

    def set(self, name: str, value: Value) -> "Memory":
        d = dict(self._items)
        d[name] = value
        return Memory(d.items(), self.error)

    def to_dict(self) -> dict[str, Value]:
        return dict(self._items)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Memory) and self._items == other._items
                and self.error == other.error)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._items, self.error))
        return self._hash

    def __repr__(self) -> str:
        if self.error:
            return "Memory(<error>)"
        inner = ", ".join(f"{k}={v}" for k, v in self._items)
        return f"Memory({inner})"
