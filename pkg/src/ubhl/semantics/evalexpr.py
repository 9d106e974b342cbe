"""Evaluation of expressions and assertions over a value store.

The store is any mapping from names to values; assertion callers chain
a memory with a logical environment. Arithmetic is exact on rationals;
log and the MW potential produce floats converted back to exact
Fractions so results stay hashable and reproducible.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Mapping

from ..dp import mw as dpmw
from ..dp import queries as dpq
from ..lang.ast import (
    BinOp, BoolLit, Expr, FuncCall, Index, IntT, NumLit, Quant, SetDom,
    SetLit, SortDom, Store, UnOp, Var,
)
from .values import ArrayVal, Memory, Value


class UbhlRuntimeError(Exception):
    pass


class DivisionByZero(UbhlRuntimeError):
    pass


class UnboundVariableError(UbhlRuntimeError):
    pass


class UnboundedQuantifierAtRuntime(UbhlRuntimeError):
    pass


def _num(v: Value) -> Fraction:
    if isinstance(v, bool):
        raise UbhlRuntimeError("expected a number, got a bool")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, Fraction):
        return v
    raise UbhlRuntimeError(f"expected a number, got {v!r}")


def apply_func(name: str, args: list[Value]) -> Value:
    if name == "evalQ":
        return dpq.eval_query(args[0], args[1])
    if name == "invQ":
        return dpq.inv_query(args[0])
    if name == "negQ":
        return dpq.neg_query(args[0])
    if name == "error":
        return dpq.error_query(args[0], args[1])
    if name == "size":
        if isinstance(args[0], frozenset):
            return len(args[0])
        sz = dpq.db_size(args[0])
        return int(sz) if sz.denominator == 1 else sz
    if name == "pick":
        s = args[0]
        return min(s) if s else 0  # total: empty set picks the int default
    if name == "remove":
        return frozenset(x for x in args[0] if x != args[1])
    if name == "isempty":
        return len(args[0]) == 0
    if name == "setdiff":
        return frozenset(args[0]) - frozenset(args[1])
    if name == "abs":
        return abs(args[0])
    if name == "log":
        x = float(_num(args[0]))
        if x <= 0:
            raise UbhlRuntimeError(f"log of non-positive value {x}")
        return Fraction(math.log(x))
    if name == "min":
        return min(args[0], args[1])
    if name == "max":
        return max(args[0], args[1])
    if name == "mwInit":
        eta, x, n = args
        return dpmw.mw_init(eta, int(x), int(n)).as_database()
    if name == "mwStep":
        db, up, eta, n = args
        sdb = dpmw.SynthDB(tuple(c / db.size() for c in db.counts), int(n))
        return dpmw.mw_step(sdb, up, eta, int(n)).as_database()
    if name == "potential":
        x_db, d_db = args
        size = x_db.size()
        if size <= 0:
            raise UbhlRuntimeError("potential of an empty synthetic database")
        sdb = dpmw.SynthDB(tuple(c / size for c in x_db.counts), 1)
        return Fraction(dpmw.potential(sdb, d_db))
    raise UbhlRuntimeError(f"unknown function {name!r}")


def eval_expr(e: Expr, store: Mapping[str, Value]) -> Value:
    """Evaluate a quantifier-free program expression."""
    if isinstance(e, Var):
        try:
            return store[e.name]
        except KeyError:
            raise UnboundVariableError(f"unbound variable {e.name!r}") from None
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, NumLit):
        return int(e.value) if isinstance(e.type, IntT) else e.value
    if isinstance(e, SetLit):
        return frozenset(int(eval_expr(x, store)) for x in e.elems)
    if isinstance(e, UnOp):
        v = eval_expr(e.arg, store)
        if e.op == "!":
            return not v
        if e.op == "-":
            return -v
        raise UbhlRuntimeError(f"unknown unary op {e.op!r}")
    if isinstance(e, BinOp):
        if e.op == "&&":
            return bool(eval_expr(e.left, store)) and bool(eval_expr(e.right, store))
        if e.op == "||":
            return bool(eval_expr(e.left, store)) or bool(eval_expr(e.right, store))
        if e.op == "==>":
            return (not eval_expr(e.left, store)) or bool(eval_expr(e.right, store))
        if e.op == "<==>":
            return bool(eval_expr(e.left, store)) == bool(eval_expr(e.right, store))
        lv = eval_expr(e.left, store)
        rv = eval_expr(e.right, store)
        if e.op == "in":
            return lv in rv
        if e.op == "+":
            return lv + rv
        if e.op == "-":
            return lv - rv
        if e.op == "*":
            return lv * rv
        if e.op == "/":
            num, den = _num(lv), _num(rv)
            if den == 0:
                raise DivisionByZero("division by zero")
            return num / den
        if e.op == "<":
            return lv < rv
        if e.op == "<=":
            return lv <= rv
        if e.op == ">":
            return lv > rv
        if e.op == ">=":
            return lv >= rv
        if e.op == "==":
            return lv == rv
        if e.op == "!=":
            return lv != rv
        raise UbhlRuntimeError(f"unknown operator {e.op!r}")
    if isinstance(e, Index):
        arr = eval_expr(e.arr, store)
        idx = eval_expr(e.idx, store)
        if not isinstance(arr, ArrayVal):
            raise UbhlRuntimeError("indexing a non-array value")
        return arr.get(int(idx))
    if isinstance(e, Store):
        arr = eval_expr(e.arr, store)
        idx = eval_expr(e.idx, store)
        val = eval_expr(e.value, store)
        return arr.set(int(idx), val)
    if isinstance(e, FuncCall):
        args = [eval_expr(a, store) for a in e.args]
        return apply_func(e.name, args)
    if isinstance(e, Quant):
        return _eval_quant(e, store)
    raise UbhlRuntimeError(f"unknown expression node: {e!r}")


def _eval_quant(e: Quant, store: Mapping[str, Value]) -> bool:
    if isinstance(e.dom, SortDom):
        raise UnboundedQuantifierAtRuntime(
            f"cannot evaluate unbounded quantifier over {e.dom.sort}")
    if isinstance(e.dom, SetDom):
        domain = sorted(eval_expr(e.dom.set_expr, store))
    else:
        lo = eval_expr(e.dom.lo, store)
        hi = eval_expr(e.dom.hi, store)
        domain = list(range(math.ceil(lo), math.floor(hi) + 1))
    inner = dict(store)
    if e.kind == "forall":
        for v in domain:
            inner[e.var] = v
            if not eval_expr(e.body, inner):
                return False
        return True
    for v in domain:
        inner[e.var] = v
        if eval_expr(e.body, inner):
            return True
    return False


def eval_in_memory(e: Expr, mem: Memory, env: Mapping[str, Value] | None = None) -> Value:
    """Evaluate against a memory, with logical variables from `env`.

    Memory bindings shadow logical ones; the sentinel error memory
    satisfies every assertion's negation by convention, handled by
    callers that count failures.
    """
    store = dict(env) if env else {}
    store.update(mem.to_dict())
    return eval_expr(e, store)
