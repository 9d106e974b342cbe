"""Typed AST for the probabilistic imperative language.

Expressions are sample-free; sampling, procedure calls and external
(adversary) calls are commands. Assertions reuse the expression grammar,
extended with quantifiers, so substitution and evaluation are shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union


# ── Types ───────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Type:
    pass


@dataclass(frozen=True)
class BoolT(Type):
    def __str__(self) -> str:
        return "bool"


@dataclass(frozen=True)
class IntT(Type):
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class RealT(Type):
    def __str__(self) -> str:
        return "real"


@dataclass(frozen=True)
class QueryT(Type):
    def __str__(self) -> str:
        return "query"


@dataclass(frozen=True)
class DbT(Type):
    def __str__(self) -> str:
        return "db"


@dataclass(frozen=True)
class SetIntT(Type):
    def __str__(self) -> str:
        return "set<int>"


@dataclass(frozen=True)
class ArrayT(Type):
    elem: Type

    def __str__(self) -> str:
        return f"{self.elem}[]"


BOOL = BoolT()
INT = IntT()
REAL = RealT()
QUERY = QueryT()
DB = DbT()
SETINT = SetIntT()


def is_numeric(t: Type) -> bool:
    return isinstance(t, (IntT, RealT))


# ── Expressions (also the assertion term language) ─────────────────


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class NumLit(Expr):
    # integers carry IntT, decimals carry RealT; value is always exact
    value: Fraction
    type: Type = INT


@dataclass(frozen=True)
class SetLit(Expr):
    elems: tuple[Expr, ...]


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # + - * / < <= > >= == != && || ==> <==> in
    left: Expr
    right: Expr


@dataclass(frozen=True)
class UnOp(Expr):
    op: str  # ! -
    arg: Expr


@dataclass(frozen=True)
class Index(Expr):
    arr: Expr
    idx: Expr


@dataclass(frozen=True)
class Store(Expr):
    arr: Expr
    idx: Expr
    value: Expr


@dataclass(frozen=True)
class FuncCall(Expr):
    name: str
    args: tuple[Expr, ...]


# Quantifier domains: a finite set expression, an inclusive integer
# range, or a bare sort (prover-side only).
@dataclass(frozen=True)
class SetDom:
    set_expr: Expr


@dataclass(frozen=True)
class RangeDom:
    lo: Expr
    hi: Expr


@dataclass(frozen=True)
class SortDom:
    sort: Type


Domain = Union[SetDom, RangeDom, SortDom]


@dataclass(frozen=True)
class Quant(Expr):
    kind: str  # "forall" | "exists"
    var: str
    dom: Domain
    body: Expr


TRUE = BoolLit(True)
FALSE = BoolLit(False)

Assertion = Expr  # assertions are bool-typed expressions


# ── Commands ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class LValue:
    base: str
    idx: Optional[Expr] = None  # None for plain variables

    def __str__(self) -> str:
        if self.idx is None:
            return self.base
        return f"{self.base}[{pretty_expr(self.idx)}]"


@dataclass(frozen=True)
class DistExpr:
    name: str  # lap | bern | unifint
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Command:
    pass


@dataclass(frozen=True)
class Skip(Command):
    pass


@dataclass(frozen=True)
class Assign(Command):
    target: LValue
    expr: Expr


@dataclass(frozen=True)
class Sample(Command):
    target: LValue
    dist: DistExpr


@dataclass(frozen=True)
class Seq(Command):
    first: Command
    second: Command


@dataclass(frozen=True)
class If(Command):
    guard: Expr
    then: Command
    els: Command


@dataclass(frozen=True)
class While(Command):
    guard: Expr
    body: Command


@dataclass(frozen=True)
class Call(Command):
    target: LValue
    proc: str
    arg: Expr


@dataclass(frozen=True)
class ExtCall(Command):
    target: LValue
    ext: str
    args: tuple[Expr, ...]


# Instrumented forms produced by the Hoare embedding; never emitted by
# the parser.
@dataclass(frozen=True)
class Havoc(Command):
    target: LValue


@dataclass(frozen=True)
class Assume(Command):
    assertion: Expr


@dataclass(frozen=True)
class GhostAdd(Command):
    ghost: str
    amount: Expr


# ── Programs ────────────────────────────────────────────────────────


@dataclass(frozen=True)
class Procedure:
    name: str
    arg: str
    body: Command
    ret: Expr


@dataclass(frozen=True)
class ExternDecl:
    name: str
    arg_types: tuple[Type, ...]
    ret_type: Type


@dataclass
class Program:
    procs: dict[str, Procedure] = field(default_factory=dict)
    externs: dict[str, ExternDecl] = field(default_factory=dict)
    vars: dict[str, Type] = field(default_factory=dict)       # internal store
    extvars: dict[str, Type] = field(default_factory=dict)    # external store

    def proc_order(self) -> list[str]:
        return list(self.procs)


# ── Free variables and substitution ─────────────────────────────────


def free_vars(e: Expr) -> set[str]:
    """Free variable names of an expression or assertion."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, (BoolLit, NumLit)):
        return set()
    if isinstance(e, SetLit):
        out: set[str] = set()
        for x in e.elems:
            out |= free_vars(x)
        return out
    if isinstance(e, BinOp):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, UnOp):
        return free_vars(e.arg)
    if isinstance(e, Index):
        return free_vars(e.arr) | free_vars(e.idx)
    if isinstance(e, Store):
        return free_vars(e.arr) | free_vars(e.idx) | free_vars(e.value)
    if isinstance(e, FuncCall):
        out = set()
        for x in e.args:
            out |= free_vars(x)
        return out
    if isinstance(e, Quant):
        inner = free_vars(e.body) - {e.var}
        if isinstance(e.dom, SetDom):
            inner |= free_vars(e.dom.set_expr)
        elif isinstance(e.dom, RangeDom):
            inner |= free_vars(e.dom.lo) | free_vars(e.dom.hi)
        return inner
    raise TypeError(f"unknown expression node: {e!r}")


_FRESH_COUNTER = [0]


def fresh_name(base: str, avoid: set[str]) -> str:
    if base not in avoid:
        return base
    while True:
        _FRESH_COUNTER[0] += 1
        cand = f"{base}_{_FRESH_COUNTER[0]}"
        if cand not in avoid:
            return cand


def subst_expr(e: Expr, name: str, repl: Expr) -> Expr:
    """Capture-free substitution of `repl` for the variable `name`."""
    if isinstance(e, Var):
        return repl if e.name == name else e
    if isinstance(e, (BoolLit, NumLit)):
        return e
    if isinstance(e, SetLit):
        return SetLit(tuple(subst_expr(x, name, repl) for x in e.elems))
    if isinstance(e, BinOp):
        return BinOp(e.op, subst_expr(e.left, name, repl), subst_expr(e.right, name, repl))
    if isinstance(e, UnOp):
        return UnOp(e.op, subst_expr(e.arg, name, repl))
    if isinstance(e, Index):
        return Index(subst_expr(e.arr, name, repl), subst_expr(e.idx, name, repl))
    if isinstance(e, Store):
        return Store(subst_expr(e.arr, name, repl), subst_expr(e.idx, name, repl),
                     subst_expr(e.value, name, repl))
    if isinstance(e, FuncCall):
        return FuncCall(e.name, tuple(subst_expr(x, name, repl) for x in e.args))
    if isinstance(e, Quant):
        dom = e.dom
        if isinstance(dom, SetDom):
            dom = SetDom(subst_expr(dom.set_expr, name, repl))
        elif isinstance(dom, RangeDom):
            dom = RangeDom(subst_expr(dom.lo, name, repl), subst_expr(dom.hi, name, repl))
        if e.var == name:
            return Quant(e.kind, e.var, dom, e.body)
        if e.var in free_vars(repl):
            nv = fresh_name(e.var, free_vars(repl) | free_vars(e.body) | {name})
            body = subst_expr(e.body, e.var, Var(nv))
            return Quant(e.kind, nv, dom, subst_expr(body, name, repl))
        return Quant(e.kind, e.var, dom, subst_expr(e.body, name, repl))
    raise TypeError(f"unknown expression node: {e!r}")


def subst_lvalue(a: Expr, lv: LValue, value: Expr) -> Expr:
    """Substitute the effect of writing `value` into `lv` (forward image).

    Plain target x: a[value/x]. Array target arr[i]: every free
    occurrence of arr is replaced by store(arr, i, value), with the
    index read in the pre-state.
    """
    if lv.idx is None:
        return subst_expr(a, lv.base, value)
    return subst_expr(a, lv.base, Store(Var(lv.base), lv.idx, value))


# ── Modified variables ──────────────────────────────────────────────


def modified_vars(c: Command, program: Optional[Program] = None) -> set[str]:
    """Sound over-approximation of variables written by `c`.

    Internal procedure calls recurse into the callee (including its
    formal argument). External calls write only their target (the
    adversary owns a separate store).
    """
    if isinstance(c, Skip):
        return set()
    if isinstance(c, (Assign, Sample, Havoc)):
        return {c.target.base}
    if isinstance(c, Seq):
        return modified_vars(c.first, program) | modified_vars(c.second, program)
    if isinstance(c, If):
        return modified_vars(c.then, program) | modified_vars(c.els, program)
    if isinstance(c, While):
        return modified_vars(c.body, program)
    if isinstance(c, Call):
        out = {c.target.base}
        if program is not None and c.proc in program.procs:
            p = program.procs[c.proc]
            out |= {p.arg} | modified_vars(p.body, program)
        return out
    if isinstance(c, ExtCall):
        return {c.target.base}
    if isinstance(c, Assume):
        return set()
    if isinstance(c, GhostAdd):
        return {c.ghost}
    raise TypeError(f"unknown command node: {c!r}")


def sample_sites(c: Command, path: tuple[str, ...] = ()) -> Iterator[tuple[tuple[str, ...], Sample]]:
    """Yield (path, node) for every Sample in syntactic order."""
    if isinstance(c, Sample):
        yield path, c
    elif isinstance(c, Seq):
        yield from sample_sites(c.first, path + ("1",))
        yield from sample_sites(c.second, path + ("2",))
    elif isinstance(c, If):
        yield from sample_sites(c.then, path + ("t",))
        yield from sample_sites(c.els, path + ("e",))
    elif isinstance(c, While):
        yield from sample_sites(c.body, path + ("b",))


# ── Pretty printer ──────────────────────────────────────────────────

_PREC = {
    "<==>": 1, "==>": 2, "||": 3, "&&": 4,
    "==": 6, "!=": 6, "<": 6, "<=": 6, ">": 6, ">=": 6, "in": 6,
    "+": 7, "-": 7, "*": 8, "/": 8,
}


def _num_str(v: Fraction, t: Type) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    if isinstance(t, RealT):
        # keep decimals as decimals when they round-trip exactly
        f = float(v)
        if Fraction(str(f)) == v:
            return str(f)
    return f"({v.numerator}/{v.denominator})"


def pretty_expr(e: Expr, prec: int = 0) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, NumLit):
        return _num_str(e.value, e.type)
    if isinstance(e, SetLit):
        return "{" + ", ".join(pretty_expr(x) for x in e.elems) + "}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        s = f"{pretty_expr(e.left, p)} {e.op} {pretty_expr(e.right, p + 1)}"
        return f"({s})" if p < prec else s
    if isinstance(e, UnOp):
        inner = pretty_expr(e.arg, 9)
        return f"{e.op}{inner}"
    if isinstance(e, Index):
        return f"{pretty_expr(e.arr, 10)}[{pretty_expr(e.idx)}]"
    if isinstance(e, Store):
        return f"store({pretty_expr(e.arr)}, {pretty_expr(e.idx)}, {pretty_expr(e.value)})"
    if isinstance(e, FuncCall):
        return f"{e.name}(" + ", ".join(pretty_expr(a) for a in e.args) + ")"
    if isinstance(e, Quant):
        if isinstance(e.dom, SetDom):
            dom = f"in {pretty_expr(e.dom.set_expr)}"
        elif isinstance(e.dom, RangeDom):
            dom = f"in {pretty_expr(e.dom.lo, 8)} .. {pretty_expr(e.dom.hi, 8)}"
        else:
            dom = f": {e.dom.sort}"
        s = f"{e.kind} {e.var} {dom} . {pretty_expr(e.body)}"
        return f"({s})" if prec > 0 else s
    raise TypeError(f"unknown expression node: {e!r}")


def _pretty_cmd(c: Command, ind: str) -> list[str]:
    if isinstance(c, Skip):
        return [ind + "skip;"]
    if isinstance(c, Assign):
        return [f"{ind}{c.target} <- {pretty_expr(c.expr)};"]
    if isinstance(c, Sample):
        args = ", ".join(pretty_expr(a) for a in c.dist.args)
        return [f"{ind}{c.target} <$ {c.dist.name}({args});"]
    if isinstance(c, Seq):
        return _pretty_cmd(c.first, ind) + _pretty_cmd(c.second, ind)
    if isinstance(c, If):
        out = [f"{ind}if ({pretty_expr(c.guard)}) {{"]
        out += _pretty_cmd(c.then, ind + "  ")
        if isinstance(c.els, Skip):
            out.append(ind + "}")
        else:
            out.append(ind + "} else {")
            out += _pretty_cmd(c.els, ind + "  ")
            out.append(ind + "}")
        return out
    if isinstance(c, While):
        out = [f"{ind}while ({pretty_expr(c.guard)}) {{"]
        out += _pretty_cmd(c.body, ind + "  ")
        out.append(ind + "}")
        return out
    if isinstance(c, Call):
        return [f"{ind}{c.target} <- {c.proc}({pretty_expr(c.arg)});"]
    if isinstance(c, ExtCall):
        args = ", ".join(pretty_expr(a) for a in c.args)
        return [f"{ind}{c.target} <@ {c.ext}({args});"]
    if isinstance(c, Havoc):
        return [f"{ind}havoc {c.target};"]
    if isinstance(c, Assume):
        return [f"{ind}assume {pretty_expr(c.assertion)};"]
    if isinstance(c, GhostAdd):
        return [f"{ind}{c.ghost} <- {c.ghost} + {pretty_expr(c.amount)};"]
    raise TypeError(f"unknown command node: {c!r}")


def pretty_command(c: Command, indent: str = "") -> str:
    return "\n".join(_pretty_cmd(c, indent))


def pretty_program(p: Program) -> str:
    lines: list[str] = []
    for name, t in p.vars.items():
        lines.append(f"var {name} : {t};")
    for name, t in p.extvars.items():
        lines.append(f"extvar {name} : {t};")
    for ext in p.externs.values():
        args = ", ".join(str(t) for t in ext.arg_types)
        lines.append(f"extern {ext.name}({args}) : {ext.ret_type};")
    for proc in p.procs.values():
        lines.append("")
        lines.append(f"proc {proc.name}({proc.arg}) {{")
        lines.extend(_pretty_cmd(proc.body, "  "))
        lines.append(f"}} return {pretty_expr(proc.ret)}")
    return "\n".join(lines) + "\n"


def seq_of(cmds: list[Command]) -> Command:
    """Right-nested sequence of a statement list."""
    if not cmds:
        return Skip()
    out = cmds[-1]
    for c in reversed(cmds[:-1]):
        out = Seq(c, out)
    return out
