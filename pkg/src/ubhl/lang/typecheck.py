"""Static checks: expression typing, command typing, store separation.

The formal argument of a procedure is an ordinary program variable; its
type may be pinned with a `var` declaration and defaults to int. A
static pass enforces that it appears only in its own procedure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .ast import (
    ArrayT, Assign, BinOp, BOOL, BoolLit, BoolT, Call, Command, DB, DbT,
    DistExpr, Expr, ExtCall, FuncCall, If, Index, INT, IntT, LValue, NumLit,
    Program, Quant, QUERY, RangeDom, REAL, RealT, Sample, Seq, SetDom,
    SETINT, SetIntT, SetLit, Skip, SortDom, Store, Type, UnOp, Var, While,
    free_vars, is_numeric,
)


class UbhlTypeError(Exception):
    pass


class TypeMismatch(UbhlTypeError):
    pass


class UnboundVariable(UbhlTypeError):
    pass


class ExternalMemoryViolation(UbhlTypeError):
    pass


TypeEnv = dict[str, Type]

# builtin function signatures; size is overloaded (db or set<int>)
_FIXED_SIGS: dict[str, tuple[tuple[Type, ...], Type]] = {
    "evalQ": ((QUERY, DB), REAL),
    "invQ": ((QUERY,), QUERY),
    "negQ": ((QUERY,), QUERY),
    "error": ((QUERY, DB), QUERY),
    "pick": ((SETINT,), INT),
    "remove": ((SETINT, INT), SETINT),
    "isempty": ((SETINT,), BOOL),
    "setdiff": ((SETINT, SETINT), SETINT),
    "log": ((REAL,), REAL),
    "mwInit": ((REAL, INT, INT), DB),
    "mwStep": ((DB, QUERY, REAL, INT), DB),
    "potential": ((DB, DB), REAL),
}


def compatible(expected: Type, actual: Type) -> bool:
    if expected == actual:
        return True
    # widening: int where real is expected
    return isinstance(expected, RealT) and isinstance(actual, IntT)


def join_numeric(a: Type, b: Type) -> Type:
    if isinstance(a, RealT) or isinstance(b, RealT):
        return REAL
    return INT


def expr_type(e: Expr, env: TypeEnv, allow_quant: bool = False) -> Type:
    """Infer the type of an expression; raises on failure."""
    if isinstance(e, Var):
        if e.name not in env:
            raise UnboundVariable(f"unbound variable {e.name!r}")
        return env[e.name]
    if isinstance(e, BoolLit):
        return BOOL
    if isinstance(e, NumLit):
        return e.type
    if isinstance(e, SetLit):
        for x in e.elems:
            t = expr_type(x, env, allow_quant)
            if not isinstance(t, IntT):
                raise TypeMismatch(f"set literal element must be int, got {t}")
        return SETINT
    if isinstance(e, UnOp):
        t = expr_type(e.arg, env, allow_quant)
        if e.op == "!":
            if not isinstance(t, BoolT):
                raise TypeMismatch(f"'!' needs bool, got {t}")
            return BOOL
        if e.op == "-":
            if not is_numeric(t):
                raise TypeMismatch(f"unary '-' needs a number, got {t}")
            return t
        raise TypeMismatch(f"unknown unary op {e.op!r}")
    if isinstance(e, BinOp):
        if e.op in ("&&", "||", "==>", "<==>"):
            for side in (e.left, e.right):
                t = expr_type(side, env, allow_quant)
                if not isinstance(t, BoolT):
                    raise TypeMismatch(f"{e.op!r} needs bool operands, got {t}")
            return BOOL
        if e.op == "in":
            t1 = expr_type(e.left, env, allow_quant)
            t2 = expr_type(e.right, env, allow_quant)
            if not isinstance(t1, IntT) or not isinstance(t2, SetIntT):
                raise TypeMismatch(f"'in' needs int and set<int>, got {t1}, {t2}")
            return BOOL
        t1 = expr_type(e.left, env, allow_quant)
        t2 = expr_type(e.right, env, allow_quant)
        if e.op in ("+", "-", "*", "/"):
            if not is_numeric(t1) or not is_numeric(t2):
                raise TypeMismatch(f"{e.op!r} needs numbers, got {t1}, {t2}")
            if e.op == "/":
                return REAL
            return join_numeric(t1, t2)
        if e.op in ("<", "<=", ">", ">="):
            if not is_numeric(t1) or not is_numeric(t2):
                raise TypeMismatch(f"{e.op!r} needs numbers, got {t1}, {t2}")
            return BOOL
        if e.op in ("==", "!="):
            if not (compatible(t1, t2) or compatible(t2, t1)):
                raise TypeMismatch(f"cannot compare {t1} with {t2}")
            return BOOL
        raise TypeMismatch(f"unknown operator {e.op!r}")
    if isinstance(e, Index):
        t_arr = expr_type(e.arr, env, allow_quant)
        if not isinstance(t_arr, ArrayT):
            raise TypeMismatch(f"indexing needs an array, got {t_arr}")
        t_idx = expr_type(e.idx, env, allow_quant)
        if not isinstance(t_idx, IntT):
            raise TypeMismatch(f"array index must be int, got {t_idx}")
        return t_arr.elem
    if isinstance(e, Store):
        t_arr = expr_type(e.arr, env, allow_quant)
        if not isinstance(t_arr, ArrayT):
            raise TypeMismatch(f"store needs an array, got {t_arr}")
        t_idx = expr_type(e.idx, env, allow_quant)
        if not isinstance(t_idx, IntT):
            raise TypeMismatch(f"store index must be int, got {t_idx}")
        t_val = expr_type(e.value, env, allow_quant)
        if not compatible(t_arr.elem, t_val):
            raise TypeMismatch(f"store value {t_val} does not fit {t_arr}")
        return t_arr
    if isinstance(e, FuncCall):
        return _func_type(e, env, allow_quant)
    if isinstance(e, Quant):
        if not allow_quant:
            raise TypeMismatch("quantifiers are not allowed in program code")
        if isinstance(e.dom, SetDom):
            t_dom = expr_type(e.dom.set_expr, env, allow_quant)
            if not isinstance(t_dom, SetIntT):
                raise TypeMismatch(f"quantifier domain must be set<int>, got {t_dom}")
            var_t: Type = INT
        elif isinstance(e.dom, RangeDom):
            for b in (e.dom.lo, e.dom.hi):
                t_b = expr_type(b, env, allow_quant)
                if not is_numeric(t_b):
                    raise TypeMismatch(f"range bound must be numeric, got {t_b}")
            var_t = INT
        else:
            var_t = e.dom.sort
        inner = dict(env)
        inner[e.var] = var_t
        t_body = expr_type(e.body, inner, allow_quant)
        if not isinstance(t_body, BoolT):
            raise TypeMismatch(f"quantifier body must be bool, got {t_body}")
        return BOOL
    raise UbhlTypeError(f"unknown expression node: {e!r}")


def _func_type(e: FuncCall, env: TypeEnv, allow_quant: bool) -> Type:
    arg_ts = [expr_type(a, env, allow_quant) for a in e.args]
    if e.name == "size":
        if len(arg_ts) != 1 or not isinstance(arg_ts[0], (DbT, SetIntT)):
            raise TypeMismatch("size takes a db or set<int>")
        return INT
    if e.name == "abs":
        if len(arg_ts) != 1 or not is_numeric(arg_ts[0]):
            raise TypeMismatch("abs takes a number")
        return arg_ts[0]
    if e.name in ("min", "max"):
        if len(arg_ts) != 2 or not all(is_numeric(t) for t in arg_ts):
            raise TypeMismatch(f"{e.name} takes two numbers")
        return join_numeric(*arg_ts)
    sig = _FIXED_SIGS.get(e.name)
    if sig is None:
        raise UnboundVariable(f"unknown function {e.name!r}")
    params, ret = sig
    if len(arg_ts) != len(params):
        raise TypeMismatch(f"{e.name} expects {len(params)} arguments, got {len(arg_ts)}")
    for i, (p, a) in enumerate(zip(params, arg_ts)):
        if not compatible(p, a):
            raise TypeMismatch(f"{e.name} argument {i + 1}: expected {p}, got {a}")
    return ret


def dist_sig(d: DistExpr) -> tuple[tuple[Type, ...], Type]:
    """Parameter types and result type of a distribution constructor."""
    if d.name == "lap":
        return (REAL, REAL), REAL
    if d.name == "bern":
        return (REAL,), BOOL
    if d.name == "unifint":
        return (INT, INT), INT
    raise UbhlTypeError(f"unknown distribution {d.name!r}")


@dataclass
class TypedProgram:
    program: Program
    env: TypeEnv            # internal vars incl. procedure arguments
    ret_types: dict[str, Type]


def _lvalue_type(lv: LValue, env: TypeEnv) -> Type:
    if lv.base not in env:
        raise UnboundVariable(f"unbound variable {lv.base!r}")
    t = env[lv.base]
    if lv.idx is None:
        return t
    if not isinstance(t, ArrayT):
        raise TypeMismatch(f"{lv.base!r} is not an array")
    t_idx = expr_type(lv.idx, env)
    if not isinstance(t_idx, IntT):
        raise TypeMismatch(f"array index must be int, got {t_idx}")
    return t.elem


def _check_no_external(e: Expr, prog: Program) -> None:
    bad = free_vars(e) & set(prog.extvars)
    if bad:
        raise ExternalMemoryViolation(
            f"internal code touches external memory: {sorted(bad)}")


def typecheck(prog: Program) -> TypedProgram:
    """Check the whole program; raises the first error found."""
    env: TypeEnv = dict(prog.vars)
    for proc in prog.procs.values():
        env.setdefault(proc.arg, INT)

    ret_types: dict[str, Type] = {}
    for proc in prog.procs.values():
        _check_no_external(proc.ret, prog)
        ret_types[proc.name] = expr_type(proc.ret, env)

    # arg_f may appear only in the body (and return) of f
    for proc in prog.procs.values():
        if proc.arg in prog.vars:
            continue  # explicitly declared as an ordinary global
        for other in prog.procs.values():
            if other.name == proc.name:
                continue
            used = _cmd_vars(other.body) | free_vars(other.ret)
            if proc.arg in used:
                raise UbhlTypeError(
                    f"argument {proc.arg!r} of {proc.name!r} used in {other.name!r}")

    for proc in prog.procs.values():
        _check_command(proc.body, prog, env, ret_types)
    return TypedProgram(prog, env, ret_types)


def _cmd_vars(c: Command) -> set[str]:
    out: set[str] = set()
    if isinstance(c, Skip):
        return out
    if isinstance(c, Assign):
        out = {c.target.base} | free_vars(c.expr)
        if c.target.idx is not None:
            out |= free_vars(c.target.idx)
        return out
    if isinstance(c, Sample):
        out = {c.target.base}
        if c.target.idx is not None:
            out |= free_vars(c.target.idx)
        for a in c.dist.args:
            out |= free_vars(a)
        return out
    if isinstance(c, Seq):
        return _cmd_vars(c.first) | _cmd_vars(c.second)
    if isinstance(c, If):
        return free_vars(c.guard) | _cmd_vars(c.then) | _cmd_vars(c.els)
    if isinstance(c, While):
        return free_vars(c.guard) | _cmd_vars(c.body)
    if isinstance(c, Call):
        out = {c.target.base} | free_vars(c.arg)
        if c.target.idx is not None:
            out |= free_vars(c.target.idx)
        return out
    if isinstance(c, ExtCall):
        out = {c.target.base}
        if c.target.idx is not None:
            out |= free_vars(c.target.idx)
        for a in c.args:
            out |= free_vars(a)
        return out
    raise UbhlTypeError(f"unknown command node: {c!r}")


def _check_command(c: Command, prog: Program, env: TypeEnv,
                   ret_types: dict[str, Type]) -> None:
    if isinstance(c, Skip):
        return
    if isinstance(c, Assign):
        _check_no_external(c.expr, prog)
        if c.target.base in prog.extvars:
            raise ExternalMemoryViolation(
                f"internal code writes external variable {c.target.base!r}")
        t_lv = _lvalue_type(c.target, env)
        t_rhs = expr_type(c.expr, env)
        if not compatible(t_lv, t_rhs):
            raise TypeMismatch(f"cannot assign {t_rhs} to {c.target} : {t_lv}")
        return
    if isinstance(c, Sample):
        if c.target.base in prog.extvars:
            raise ExternalMemoryViolation(
                f"internal code writes external variable {c.target.base!r}")
        t_lv = _lvalue_type(c.target, env)
        params, result = dist_sig(c.dist)
        if len(c.dist.args) != len(params):
            raise TypeMismatch(
                f"{c.dist.name} expects {len(params)} parameters, got {len(c.dist.args)}")
        for i, (p, a) in enumerate(zip(params, c.dist.args)):
            _check_no_external(a, prog)
            t_a = expr_type(a, env)
            if not compatible(p, t_a):
                raise TypeMismatch(f"{c.dist.name} parameter {i + 1}: expected {p}, got {t_a}")
        if not compatible(t_lv, result):
            raise TypeMismatch(f"cannot sample {result} into {c.target} : {t_lv}")
        return
    if isinstance(c, Seq):
        _check_command(c.first, prog, env, ret_types)
        _check_command(c.second, prog, env, ret_types)
        return
    if isinstance(c, If):
        _check_no_external(c.guard, prog)
        t_g = expr_type(c.guard, env)
        if not isinstance(t_g, BoolT):
            raise TypeMismatch(f"if guard must be bool, got {t_g}")
        _check_command(c.then, prog, env, ret_types)
        _check_command(c.els, prog, env, ret_types)
        return
    if isinstance(c, While):
        _check_no_external(c.guard, prog)
        t_g = expr_type(c.guard, env)
        if not isinstance(t_g, BoolT):
            raise TypeMismatch(f"while guard must be bool, got {t_g}")
        _check_command(c.body, prog, env, ret_types)
        return
    if isinstance(c, Call):
        if c.proc not in prog.procs:
            raise UnboundVariable(f"unknown procedure {c.proc!r}")
        callee = prog.procs[c.proc]
        _check_no_external(c.arg, prog)
        t_arg = expr_type(c.arg, env)
        if not compatible(env[callee.arg], t_arg):
            raise TypeMismatch(
                f"call {c.proc}: argument expects {env[callee.arg]}, got {t_arg}")
        t_lv = _lvalue_type(c.target, env)
        if not compatible(t_lv, ret_types[c.proc]):
            raise TypeMismatch(
                f"call {c.proc}: returns {ret_types[c.proc]}, target is {t_lv}")
        return
    if isinstance(c, ExtCall):
        if c.ext not in prog.externs:
            raise UnboundVariable(f"unknown external procedure {c.ext!r}")
        decl = prog.externs[c.ext]
        if len(c.args) != len(decl.arg_types):
            raise TypeMismatch(
                f"external {c.ext} expects {len(decl.arg_types)} arguments")
        for i, (p, a) in enumerate(zip(decl.arg_types, c.args)):
            _check_no_external(a, prog)
            t_a = expr_type(a, env)
            if not compatible(p, t_a):
                raise TypeMismatch(f"external {c.ext} argument {i + 1}: expected {p}, got {t_a}")
        t_lv = _lvalue_type(c.target, env)
        if not compatible(t_lv, decl.ret_type):
            raise TypeMismatch(
                f"external {c.ext} returns {decl.ret_type}, target is {t_lv}")
        return
    raise UbhlTypeError(f"unknown command node: {c!r}")


def assertion_env(prog: Program, logicals: Optional[TypeEnv] = None,
                  extra: Optional[TypeEnv] = None) -> TypeEnv:
    """Typing environment for assertions: program vars + logical vars."""
    env: TypeEnv = dict(prog.vars)
    for proc in prog.procs.values():
        env.setdefault(proc.arg, INT)
    if logicals:
        env.update(logicals)
    if extra:
        env.update(extra)
    return env


def check_assertion(a: Expr, env: TypeEnv) -> None:
    t = expr_type(a, env, allow_quant=True)
    if not isinstance(t, BoolT):
        raise TypeMismatch(f"assertion must be bool, got {t}")
