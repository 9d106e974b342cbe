"""Hand-rolled lexer and recursive-descent parser.

One grammar serves program files (.ubhl), assertions inside proof
scripts, and index expressions; quantifiers are rejected later where
they are not allowed (program code).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .ast import (
    ArrayT, Assign, BinOp, BOOL, BoolLit, Call, Command, DB, DistExpr, Expr,
    ExtCall, ExternDecl, FuncCall, If, Index, INT, LValue, NumLit, Procedure,
    Program, Quant, QUERY, RangeDom, REAL, Sample, Seq, SetDom, SETINT,
    SetLit, Skip, SortDom, Store, Type, UnOp, Var, While, seq_of,
)

KEYWORDS = {
    "proc", "extern", "var", "extvar", "return", "skip", "if", "else",
    "while", "true", "false", "forall", "exists", "in", "store",
    "bool", "int", "real", "query", "db", "set",
}

DIST_NAMES = {"lap", "bern", "unifint"}

# expression-level builtin functions: name -> arity (None = variadic >= 1)
BUILTIN_FUNCS = {
    "evalQ": 2, "invQ": 1, "negQ": 1, "error": 2, "size": 1,
    "pick": 1, "remove": 2, "isempty": 1, "setdiff": 2,
    "abs": 1, "log": 1, "min": 2, "max": 2,
    "mwInit": 3, "mwStep": 4, "potential": 2,
}


class UbhlSyntaxError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


class DuplicateProcedure(UbhlSyntaxError):
    pass


@dataclass
class Token:
    kind: str   # ident, num, sym, eof
    text: str
    line: int
    col: int


_SYMBOLS = [
    "<==>", "==>", "<$", "<@", "<-", "<=", ">=", "==", "!=", "&&", "||",
    "..", "(", ")", "{", "}", "[", "]", ",", ";", ":", ".", "+", "-", "*",
    "/", "<", ">", "!", "=",
]


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isdigit():
            start = i
            while i < n and text[i].isdigit():
                i += 1
            # a decimal point followed by a digit (not "..")
            if i < n and text[i] == "." and i + 1 < n and text[i + 1].isdigit():
                i += 1
                while i < n and text[i].isdigit():
                    i += 1
            toks.append(Token("num", text[start:i], line, col))
            col += i - start
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            toks.append(Token("ident", text[start:i], line, col))
            col += i - start
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                toks.append(Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise UbhlSyntaxError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.pos = 0

    # ── token helpers ──

    def peek(self) -> Token:
        return self.toks[self.pos]

    def next(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def at_sym(self, s: str) -> bool:
        t = self.peek()
        return t.kind == "sym" and t.text == s

    def at_word(self, w: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.text == w

    def accept_sym(self, s: str) -> bool:
        if self.at_sym(s):
            self.pos += 1
            return True
        return False

    def accept_word(self, w: str) -> bool:
        if self.at_word(w):
            self.pos += 1
            return True
        return False

    def expect_sym(self, s: str) -> Token:
        t = self.peek()
        if not self.at_sym(s):
            raise UbhlSyntaxError(f"expected {s!r}, found {t.text!r}", t.line, t.col)
        return self.next()

    def expect_word(self, w: str) -> Token:
        t = self.peek()
        if not self.at_word(w):
            raise UbhlSyntaxError(f"expected {w!r}, found {t.text!r}", t.line, t.col)
        return self.next()

    def expect_ident(self) -> Token:
        t = self.peek()
        if t.kind != "ident" or t.text in KEYWORDS:
            raise UbhlSyntaxError(f"expected identifier, found {t.text!r}", t.line, t.col)
        return self.next()

    def err(self, msg: str) -> UbhlSyntaxError:
        t = self.peek()
        return UbhlSyntaxError(msg, t.line, t.col)

    # ── types ──

    def parse_type(self) -> Type:
        t = self.peek()
        if self.accept_word("bool"):
            base: Type = BOOL
        elif self.accept_word("int"):
            base = INT
        elif self.accept_word("real"):
            base = REAL
        elif self.accept_word("query"):
            base = QUERY
        elif self.accept_word("db"):
            base = DB
        elif self.accept_word("set"):
            self.expect_sym("<")
            self.expect_word("int")
            self.expect_sym(">")
            base = SETINT
        else:
            raise UbhlSyntaxError(f"expected type, found {t.text!r}", t.line, t.col)
        while self.at_sym("["):
            self.next()
            self.expect_sym("]")
            base = ArrayT(base)
        return base

    # ── expressions ──
    # precedence: <==>  ==>  ||  &&  !  cmp/in  addsub  muldiv  unary  postfix

    def parse_expr(self) -> Expr:
        return self.parse_iff()

    def parse_iff(self) -> Expr:
        left = self.parse_implies()
        while self.at_sym("<==>"):
            self.next()
            left = BinOp("<==>", left, self.parse_implies())
        return left

    def parse_implies(self) -> Expr:
        left = self.parse_or()
        if self.at_sym("==>"):
            self.next()
            return BinOp("==>", left, self.parse_implies())  # right assoc
        return left

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.at_sym("||"):
            self.next()
            left = BinOp("||", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_cmp()
        while self.at_sym("&&"):
            self.next()
            left = BinOp("&&", left, self.parse_cmp())
        return left

    def parse_cmp(self) -> Expr:
        left = self.parse_add()
        for op in ("<=", ">=", "==", "!=", "<", ">"):
            if self.at_sym(op):
                self.next()
                return BinOp(op, left, self.parse_add())
        if self.at_word("in"):
            self.next()
            return BinOp("in", left, self.parse_add())
        return left

    def parse_add(self) -> Expr:
        left = self.parse_mul()
        while self.at_sym("+") or self.at_sym("-"):
            op = self.next().text
            left = BinOp(op, left, self.parse_mul())
        return left

    def parse_mul(self) -> Expr:
        left = self.parse_unary()
        while self.at_sym("*") or self.at_sym("/"):
            op = self.next().text
            left = BinOp(op, left, self.parse_unary())
        return left

    def parse_unary(self) -> Expr:
        if self.accept_sym("!"):
            return UnOp("!", self.parse_unary())
        if self.accept_sym("-"):
            return UnOp("-", self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        e = self.parse_atom()
        while self.at_sym("["):
            self.next()
            idx = self.parse_expr()
            self.expect_sym("]")
            e = Index(e, idx)
        return e

    def parse_atom(self) -> Expr:
        t = self.peek()
        if self.accept_sym("("):
            e = self.parse_expr()
            self.expect_sym(")")
            return e
        if self.accept_sym("{"):
            elems: list[Expr] = []
            if not self.at_sym("}"):
                elems.append(self.parse_expr())
                while self.accept_sym(","):
                    elems.append(self.parse_expr())
            self.expect_sym("}")
            return SetLit(tuple(elems))
        if t.kind == "num":
            self.next()
            if "." in t.text:
                return NumLit(Fraction(t.text), REAL)
            return NumLit(Fraction(int(t.text)), INT)
        if self.accept_word("true"):
            return BoolLit(True)
        if self.accept_word("false"):
            return BoolLit(False)
        if self.at_word("forall") or self.at_word("exists"):
            return self.parse_quant()
        if self.accept_word("store"):
            self.expect_sym("(")
            arr = self.parse_expr()
            self.expect_sym(",")
            idx = self.parse_expr()
            self.expect_sym(",")
            val = self.parse_expr()
            self.expect_sym(")")
            return Store(arr, idx, val)
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.next()
            if self.at_sym("("):
                self.next()
                args: list[Expr] = []
                if not self.at_sym(")"):
                    args.append(self.parse_expr())
                    while self.accept_sym(","):
                        args.append(self.parse_expr())
                self.expect_sym(")")
                return FuncCall(t.text, tuple(args))
            return Var(t.text)
        raise UbhlSyntaxError(f"expected expression, found {t.text!r}", t.line, t.col)

    def parse_quant(self) -> Expr:
        kind = self.next().text
        var = self.expect_ident().text
        if self.accept_sym(":"):
            dom: SetDom | RangeDom | SortDom = SortDom(self.parse_type())
        else:
            self.expect_word("in")
            first = self.parse_add()
            if self.accept_sym(".."):
                hi = self.parse_add()
                dom = RangeDom(first, hi)
            else:
                dom = SetDom(first)
        self.expect_sym(".")
        body = self.parse_expr()
        return Quant(kind, var, dom, body)

    # ── commands ──

    def parse_lvalue(self) -> LValue:
        base = self.expect_ident().text
        if self.accept_sym("["):
            idx = self.parse_expr()
            self.expect_sym("]")
            return LValue(base, idx)
        return LValue(base)

    def parse_block(self) -> Command:
        self.expect_sym("{")
        stmts: list[Command] = []
        while not self.at_sym("}"):
            stmts.append(self.parse_stmt())
        self.expect_sym("}")
        return seq_of(stmts)

    def parse_stmt(self) -> Command:
        if self.accept_word("skip"):
            self.expect_sym(";")
            return Skip()
        if self.at_word("if"):
            self.next()
            self.expect_sym("(")
            guard = self.parse_expr()
            self.expect_sym(")")
            then = self.parse_block()
            els: Command = Skip()
            if self.accept_word("else"):
                els = self.parse_block()
            return If(guard, then, els)
        if self.at_word("while"):
            self.next()
            self.expect_sym("(")
            guard = self.parse_expr()
            self.expect_sym(")")
            body = self.parse_block()
            return While(guard, body)
        lv = self.parse_lvalue()
        if self.accept_sym("<$"):
            name_tok = self.expect_ident()
            if name_tok.text not in DIST_NAMES:
                raise UbhlSyntaxError(
                    f"unknown distribution constructor {name_tok.text!r}",
                    name_tok.line, name_tok.col)
            self.expect_sym("(")
            args: list[Expr] = []
            if not self.at_sym(")"):
                args.append(self.parse_expr())
                while self.accept_sym(","):
                    args.append(self.parse_expr())
            self.expect_sym(")")
            self.expect_sym(";")
            return Sample(lv, DistExpr(name_tok.text, tuple(args)))
        if self.accept_sym("<@"):
            name_tok = self.expect_ident()
            self.expect_sym("(")
            args = []
            if not self.at_sym(")"):
                args.append(self.parse_expr())
                while self.accept_sym(","):
                    args.append(self.parse_expr())
            self.expect_sym(")")
            self.expect_sym(";")
            return ExtCall(lv, name_tok.text, tuple(args))
        if self.accept_sym("<-"):
            if self.at_sym(";"):
                raise self.err("missing right-hand side of assignment")
            expr = self.parse_expr()
            self.expect_sym(";")
            return Assign(lv, expr)
        raise self.err("expected '<-', '<$' or '<@' after lvalue")

    # ── programs ──

    def parse_program(self) -> Program:
        prog = Program()
        while True:
            if self.accept_word("var"):
                name = self.expect_ident()
                self.expect_sym(":")
                t = self.parse_type()
                self.expect_sym(";")
                if name.text in prog.vars or name.text in prog.extvars:
                    raise UbhlSyntaxError(
                        f"duplicate variable {name.text!r}", name.line, name.col)
                prog.vars[name.text] = t
            elif self.accept_word("extvar"):
                name = self.expect_ident()
                self.expect_sym(":")
                t = self.parse_type()
                self.expect_sym(";")
                if name.text in prog.vars or name.text in prog.extvars:
                    raise UbhlSyntaxError(
                        f"duplicate variable {name.text!r}", name.line, name.col)
                prog.extvars[name.text] = t
            elif self.accept_word("extern"):
                name = self.expect_ident()
                self.expect_sym("(")
                arg_types: list[Type] = []
                if not self.at_sym(")"):
                    arg_types.append(self.parse_type())
                    while self.accept_sym(","):
                        arg_types.append(self.parse_type())
                self.expect_sym(")")
                self.expect_sym(":")
                ret = self.parse_type()
                self.expect_sym(";")
                if name.text in prog.externs:
                    raise UbhlSyntaxError(
                        f"duplicate external procedure {name.text!r}", name.line, name.col)
                prog.externs[name.text] = ExternDecl(name.text, tuple(arg_types), ret)
            elif self.at_word("proc"):
                break
            else:
                t = self.peek()
                raise UbhlSyntaxError(
                    f"expected declaration or 'proc', found {t.text!r}", t.line, t.col)
        while self.at_word("proc"):
            tok = self.next()
            name = self.expect_ident()
            self.expect_sym("(")
            arg = self.expect_ident().text
            self.expect_sym(")")
            body = self.parse_block()
            self.expect_word("return")
            ret = self.parse_expr()
            self.accept_sym(";")
            if name.text in prog.procs:
                raise DuplicateProcedure(
                    f"duplicate procedure {name.text!r}", name.line, name.col)
            prog.procs[name.text] = Procedure(name.text, arg, body, ret)
        t = self.peek()
        if t.kind != "eof":
            raise UbhlSyntaxError(f"unexpected trailing input {t.text!r}", t.line, t.col)
        if not prog.procs:
            raise UbhlSyntaxError("program has no procedures", t.line, t.col)
        return _resolve_calls(prog)


def _resolve_calls(prog: Program) -> Program:
    """Rewrite `x <- f(e)` into Call when f is an internal procedure."""

    def walk(c: Command) -> Command:
        if isinstance(c, Assign) and isinstance(c.expr, FuncCall) and c.expr.name in prog.procs:
            if len(c.expr.args) != 1:
                raise UbhlSyntaxError(
                    f"internal procedure {c.expr.name!r} takes exactly one argument", 0, 0)
            return Call(c.target, c.expr.name, c.expr.args[0])
        if isinstance(c, Seq):
            return Seq(walk(c.first), walk(c.second))
        if isinstance(c, If):
            return If(c.guard, walk(c.then), walk(c.els))
        if isinstance(c, While):
            return While(c.guard, walk(c.body))
        return c

    for name, proc in list(prog.procs.items()):
        prog.procs[name] = Procedure(proc.name, proc.arg, walk(proc.body), proc.ret)
    return prog


def parse_program(text: str) -> Program:
    return Parser(text).parse_program()


_EXPR_CACHE: dict[str, Expr] = {}


def parse_expr(text: str) -> Expr:
    # expression trees are immutable, so sharing parses is safe; proof
    # checking re-reads the same assertion strings constantly
    hit = _EXPR_CACHE.get(text)
    if hit is not None:
        return hit
    p = Parser(text)
    e = p.parse_expr()
    t = p.peek()
    if t.kind != "eof":
        raise UbhlSyntaxError(f"unexpected trailing input {t.text!r}", t.line, t.col)
    if len(_EXPR_CACHE) < 200000:
        _EXPR_CACHE[text] = e
    return e


# assertions and index expressions share the expression grammar
parse_assertion = parse_expr
parse_index = parse_expr
