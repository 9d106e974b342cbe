"""Built-in obligation prover.

A small, sound-by-construction tableau: conjunction and quantifier
introduction, disjunction case analysis, congruence rewriting from
equality hypotheses, select-of-store reduction, set-membership
expansion, and Fourier-Motzkin elimination (with abs-splits, integer
tightening and certified interval bounds for ground logs) over Laurent
monomials. Anything it cannot close is Unknown, never refuted.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, localcontext, ROUND_CEILING, ROUND_FLOOR
from fractions import Fraction
from typing import Optional

from ..lang.ast import (
    ArrayT, BinOp, BoolLit, Expr, FuncCall, Index, IntT, NumLit, Quant,
    RangeDom, SetDom, SetIntT, SetLit, SortDom, Store, Type, UnOp, Var,
    free_vars,
)
from .normform import (
    ATOM_INFO, NonNumeric, canon_assertion, canon_struct, canon_term,
    rf_const_value, rf_linear, rf_sub,
)

_CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")


def neg(e: Expr) -> Expr:
    if isinstance(e, BoolLit):
        return BoolLit(not e.value)
    if isinstance(e, UnOp) and e.op == "!":
        return e.arg
    if isinstance(e, BinOp):
        if e.op == "&&":
            return BinOp("||", neg(e.left), neg(e.right))
        if e.op == "||":
            return BinOp("&&", neg(e.left), neg(e.right))
        if e.op == "==>":
            return BinOp("&&", e.left, neg(e.right))
        flip = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}
        if e.op in flip:
            return BinOp(flip[e.op], e.left, e.right)
    if isinstance(e, Quant):
        kind = "exists" if e.kind == "forall" else "forall"
        return Quant(kind, e.var, e.dom, neg(e.body))
    return UnOp("!", e)


_NNF_CACHE: dict = {}


def nnf(e: Expr) -> Expr:
    """Negation normal form over &&, ||; expands ==> and <==> and
    set-membership structure. Memoized by identity: trees are immutable
    and saturation re-normalizes the same hypotheses constantly."""
    hit = _NNF_CACHE.get(id(e))
    if hit is not None and hit[0] is e:
        return hit[1]
    out = _nnf_raw(e)
    if len(_NNF_CACHE) < 400000:
        _NNF_CACHE[id(e)] = (e, out)
        # normal forms are fixpoints; route repeat calls to the result
        _NNF_CACHE.setdefault(id(out), (out, out))
    return out


def _nnf_raw(e: Expr) -> Expr:
    if isinstance(e, UnOp) and e.op == "!":
        return _nnf_neg(e.arg)
    if isinstance(e, BinOp):
        if e.op == "&&":
            return BinOp("&&", nnf(e.left), nnf(e.right))
        if e.op == "||":
            return BinOp("||", nnf(e.left), nnf(e.right))
        if e.op == "==>":
            return BinOp("||", _nnf_neg(e.left), nnf(e.right))
        if e.op == "<==>":
            return BinOp("&&",
                         BinOp("||", _nnf_neg(e.left), nnf(e.right)),
                         BinOp("||", _nnf_neg(e.right), nnf(e.left)))
        if e.op == "in":
            return _expand_member(e.left, e.right)
        if e.op in ("==", "!=") and isinstance(e.right, BoolLit):
            inner = nnf(e.left) if e.right.value == (e.op == "==") else _nnf_neg(e.left)
            return inner
        if e.op in ("==", "!=") and isinstance(e.left, BoolLit):
            inner = nnf(e.right) if e.left.value == (e.op == "==") else _nnf_neg(e.right)
            return inner
        return e
    if isinstance(e, Quant):
        return Quant(e.kind, e.var, e.dom, nnf(e.body))
    return e


def _nnf_neg(e: Expr) -> Expr:
    n = neg(e)
    if isinstance(n, UnOp) and n.op == "!":
        inner = nnf(n.arg)
        if isinstance(inner, (BinOp, Quant)) and not _is_atom(inner):
            return nnf(neg(inner))
        return UnOp("!", inner)
    return nnf(n)


def _is_atom(e: Expr) -> bool:
    if isinstance(e, BinOp):
        return e.op in _CMP_OPS or e.op == "in"
    return not isinstance(e, Quant)


def _expand_member(x: Expr, s: Expr) -> Expr:
    if isinstance(s, FuncCall) and s.name == "remove":
        return BinOp("&&", _expand_member(x, s.args[0]), BinOp("!=", x, s.args[1]))
    if isinstance(s, FuncCall) and s.name == "setdiff":
        return BinOp("&&", _expand_member(x, s.args[0]),
                     _nnf_neg(_expand_member(x, s.args[1])))
    if isinstance(s, SetLit):
        if not s.elems:
            return BoolLit(False)
        out: Expr = BinOp("==", x, s.elems[0])
        for el in s.elems[1:]:
            out = BinOp("||", out, BinOp("==", x, el))
        return out
    return BinOp("in", x, s)


def conjuncts(e: Expr) -> list[Expr]:
    if isinstance(e, BinOp) and e.op == "&&":
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


def disjuncts(e: Expr) -> list[Expr]:
    if isinstance(e, BinOp) and e.op == "||":
        return disjuncts(e.left) + disjuncts(e.right)
    return [e]


# ── linear constraints for Fourier-Motzkin ──────────────────────────


@dataclass(frozen=True)
class LinCon:
    """sum(coeffs[m] * m) + const  (<|<=)  0."""
    coeffs: tuple
    const: Fraction
    strict: bool


def _linearize(e: Expr) -> Optional[list[LinCon]]:
    """Comparison -> constraints; None when not linearizable."""
    if not (isinstance(e, BinOp) and e.op in _CMP_OPS):
        return None
    try:
        diff = rf_sub(canon_term(e.left), canon_term(e.right))
    except (NonNumeric, ZeroDivisionError):
        return None
    lin = rf_linear(diff)
    if lin is None:
        return None
    const = lin.pop((), Fraction(0))
    items = tuple(sorted(lin.items(), key=repr))
    if e.op == "<":
        return [LinCon(items, const, True)]
    if e.op == "<=":
        return [LinCon(items, const, False)]
    if e.op == ">":
        return [LinCon(tuple((m, -c) for m, c in items), -const, True)]
    if e.op == ">=":
        return [LinCon(tuple((m, -c) for m, c in items), -const, False)]
    if e.op == "==":
        return [LinCon(items, const, False),
                LinCon(tuple((m, -c) for m, c in items), -const, False)]
    return None  # '!=' is handled by case splits, not FM


def _ln_bounds(c: Fraction) -> Optional[tuple[Fraction, Fraction]]:
    if c <= 0:
        return None
    with localcontext() as ctx:
        ctx.prec = 45
        d = Decimal(c.numerator) / Decimal(c.denominator)
        ctx.rounding = ROUND_FLOOR
        lo = d.ln()
        ctx.rounding = ROUND_CEILING
        hi = d.ln()
    pad = Fraction(1, 10 ** 40)
    return Fraction(lo) - pad, Fraction(hi) + pad


class Prover:
    def __init__(self, sorts: Optional[dict[str, Type]] = None, budget: int = 20000):
        self.sorts = dict(sorts or {})
        self.budget = budget
        self.nodes = 0
        self._sk = 0
        self._inst_memo: set = set()
        self._fm_cache: dict = {}
        self._lin_cache: dict = {}

    # ── public API ──

    def prove_implication(self, antecedent: Expr, consequent: Expr) -> bool:
        self.nodes = 0
        try:
            hyps = [nnf(h) for h in conjuncts(antecedent)]
            return self._prove(hyps, nnf(consequent), depth=0, splits=0,
                               quick=False, memo=frozenset())
        except (NonNumeric, ZeroDivisionError, RecursionError):
            return False

    def prove(self, goal: Expr) -> bool:
        return self.prove_implication(BoolLit(True), goal)

    # ── sort bookkeeping ──

    def _is_int_term(self, e: Expr) -> bool:
        if isinstance(e, NumLit):
            return e.value.denominator == 1 and isinstance(e.type, IntT)
        if isinstance(e, Var):
            return isinstance(self.sorts.get(e.name), IntT)
        if isinstance(e, FuncCall) and e.name in ("size", "pick"):
            return True
        if isinstance(e, Index):
            base = e.arr
            while isinstance(base, Store):
                base = base.arr
            if isinstance(base, Var):
                t = self.sorts.get(base.name)
                return isinstance(t, ArrayT) and isinstance(t.elem, IntT)
        if isinstance(e, BinOp) and e.op in ("+", "-", "*"):
            return self._is_int_term(e.left) and self._is_int_term(e.right)
        if isinstance(e, UnOp) and e.op == "-":
            return self._is_int_term(e.arg)
        return False

    def _int_mono(self, mono) -> bool:
        """Every atom in the monomial is integer-sorted with positive
        exponent, so the monomial denotes an integer."""
        for key, exp in mono:
            if exp < 0:
                return False
            if not self._int_atom(key):
                return False
        return True

    def _int_atom(self, key) -> bool:
        if key[0] == "var":
            return isinstance(self.sorts.get(key[1]), IntT)
        if key[0] == "func" and key[1] in ("size", "pick"):
            return True
        if key[0] == "idx":
            base = key[1]
            while base[0] == "store":
                base = base[1]
            if base[0] == "var":
                t = self.sorts.get(base[1])
                return isinstance(t, ArrayT) and isinstance(t.elem, IntT)
        return False

    # ── main tableau ──

    def _tick(self) -> bool:
        self.nodes += 1
        return self.nodes <= self.budget

    def _prove(self, hyps: list[Expr], goal: Expr, depth: int, splits: int,
               quick: bool, memo: frozenset = frozenset()) -> bool:
        if not self._tick() or depth > 300:
            return False

        hyps, contradiction = self._saturate(hyps)
        if contradiction:
            return True
        facts = self._size_remove_facts(hyps, goal)
        if facts:
            hyps = hyps + facts
        goal = self._rewrite(goal, hyps)

        if isinstance(goal, BoolLit):
            return goal.value or self._hyps_inconsistent(hyps)

        if isinstance(goal, BinOp) and goal.op == "&&":
            return all(self._prove(hyps, g, depth + 1, splits, quick, memo)
                       for g in conjuncts(goal))

        if isinstance(goal, Quant) and goal.kind == "forall":
            return self._prove_forall(hyps, goal, depth, splits, quick, memo)

        if isinstance(goal, BinOp) and goal.op == "||":
            parts = disjuncts(goal)
            # cheap pass first: no instantiation or case splits
            for i, gi in enumerate(parts):
                extra = [nnf(neg(p)) for j, p in enumerate(parts) if j != i]
                if self._prove(hyps + extra, gi, depth + 1, splits, True, memo):
                    return True
            if quick:
                return False
            for i, gi in enumerate(parts):
                extra = [nnf(neg(p)) for j, p in enumerate(parts) if j != i]
                if self._prove(hyps + extra, gi, depth + 1, splits, False, memo):
                    return True
            return self._stuck_splits(hyps, goal, depth, splits, memo)

        # atomic goals
        if self._match_hyp(hyps, goal):
            return True
        if isinstance(goal, BinOp) and goal.op in _CMP_OPS and goal.op != "!=":
            if self._fm_entails(hyps, goal):
                return True
        if isinstance(goal, BinOp) and goal.op == "!=":
            # x != y from FM strict separation either way
            lt = BinOp("<", goal.left, goal.right)
            gt = BinOp(">", goal.left, goal.right)
            if self._fm_entails(hyps, lt) or self._fm_entails(hyps, gt):
                return True
        if isinstance(goal, FuncCall) and goal.name == "isempty":
            size_le = BinOp("<=", FuncCall("size", (goal.args[0],)), NumLit(Fraction(0)))
            if self._fm_entails(hyps, size_le):
                return True
        if self._hyps_inconsistent(hyps):
            return True
        if quick:
            return False
        if isinstance(goal, Quant) and goal.kind == "exists":
            if self._prove_exists(hyps, goal, depth, splits, memo):
                return True

        # quantified-hypothesis instantiation, then retry
        inst, keys = self._instantiations(hyps, goal, memo)
        if inst:
            return self._prove(hyps + inst, goal, depth + 1, splits, quick,
                               memo | keys)
        return self._stuck_splits(hyps, goal, depth, splits, memo)

    # ── saturation ──

    def _saturate(self, hyps: list[Expr]) -> tuple[list[Expr], bool]:
        out: list[Expr] = []
        seen: set = set()
        queue = list(hyps)
        empties: set = set()

        def key_of(h: Expr):
            try:
                return canon_assertion(h)
            except (NonNumeric, ZeroDivisionError):
                return ("opaque", repr(h))

        while queue:
            h = nnf(queue.pop(0))
            if isinstance(h, BoolLit):
                if not h.value:
                    return out, True
                continue
            if isinstance(h, BinOp) and h.op == "&&":
                queue.extend(conjuncts(h))
                continue
            if isinstance(h, Quant) and h.kind == "exists":
                queue.append(self._skolemize(h))
                continue
            if isinstance(h, UnOp) and h.op == "!" and isinstance(h.arg, FuncCall) \
                    and h.arg.name == "isempty":
                s = h.arg.args[0]
                try:
                    wkey = ("witness", canon_struct(s))
                except NonNumeric:
                    wkey = ("witness", repr(s))
                if wkey not in seen:
                    seen.add(wkey)
                    w = self._fresh("w", IntT())
                    queue.append(BinOp("in", w, s))
                    queue.append(BinOp("in", FuncCall("pick", (s,)), s))
                out.append(h)
                seen.add(key_of(h))
                continue
            if isinstance(h, FuncCall) and h.name == "isempty":
                try:
                    empties.add(canon_struct(h.args[0]))
                except NonNumeric:
                    pass
            k = key_of(h)
            if k in seen:
                continue
            seen.add(k)
            out.append(h)

        from .normform import _negate_key

        # unit propagation over disjunctive hypotheses, to fixpoint
        for _ in range(6):
            changed = False
            keys = {repr(key_of(h)) for h in out if not (isinstance(h, BinOp) and h.op == "||")}
            new_out: list[Expr] = []
            for h in out:
                if not (isinstance(h, BinOp) and h.op == "||"):
                    new_out.append(h)
                    continue
                parts = disjuncts(h)
                part_keys = [key_of(p) for p in parts]
                if any(repr(pk) in keys for pk in part_keys):
                    changed = True  # subsumed by an established literal
                    continue
                kept = [p for p, pk in zip(parts, part_keys)
                        if repr(_negate_key(pk)) not in keys]
                if len(kept) == len(parts):
                    new_out.append(h)
                    continue
                changed = True
                if not kept:
                    return out, True
                rebuilt: Expr = kept[0]
                for p in kept[1:]:
                    rebuilt = BinOp("||", rebuilt, p)
                new_out.append(rebuilt)
            out = new_out
            if not changed:
                break

        # pairwise contradiction on canonical keys
        all_keys = {repr(key_of(h)) for h in out}
        for h in out:
            if repr(_negate_key(key_of(h))) in all_keys:
                return out, True

        # equality propagation: rewrite every hypothesis, but keep the
        # original equalities so recursive passes can rebuild the map
        # and so goals rewritten the same way still find their match
        eqs = self._equalities(out)
        if eqs:
            originals = [h for h in out if isinstance(h, BinOp) and h.op == "=="]
            rewritten = []
            seen_rw: set = set()
            for h in out:
                r = self._apply_eqs(h, eqs)
                k = repr(key_of(r))
                if k in seen_rw:
                    continue
                seen_rw.add(k)
                rewritten.append(r)
            for h in originals:
                k = repr(key_of(h))
                if k not in seen_rw:
                    seen_rw.add(k)
                    rewritten.append(h)
            out = rewritten
        # membership in a known-empty set is absurd
        if empties:
            for h in out:
                if isinstance(h, BinOp) and h.op == "in":
                    try:
                        if canon_struct(h.right) in empties:
                            return out, True
                    except NonNumeric:
                        pass
        return out, False

    def _term_sort(self, e: Expr) -> Optional[Type]:
        if isinstance(e, NumLit):
            return e.type
        if isinstance(e, BoolLit):
            from ..lang.ast import BOOL
            return BOOL
        if isinstance(e, Var):
            return self.sorts.get(e.name)
        if isinstance(e, SetLit):
            return SetIntT()
        if isinstance(e, FuncCall):
            from ..lang.ast import BOOL, DB, QUERY, REAL
            table = {"size": IntT(), "pick": IntT(), "log": REAL, "abs": REAL,
                     "evalQ": REAL, "potential": REAL, "min": REAL, "max": REAL,
                     "remove": SetIntT(), "setdiff": SetIntT(),
                     "invQ": QUERY, "negQ": QUERY, "error": QUERY,
                     "mwInit": DB, "mwStep": DB, "isempty": BOOL}
            return table.get(e.name)
        if isinstance(e, (Index, Store)):
            base = e.arr
            while isinstance(base, Store):
                base = base.arr
            t = self._term_sort(base)
            if isinstance(t, ArrayT):
                return t if isinstance(e, Store) else t.elem
            return None
        if isinstance(e, BinOp) and e.op in ("+", "-", "*", "/"):
            return self._term_sort(e.left) or self._term_sort(e.right)
        if isinstance(e, UnOp) and e.op == "-":
            return self._term_sort(e.arg)
        return None

    def _is_structural_sort(self, e: Expr) -> bool:
        t = self._term_sort(e)
        from ..lang.ast import BoolT, DbT, QueryT
        return isinstance(t, (SetIntT, ArrayT, QueryT, DbT, BoolT))

    def _equalities(self, hyps: list[Expr]) -> dict:
        eqs: dict = {}
        for h in hyps:
            if not (isinstance(h, BinOp) and h.op == "=="):
                continue
            if self._is_structural_sort(h.left) or self._is_structural_sort(h.right):
                try:
                    k1, k2 = canon_struct(h.left), canon_struct(h.right)
                except NonNumeric:
                    continue
                if k1 == k2:
                    continue
                # deterministic direction: larger key rewrites to smaller
                if repr(k1) < repr(k2):
                    eqs[k2] = (h.right, h.left)
                else:
                    eqs[k1] = (h.left, h.right)
                continue
            # numeric equality with a variable or function-atom side:
            # substitute so that opaque atom positions (array indexes,
            # abs args, product monomials) line up; FM keeps the
            # equality as well
            left, right = h.left, h.right
            if isinstance(left, Var) and isinstance(right, Var):
                src, dst = (left, right) if left.name > right.name else (right, left)
            elif isinstance(left, Var) and left.name not in free_vars(right):
                src, dst = left, right
            elif isinstance(right, Var) and right.name not in free_vars(left):
                src, dst = right, left
            elif isinstance(left, (FuncCall, Index)):
                src, dst = left, right
            elif isinstance(right, (FuncCall, Index)):
                src, dst = right, left
            else:
                continue
            try:
                skey = canon_struct(src)
                if not isinstance(src, Var):
                    # avoid divergent self-referential rewrites
                    if repr(skey) in repr(canon_struct(dst)):
                        continue
                eqs.setdefault(skey, (src, dst))
            except (NonNumeric, ZeroDivisionError):
                continue
        return eqs

    def _apply_eqs(self, e: Expr, eqs: dict) -> Expr:
        for _ in range(3):
            changed = False

            def walk(x: Expr) -> Expr:
                nonlocal changed
                try:
                    k = canon_struct(x)
                    if k in eqs:
                        src, dst = eqs[k]
                        changed = True
                        return dst
                except (NonNumeric, ZeroDivisionError):
                    pass
                return _map_children(x, walk)

            e = walk(e)
            if not changed:
                break
        return e

    def _skolemize(self, q: Quant) -> Expr:
        t: Type = IntT() if not isinstance(q.dom, SortDom) else q.dom.sort
        w = self._fresh(q.var, t)
        body = _subst(q.body, q.var, w)
        guards = self._domain_guards(w, q.dom)
        for g in guards:
            body = BinOp("&&", g, body)
        return body

    def _fresh(self, base: str, t: Type) -> Var:
        self._sk += 1
        name = f"_sk{self._sk}_{base}"
        self.sorts[name] = t
        return Var(name)

    def _domain_guards(self, v: Expr, dom) -> list[Expr]:
        if isinstance(dom, SetDom):
            return [BinOp("in", v, dom.set_expr)]
        if isinstance(dom, RangeDom):
            return [BinOp("<=", dom.lo, v), BinOp("<=", v, dom.hi)]
        return []

    # ── goal handlers ──

    def _prove_forall(self, hyps: list[Expr], goal: Quant, depth: int,
                      splits: int, quick: bool, memo: frozenset) -> bool:
        t: Type = IntT() if not isinstance(goal.dom, SortDom) else goal.dom.sort
        w = self._fresh(goal.var, t)
        body = _subst(goal.body, goal.var, w)
        extra = self._domain_guards(w, goal.dom)
        return self._prove(hyps + [nnf(g) for g in extra], nnf(body),
                           depth + 1, splits, quick, memo)

    def _prove_exists(self, hyps: list[Expr], goal: Quant, depth: int,
                      splits: int, memo: frozenset) -> bool:
        for cand in self._candidates(hyps, goal)[:6]:
            body = _subst(goal.body, goal.var, cand)
            guards = self._domain_guards(cand, goal.dom)
            want: Expr = body
            for g in guards:
                want = BinOp("&&", g, want)
            if self._prove(hyps, nnf(want), depth + 1, splits, False, memo):
                return True
        return False

    def _match_hyp(self, hyps: list[Expr], goal: Expr) -> bool:
        try:
            gk = canon_assertion(goal)
        except (NonNumeric, ZeroDivisionError):
            return False
        if gk == ("true",):
            return True
        for h in hyps:
            try:
                if canon_assertion(h) == gk:
                    return True
            except (NonNumeric, ZeroDivisionError):
                continue
        return False

    def _hyps_inconsistent(self, hyps: list[Expr]) -> bool:
        keys = {}
        for h in hyps:
            try:
                k = canon_assertion(h)
            except (NonNumeric, ZeroDivisionError):
                continue
            if k == ("false",):
                return True
            keys[repr(k)] = k
        from .normform import _negate_key
        for k in keys.values():
            if repr(_negate_key(k)) in keys:
                return True
        cons = self._collect_lincons(hyps)
        diseqs = self._collect_int_diseqs(hyps)
        key = (tuple(sorted(id(c) for c in cons)),
               tuple(sorted(repr(d) for d in diseqs)))
        hit = self._fm_cache.get(key)
        if hit is not None:
            return hit[1]
        out = self._fm_refute(cons, diseqs)
        if len(self._fm_cache) < 100000:
            self._fm_cache[key] = (cons, out)
        return out

    # ── instantiation ──

    def _instantiations(self, hyps: list[Expr], goal: Expr,
                        memo: frozenset) -> tuple[list[Expr], frozenset]:
        cands = self._candidates(hyps, goal)
        have: set = set(memo)
        for h in hyps:
            try:
                have.add(repr(canon_assertion(h)))
            except (NonNumeric, ZeroDivisionError):
                pass
        added: list[Expr] = []
        new_keys: set = set()
        for h in hyps:
            if not (isinstance(h, Quant) and h.kind == "forall"):
                continue
            for cand in cands[:8]:
                if not self._domain_holds(hyps, cand, h.dom):
                    continue
                body = nnf(_subst(h.body, h.var, cand))
                try:
                    bk = repr(canon_assertion(body))
                except (NonNumeric, ZeroDivisionError):
                    bk = repr(body)
                if bk in have:
                    continue
                have.add(bk)
                new_keys.add(bk)
                added.append(body)
        return added, frozenset(new_keys)

    def _domain_holds(self, hyps: list[Expr], cand: Expr, dom) -> bool:
        if isinstance(dom, SortDom):
            return True
        if isinstance(dom, RangeDom):
            return (self._fm_entails(hyps, BinOp("<=", dom.lo, cand))
                    and self._fm_entails(hyps, BinOp("<=", cand, dom.hi)))
        # set domain: a membership hypothesis must match
        want = BinOp("in", cand, dom.set_expr)
        return self._match_hyp(hyps, nnf(want))

    def _candidates(self, hyps: list[Expr], goal: Expr) -> list[Expr]:
        found: list[Expr] = []
        seen: set = set()

        def consider(e: Expr) -> None:
            if self._is_int_term(e):
                try:
                    k = repr(canon_term(e))
                except (NonNumeric, ZeroDivisionError):
                    return
                if k not in seen:
                    seen.add(k)
                    found.append(e)

        def walk(e: Expr) -> Expr:
            if isinstance(e, Var):
                consider(e)
            if isinstance(e, Index):
                consider(e.idx)
            if isinstance(e, FuncCall) and e.name == "pick":
                consider(e)
            return _map_children(e, walk)

        walk(goal)
        goal_found = list(found)
        for h in hyps:
            if not isinstance(h, Quant):
                walk(h)
        # prefer terms that occur in the goal; fall back to hypothesis
        # terms only when the goal offers none
        return goal_found if goal_found else found

    # ── stuck-state splits ──

    def _stuck_splits(self, hyps: list[Expr], goal: Expr, depth: int,
                      splits: int, memo: frozenset) -> bool:
        if not self._tick() or splits >= 24:
            return False
        # strategies fall through on failure: a failed case analysis
        # only means that particular decomposition did not close the goal
        # 1. undecided select-of-store: split on index equality
        pair = self._find_store_select(goal, hyps)
        if pair is not None:
            i_e, j_e = pair
            eq = BinOp("==", i_e, j_e)
            if (self._prove(hyps + [nnf(eq)], goal, depth + 1, splits + 1,
                            False, memo)
                    and self._prove(hyps + [nnf(neg(eq))], goal, depth + 1,
                                    splits + 1, False, memo)):
                return True
        # 2. boundary split: an integer candidate one past the end of a
        # quantified range is either the last element or inside
        for h in hyps:
            if not (isinstance(h, Quant) and h.kind == "forall"
                    and isinstance(h.dom, RangeDom)):
                continue
            hi = h.dom.hi
            for cand in self._candidates(hyps, goal)[:4]:
                if not self._is_int_term(cand):
                    continue
                boundary = BinOp("+", hi, NumLit(Fraction(1)))
                eq = BinOp("==", cand, boundary)
                try:
                    key = ("rsplit", repr(canon_assertion(eq)))
                except (NonNumeric, ZeroDivisionError):
                    continue
                if key in memo:
                    continue
                if self._fm_entails(hyps, BinOp("<=", cand, hi)):
                    continue  # already inside the range
                if not self._fm_entails(hyps, BinOp("<=", cand, boundary)):
                    continue
                memo2 = memo | {key}
                if (self._prove(hyps + [nnf(eq)], goal, depth + 1,
                                splits + 1, False, memo2)
                        and self._prove(hyps + [nnf(neg(eq))], goal, depth + 1,
                                        splits + 1, False, memo2)):
                    return True
        # 3. disjunctive hypothesis: case analysis (smallest clause first)
        or_hyps = [(len(disjuncts(h)), i) for i, h in enumerate(hyps)
                   if isinstance(h, BinOp) and h.op == "||"]
        if or_hyps:
            _, i = min(or_hyps)
            h = hyps[i]
            rest = hyps[:i] + hyps[i + 1:]
            if all(self._prove(rest + [d], goal, depth + 1, splits + 1,
                               False, memo)
                   for d in disjuncts(h)):
                return True
        return False

    def _find_store_select(self, goal: Expr, hyps: list[Expr]):
        hit: list = []

        def walk(e: Expr) -> Expr:
            if not hit and isinstance(e, Index) and isinstance(e.arr, Store):
                try:
                    ki = canon_term(e.arr.idx)
                    kj = canon_term(e.idx)
                    from .normform import rf_equal
                    if not rf_equal(ki, kj):
                        if not self._decide_neq(hyps, e.arr.idx, e.idx):
                            hit.append((e.arr.idx, e.idx))
                except (NonNumeric, ZeroDivisionError):
                    pass
            return _map_children(e, walk)

        walk(goal)
        for h in hyps:
            walk(h)
        return hit[0] if hit else None

    def _size_remove_facts(self, hyps: list[Expr], goal: Expr) -> list[Expr]:
        """Cardinality of remove(S, x): size drops by one exactly when
        x is a member."""
        sites: list[tuple[Expr, Expr, Expr]] = []
        seen: set = set()

        def walk(e: Expr) -> Expr:
            if isinstance(e, FuncCall) and e.name == "size" and e.args \
                    and isinstance(e.args[0], FuncCall) and e.args[0].name == "remove":
                inner = e.args[0]
                try:
                    key = canon_struct(e)
                except (NonNumeric, ZeroDivisionError):
                    key = repr(e)
                if key not in seen:
                    seen.add(key)
                    sites.append((e, inner.args[0], inner.args[1]))
            return _map_children(e, walk)

        walk(goal)
        for h in hyps:
            walk(h)
        facts: list[Expr] = []
        one = NumLit(Fraction(1))
        for term, s, x in sites:
            size_s = FuncCall("size", (s,))
            if self._match_hyp(hyps, nnf(BinOp("in", x, s))):
                facts.append(BinOp("==", term, BinOp("-", size_s, one)))
            elif self._match_hyp(hyps, nnf(neg(BinOp("in", x, s)))):
                facts.append(BinOp("==", term, size_s))
            else:
                facts.append(BinOp("<=", term, size_s))
                facts.append(BinOp(">=", term, BinOp("-", size_s, one)))
        return facts

    def _decide_neq(self, hyps: list[Expr], a: Expr, b: Expr) -> bool:
        try:
            want = repr(canon_assertion(BinOp("!=", a, b)))
        except (NonNumeric, ZeroDivisionError):
            want = None
        if want is not None:
            for h in hyps:
                try:
                    if repr(canon_assertion(h)) == want:
                        return True
                except (NonNumeric, ZeroDivisionError):
                    continue
        return (self._fm_entails(hyps, BinOp("<", a, b))
                or self._fm_entails(hyps, BinOp(">", a, b)))

    # ── rewriting ──

    def _rewrite(self, e: Expr, hyps: list[Expr]) -> Expr:
        eqs = self._equalities(hyps)
        if eqs:
            e = self._apply_eqs(e, eqs)
        return self._reduce_stores(e, hyps)

    def _reduce_stores(self, e: Expr, hyps: list[Expr]) -> Expr:
        def walk(x: Expr) -> Expr:
            x = _map_children(x, walk)
            if isinstance(x, Index) and isinstance(x.arr, Store):
                st = x.arr
                try:
                    from .normform import rf_equal
                    if rf_equal(canon_term(st.idx), canon_term(x.idx)):
                        return st.value
                except (NonNumeric, ZeroDivisionError):
                    pass
                if self._fm_entails(hyps, BinOp("==", st.idx, x.idx)):
                    return st.value
                if self._decide_neq(hyps, st.idx, x.idx):
                    return self._reduce_stores(Index(st.arr, x.idx), hyps)
            return x

        return walk(e)

    # ── Fourier-Motzkin ──

    def _collect_lincons(self, hyps: list[Expr]) -> list[LinCon]:
        cons: list[LinCon] = []
        for h in hyps:
            hit = self._lin_cache.get(id(h))
            if hit is None:
                hit = (h, _linearize(h))
                if len(self._lin_cache) < 200000:
                    self._lin_cache[id(h)] = hit
            lc = hit[1]
            if lc:
                cons.extend(lc)
        return cons

    def _fm_entails(self, hyps: list[Expr], goal: Expr) -> bool:
        neg_goal = _linearize(nnf(neg(goal)))
        if neg_goal is None:
            return False
        cons = self._collect_lincons(hyps)
        diseqs = self._collect_int_diseqs(hyps)
        key = (tuple(sorted(id(c) for c in cons)),
               tuple(sorted(repr(d) for d in diseqs)), repr(neg_goal))
        hit = self._fm_cache.get(key)
        if hit is not None:
            return hit[1]
        out = self._fm_refute(cons + neg_goal, diseqs)
        if len(self._fm_cache) < 100000:
            self._fm_cache[key] = (cons, out)
        return out

    def _collect_int_diseqs(self, hyps: list[Expr]) -> list:
        """Integer disequalities become one-level case splits: a != b
        expands to a <= b-1 or a >= b+1."""
        out = []
        for h in hyps:
            if not (isinstance(h, BinOp) and h.op == "!="):
                continue
            try:
                diff = rf_sub(canon_term(h.left), canon_term(h.right))
            except (NonNumeric, ZeroDivisionError):
                continue
            lin = rf_linear(diff)
            if lin is None:
                continue
            const = lin.pop((), Fraction(0))
            items = tuple(sorted(lin.items(), key=repr))
            if not items:
                continue
            if not all(self._int_mono(m) for m, _ in items):
                continue
            if const.denominator != 1 or any(c.denominator != 1 for _, c in items):
                continue
            low = LinCon(items, const + 1, False)                      # diff <= -1
            high = LinCon(tuple((m, -c) for m, c in items), -const + 1, False)
            out.append((low, high))
        return out[:3]

    def _fm_refute(self, cons: list[LinCon], diseqs: Optional[list] = None) -> bool:
        if not cons:
            return False
        if diseqs:
            return all(self._fm_refute(cons + [alt], diseqs[1:])
                       for alt in diseqs[0])
        cons = list(cons) + self._ambient_facts(cons)
        abs_atoms = self._abs_atoms(cons)
        return self._fm_split_abs(cons, abs_atoms)

    def _ambient_facts(self, cons: list[LinCon]) -> list[LinCon]:
        extra: list[LinCon] = []
        seen: set = set()
        atoms: set = set()
        for c in cons:
            for mono, _ in c.coeffs:
                for key, _exp in mono:
                    atoms.add(key)
                    if key in seen:
                        continue
                    seen.add(key)
                    if key[0] == "func" and key[1] == "size":
                        # size(s) >= 0
                        extra.append(LinCon(((((key, 1),), Fraction(-1)),), Fraction(0), False))
                    if key[0] == "log":
                        arg = ATOM_INFO.get(key, {}).get("arg")
                        cv = rf_const_value(arg) if arg is not None else None
                        if cv is not None:
                            bounds = _ln_bounds(cv)
                            if bounds:
                                lo, hi = bounds
                                m = ((key, 1),)
                                extra.append(LinCon(((m, Fraction(-1)),), lo, False))
                                extra.append(LinCon(((m, Fraction(1)),), -hi, False))
        extra.extend(self._positive_monomials(cons + extra, atoms))
        return extra

    def _positive_monomials(self, cons: list[LinCon], atoms: set) -> list[LinCon]:
        """A product of strictly-positive atoms is nonnegative in any
        power; nonneg atoms need nonneg exponents. Positivity of single
        atoms is read off single-monomial constraint rows."""
        positive: set = set()
        nonneg: set = set()
        for c in cons:
            if len(c.coeffs) != 1:
                continue
            mono, coeff = c.coeffs[0]
            if len(mono) != 1 or mono[0][1] != 1:
                continue
            atom = mono[0][0]
            # coeff*atom + const (<|<=) 0
            if coeff < 0:
                bound = c.const / -coeff     # atom >(=) bound
                if bound > 0 or (bound == 0 and c.strict):
                    positive.add(atom)
                if bound >= 0:
                    nonneg.add(atom)
        for key in atoms:
            if key[0] == "func" and key[1] == "size":
                nonneg.add(key)
            if key[0] == "abs":
                nonneg.add(key)
            if key[0] == "log":
                arg = ATOM_INFO.get(key, {}).get("arg")
                cv = rf_const_value(arg) if arg is not None else None
                if cv is not None and cv >= 1:
                    nonneg.add(key)
                    if cv > 1:
                        positive.add(key)
        out: list[LinCon] = []
        monos: set = set()
        for c in cons:
            monos.update(m for m, _ in c.coeffs)
        for m in monos:
            if len(m) < 2 and not any(e < 0 for _, e in m):
                continue
            ok = all((a in positive) or (a in nonneg and e > 0) for a, e in m)
            if ok:
                out.append(LinCon(((m, Fraction(-1)),), Fraction(0), False))
        return out

    def _abs_atoms(self, cons: list[LinCon]) -> list:
        out = []
        seen = set()
        for c in cons:
            for mono, _ in c.coeffs:
                if len(mono) == 1 and mono[0][1] == 1 and mono[0][0][0] == "abs":
                    key = mono[0][0]
                    if key not in seen:
                        seen.add(key)
                        arg = ATOM_INFO.get(key, {}).get("arg")
                        if arg is not None and rf_linear(arg) is not None:
                            out.append((key, arg))
        return out[:6]

    def _fm_split_abs(self, cons: list[LinCon], abs_atoms: list) -> bool:
        if not abs_atoms:
            return self._fm_core(cons)
        (key, arg), rest = abs_atoms[0], abs_atoms[1:]
        lin = rf_linear(arg)
        const = lin.pop((), Fraction(0))
        items = tuple(sorted(lin.items(), key=repr))
        m = ((key, 1),)
        for sign in (1, -1):
            # abs == sign*arg and sign*arg >= 0
            scaled = tuple((mm, sign * c) for mm, c in items)
            eq1 = LinCon((((m, Fraction(1)),) + tuple((mm, -c) for mm, c in scaled)),
                         -sign * const, False)
            eq2 = LinCon((((m, Fraction(-1)),) + scaled), sign * const, False)
            nonneg = LinCon(tuple((mm, -c) for mm, c in scaled), -sign * const, False)
            if not self._fm_split_abs(cons + [eq1, eq2, nonneg], rest):
                return False
        return True

    def _fm_core(self, cons: list[LinCon]) -> bool:
        if not self._tick():
            return False
        rows: list[tuple[dict, Fraction, bool]] = []
        for c in cons:
            rows.append((dict(c.coeffs), c.const, c.strict))
        rows = [self._tighten(r) for r in rows]
        monos: set = set()
        for coeffs, _, _ in rows:
            monos.update(coeffs)
        for mono in sorted(monos, key=repr):
            pos = [r for r in rows if r[0].get(mono, 0) > 0]
            negs = [r for r in rows if r[0].get(mono, 0) < 0]
            keep = [r for r in rows if r[0].get(mono, 0) == 0]
            new_rows = keep
            if len(pos) * len(negs) <= 400:
                for p in pos:
                    for n in negs:
                        cp, cn = p[0][mono], -n[0][mono]
                        coeffs: dict = {}
                        for m, c in p[0].items():
                            coeffs[m] = coeffs.get(m, Fraction(0)) + c * cn
                        for m, c in n[0].items():
                            coeffs[m] = coeffs.get(m, Fraction(0)) + c * cp
                        coeffs = {m: c for m, c in coeffs.items() if c != 0 and m != mono}
                        coeffs.pop(mono, None)
                        const = p[1] * cn + n[1] * cp
                        new_rows.append(self._tighten((coeffs, const, p[2] or n[2])))
            rows = new_rows
            for coeffs, const, strict in rows:
                if not coeffs:
                    if const > 0 or (strict and const == 0):
                        return True
            rows = [r for r in rows if r[0]]
            if len(rows) > 2500:
                return False
        for coeffs, const, strict in rows:
            if not coeffs and (const > 0 or (strict and const == 0)):
                return True
        return False

    def _tighten(self, row: tuple[dict, Fraction, bool]):
        coeffs, const, strict = row
        if not strict or not coeffs:
            return row
        # integer rows: a < 0 becomes a + 1 <= 0 after clearing denominators
        denom = 1
        for c in list(coeffs.values()) + [const]:
            denom = denom * c.denominator // _gcd(denom, c.denominator)
        if all(self._int_mono(m) for m in coeffs) and const.denominator == 1 \
                and all(c.denominator == 1 for c in coeffs.values()):
            return (coeffs, const + 1, False)
        if denom == 1:
            return row
        scaled = {m: c * denom for m, c in coeffs.items()}
        sconst = const * denom
        if all(self._int_mono(m) for m in scaled) and \
                all(c.denominator == 1 for c in scaled.values()) and sconst.denominator == 1:
            return (scaled, sconst + 1, False)
        return row


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _safe_struct(e: Expr):
    try:
        return canon_struct(e)
    except (NonNumeric, ZeroDivisionError):
        return repr(e)


def _subst(e: Expr, name: str, repl: Expr) -> Expr:
    from ..lang.ast import subst_expr
    return subst_expr(e, name, repl)


def _map_children(e: Expr, fn) -> Expr:
    if isinstance(e, BinOp):
        return BinOp(e.op, fn(e.left), fn(e.right))
    if isinstance(e, UnOp):
        return UnOp(e.op, fn(e.arg))
    if isinstance(e, Index):
        return Index(fn(e.arr), fn(e.idx))
    if isinstance(e, Store):
        return Store(fn(e.arr), fn(e.idx), fn(e.value))
    if isinstance(e, FuncCall):
        return FuncCall(e.name, tuple(fn(a) for a in e.args))
    if isinstance(e, SetLit):
        return SetLit(tuple(fn(x) for x in e.elems))
    if isinstance(e, Quant):
        dom = e.dom
        if isinstance(dom, SetDom):
            dom = SetDom(fn(dom.set_expr))
        elif isinstance(dom, RangeDom):
            dom = RangeDom(fn(dom.lo), fn(dom.hi))
        return Quant(e.kind, e.var, dom, fn(e.body))
    return e

