"""Generated finite-support programs with hand-built derivations.

Each entry yields (program, script, params) such that the derivation
claims ⊢β main-call : pre ==> post. The kernel-soundness suite accepts
each proof and then verifies mass(not post) + residual <= β against the
exact evaluator; the proofs are deliberately varied: straight-line
chains, branches, and bounded loops, over coins and bounded uniforms.
"""

from __future__ import annotations

import random
from fractions import Fraction

from ubhl.checker.proof import ProofNode, ProofScript
from ubhl.lang.parser import parse_program

COIN_SITES = [
    # (distribution, site post over x, exact failure mass, site index claim)
    ("bern(1/2)", "{x} == false", Fraction(1, 2), "1/2"),
    ("bern(1/4)", "{x} == false", Fraction(1, 4), "1/4"),
    ("bern(1/4)", "{x} == true", Fraction(3, 4), "3/4"),
    ("unifint(0, 3)", "{x} <= 2", Fraction(1, 4), "1/4"),
    ("unifint(1, 5)", "{x} >= 2", Fraction(1, 5), "1/5"),
    ("unifint(0, 9)", "{x} != 7", Fraction(1, 10), "1/5"),   # slack on purpose
    ("bern(1/3)", "{x} == false", Fraction(1, 3), "1/3"),
    ("unifint(0, 1)", "{x} == 0 || {x} == 1", Fraction(0), "0"),
]


def node(rule, pre, post, index, children=(), **ann):
    return ProofNode(rule, pre, post, index, list(children), dict(ann))


def _entry(root):
    return ProofScript(logicals={}, entry={"proc": "main", "arg": "0",
                                           "result": "res"}, root=root)


def straight_line(rng: random.Random, n_sites: int):
    """x1..xn sampled; post is the conjunction of per-site facts."""
    sites = [rng.choice(COIN_SITES) for _ in range(n_sites)]
    decls, stmts = [], []
    site_posts, idxs = [], []
    for i, (dist, post_tpl, _, idx) in enumerate(sites):
        var = f"x{i}"
        t = "bool" if dist.startswith("bern") else "int"
        decls.append(f"var {var} : {t};")
        stmts.append(f"  {var} <$ {dist};")
        site_posts.append(post_tpl.format(x=var))
        idxs.append(idx)
    src = "\n".join(decls) + "\nproc main(w) {\n" + "\n".join(stmts) + "\n} return 0\n"
    program = parse_program(src)

    def cj(parts):
        return " && ".join(f"({x})" for x in parts)

    # forward chain: each rand carries the established prefix as frame
    nodes = []
    prefix: list[str] = []
    for i, (post_i, idx) in enumerate(zip(site_posts, idxs)):
        pre = cj(prefix) if prefix else "true"
        if prefix:
            post = cj([post_i] + prefix)
            nodes.append(node("rand", pre, post, idx,
                              schema="finite_exact", site_post=post_i,
                              site_index=idx, frame=cj(prefix)))
        else:
            nodes.append(node("rand", "true", post_i, idx,
                              schema="finite_exact", site_post=post_i,
                              site_index=idx))
        prefix.append(post_i)
    seq = nodes[-1]
    for left in reversed(nodes[:-1]):
        seq = node("seq", left.pre, seq.post, f"({left.index}) + ({seq.index})",
                   [left, seq])
    total = seq.index
    conj_post = cj(site_posts)
    root = node("call", "true", conj_post, total, [
        node("weak", "true", conj_post, total, [seq])],
        proc="main", callee_pre="true", callee_post=conj_post)
    return program, _entry(root), {"post": conj_post}


def branching(rng: random.Random):
    """A coin decides which of two further samples runs."""
    d1, p1, f1, i1 = rng.choice(COIN_SITES[:2])
    src = f"""
var g : bool;
var x0 : bool;
var y : int;
proc main(w) {{
  g <$ bern(1/2);
  if (g == true) {{
    x0 <$ {d1};
  }} else {{
    y <$ unifint(0, 3);
  }}
}} return 0
"""
    program = parse_program(src)
    post1 = p1.format(x="x0")
    post = f"(g == true ==> {post1})"
    # both branches claim the same index (weakening the cheap side)
    idx = i1
    then_node = node("weak", f"true && g == true", post, idx, [
        node("rand", "g == true", f"{post1} && g == true", idx,
             schema="finite_exact", site_post=post1, site_index=i1,
             frame="g == true")])
    else_node = node("weak", "true && !(g == true)", post, idx, [
        node("rand", "!(g == true)", "true && !(g == true)", "0",
             schema="true_post", site_index="0", frame="!(g == true)")])
    if_node = node("if", "true", post, idx, [then_node, else_node])
    g_node = node("rand", "true", "true", "0", schema="true_post", site_index="0")
    seq = node("seq", "true", post, f"0 + ({idx})", [g_node, if_node])
    root = node("call", "true", post, f"0 + ({idx})", [
        node("weak", "true", post, f"0 + ({idx})", [seq])],
        proc="main", callee_pre="true", callee_post=post)
    return program, _entry(root), {"post": post}


def bounded_loop(rng: random.Random, iters: int, p_num: int, p_den: int):
    """Counter loop; each pass resamples a coin that should stay false."""
    src = f"""
var i : int;
var x0 : bool;
proc main(w) {{
  i <- 0;
  while (i < {iters}) {{
    x0 <$ bern({p_num}/{p_den});
    i <- i + 1;
  }}
}} return 0
"""
    program = parse_program(src)
    inv = "i == 0 || x0 == false"
    site = "x0 == false"
    iter_idx = f"{p_num}/{p_den}"
    guard = f"i < {iters}"
    preserve = node("weak", inv, inv, iter_idx, [
        node("seq", inv, inv, f"({iter_idx}) + 0", [
            node("rand", inv, site, iter_idx,
                 schema="finite_exact", site_post=site, site_index=iter_idx),
            node("weak", site, inv, "0", [
                node("assn", "i + 1 == 0 || x0 == false", inv, "0")]),
        ])])
    dec_var = f"{iters} - i"
    dec_pre = f"({inv}) && ({guard}) && ({dec_var}) == eta"
    dec_fact = f"{iters} - (i + 1) < eta"
    decrease = node("weak", dec_pre, f"{dec_var} < eta", "0", [
        node("seq", f"({dec_fact})", f"{dec_var} < eta", "0 + 0", [
            node("rand", f"({dec_fact})", f"true && ({dec_fact})", "0",
                 schema="true_post", site_index="0", frame=dec_fact),
            node("assn", f"true && ({dec_fact})", f"{dec_var} < eta", "0"),
        ])])
    loop_index = f"{iters} * ({iter_idx})"
    loop = node("while", f"({inv}) && ({dec_var}) <= {iters}",
                f"({inv}) && i >= {iters}", loop_index,
                [preserve, decrease],
                invariant=inv, variant=dec_var, bound=str(iters),
                iter_index=iter_idx, eta="eta")
    init = node("weak", "true", loop.pre, "0",
                [node("assn", _subst_i0(loop.pre), loop.pre, "0")])
    seq = node("seq", "true", loop.post, f"0 + ({loop_index})", [init, loop])
    post = f"x0 == false || i == 0"
    body = node("weak", "true", post, loop_index, [seq])
    root = node("call", "true", post, loop_index, [body],
                proc="main", callee_pre="true", callee_post=post)
    return program, _entry(root), {"post": post}


def _subst_i0(pre: str) -> str:
    from ubhl.lang.parser import parse_expr
    from ubhl.lang.ast import pretty_expr, subst_expr, NumLit
    return pretty_expr(subst_expr(parse_expr(pre), "i", NumLit(Fraction(0))))


def generate_corpus(seed: int = 2024, count: int = 22):
    rng = random.Random(seed)
    out = []
    for n in (1, 2, 3, 4):
        out.append(straight_line(rng, n))
    while len(out) < count - 6:
        out.append(straight_line(rng, rng.randint(1, 5)))
    for _ in range(3):
        out.append(branching(rng))
    out.append(bounded_loop(rng, 3, 1, 10))
    out.append(bounded_loop(rng, 4, 1, 8))
    out.append(bounded_loop(rng, 2, 1, 6))
    return out
