"""Programmatic builders for the shipped proof scripts.

Scripts are derivation trees over the concrete assertion syntax; the
builders construct them by substituting through the program text, so
the shipped JSON stays in sync with the sources by construction.
"""

from __future__ import annotations

from ubhl.checker.proof import ProofNode, ProofScript
from ubhl.lang.ast import pretty_expr, subst_expr, subst_lvalue
from ubhl.lang.parser import Parser, parse_expr


def node(rule: str, pre: str, post: str, index: str, children=(), **ann) -> ProofNode:
    return ProofNode(rule, pre, post, index, list(children), dict(ann))


def subst(assertion: str, var: str, term: str) -> str:
    """assertion[term/var] in concrete syntax."""
    return pretty_expr(subst_expr(parse_expr(assertion), var, parse_expr(term)))


def subst_lv(assertion: str, lvalue: str, term: str) -> str:
    """assertion with the write lvalue := term applied (array writes
    become store terms)."""
    p = Parser(lvalue)
    lv = p.parse_lvalue()
    return pretty_expr(subst_lvalue(parse_expr(assertion), lv, parse_expr(term)))


def conj(*parts: str) -> str:
    return " && ".join(f"({p})" for p in parts)


def assign_chain(stmts: list[tuple[str, str]], post: str) -> tuple[str, list[ProofNode]]:
    """Backward-chained Assn nodes for `lv <- term` statements; returns
    the weakest pre and the per-statement node list."""
    posts = [post]
    for lv, term in reversed(stmts):
        posts.append(subst_lv(posts[-1], lv, term))
    posts.reverse()  # posts[i] is the pre of statement i
    nodes = [node("assn", posts[i], posts[i + 1], "0") for i in range(len(stmts))]
    return posts[0], nodes


def seq_chain(children: list[ProofNode], indices: list[str]) -> ProofNode:
    """Right-nested Seq nodes matching the parser's statement nesting."""
    assert len(children) == len(indices) and children
    out = children[-1]
    for child, idx in zip(reversed(children[:-1]), reversed(indices[:-1])):
        combined = f"({idx}) + ({out.index})"
        out = node("seq", child.pre, out.post, combined, [child, out])
    return out


# ── report-noisy-max ────────────────────────────────────────────────

RNM_LOGICALS = {"beta": "real", "R0": "set<int>"}


RNM_HYPS = "0 < beta && beta < 1 && 0 < eps && 0 < size(R0)"


def rnm_proof() -> ProofScript:
    T = "(2/eps)*log(size(R0)/beta)"
    phi1 = f"forall s in R0 . s in R || abs(noisy[s] - qscore[s]) <= {T}"
    phi2 = "forall s in R0 . s in R || flag == false"
    phi3 = (f"flag == true || (abs(best - qscore[rstar]) <= {T}"
            " && (forall s in R0 . s in R || noisy[s] <= best))")
    inv = conj(RNM_HYPS, phi1, phi2, phi3)
    iter_index = "beta/size(R0)"
    psi_site = f"abs(noisy[r] - qscore[r]) <= (1/(eps/2))*log(1/({iter_index}))"
    guard = "noisy[r] > best || flag == true"

    # frame carried through the sampling site: the invariant with the
    # freshly sampled cell carved out
    th1 = (f"forall s in R0 . s == r || s in R"
           f" || abs(noisy[s] - qscore[s]) <= {T}")
    th3 = (f"flag == true || (abs(best - qscore[rstar]) <= {T}"
           " && (forall s in R0 . s == r || s in R || noisy[s] <= best))")
    frame = conj(RNM_HYPS, th1, phi2, th3)
    p2 = conj(psi_site, RNM_HYPS, th1, phi2, th3)

    inv_removed = subst("(" + inv + ")", "R", "remove(R, r)")

    # then branch: flag <- false; rstar <- r; best <- noisy[r]
    then_pre, then_nodes = assign_chain(
        [("flag", "false"), ("rstar", "r"), ("best", "noisy[r]")], inv_removed)
    then_seq = seq_chain(then_nodes, ["0", "0", "0"])
    then_child = node("weak", conj(p2, guard), inv_removed, "0", [then_seq])
    else_child = node(
        "weak", conj(p2, f"!({guard})"), inv_removed, "0",
        [node("skip", inv_removed, inv_removed, "0")])
    if_node = node("if", p2, inv_removed, "0", [then_child, else_child])

    preserve_body = seq_chain([
        node("assn", inv, inv, "0"),                             # r <- pick(R)
        node("rand", inv, conj(psi_site, frame), iter_index,
             schema="lap_acc", site_index=iter_index, frame=frame),
        if_node,
        node("assn", inv_removed, inv, "0"),                     # R <- remove(R, r)
    ], ["0", iter_index, "0", "0"])
    preserve = node("weak", inv, inv, iter_index, [
        node("weak", inv, inv, preserve_body.index, [preserve_body])])

    # variant decrease: size(R) drops because the picked element leaves
    dvar = "size(remove(R, r)) < eta"
    dec_pre = conj(inv, "!isempty(R)", "size(R) == eta")
    dec_nodes = [
        node("weak", dec_pre, dvar, "0",
             [node("assn", subst(dvar, "r", "pick(R)"), dvar, "0")]),
        node("rand", dvar, conj("true", dvar), "0",
             schema="true_post", site_index="0", frame=dvar),
        node("if", conj("true", dvar), dvar, "0", [
            node("weak", conj(conj("true", dvar), guard), dvar, "0",
                 [node("frame", dvar, dvar, "0")]),
            node("weak", conj(conj("true", dvar), f"!({guard})"), dvar, "0",
                 [node("frame", dvar, dvar, "0")]),
        ]),
        node("assn", dvar, "size(R) < eta", "0"),                # R <- remove(R, r)
    ]
    decrease = seq_chain(dec_nodes, ["0", "0", "0", "0"])
    decrease = node("weak", dec_pre, "size(R) < eta", "0", [decrease])

    loop = node(
        "while",
        conj(inv, "size(R) <= size(R0)"), conj(inv, "isempty(R)"), "beta",
        [preserve, decrease],
        invariant=inv, variant="size(R)", bound="size(R0)",
        iter_index=iter_index, eta="eta")

    # initialization: flag <- true; best <- 0 establish the invariant
    init_pre, init_nodes = assign_chain(
        [("flag", "true"), ("best", "0")], loop.pre)
    body_chain = seq_chain(init_nodes + [loop], ["0", "0", "beta"])

    theorem_post = (f"forall s in R0 . qscore[res] >= qscore[s]"
                    f" - (4/eps)*log(size(R0)/beta)")
    theorem_pre = conj("R == R0", RNM_HYPS)
    body_post = subst(theorem_post, "res", "rstar")
    body = node("weak", theorem_pre, body_post, "beta", [body_chain])

    root = node("call", theorem_pre, theorem_post, "beta", [body],
                proc="main", callee_pre=theorem_pre, callee_post=theorem_post)
    return ProofScript(logicals=_sorts(RNM_LOGICALS),
                       entry={"proc": "main", "arg": "0", "result": "res"},
                       root=root)


def _sorts(d: dict[str, str]):
    out = {}
    for k, v in d.items():
        p = Parser(v)
        out[k] = p.parse_type()
    return out


def forall_sort(var: str, sort: str, body: str) -> str:
    return f"forall {var} : {sort} . ({body})"


# ── interactive above-threshold (sparse vector) ─────────────────────

SV_LOGICALS = {"beta": "real", "Q": "int"}


def sv_phi_t() -> str:
    return ("abs(tin - T) <= (2/eps)*log((Q+1)/beta)"
            " && eps == epsin")


def sv_phi_q(query_term: str, ans_term: str) -> str:
    m6 = "(6/eps)*log((Q+1)/beta)"
    return (f"({ans_term} == true ==> evalQ({query_term}, d) >= tin - {m6})"
            f" && ({ans_term} == false ==> evalQ({query_term}, d) <= tin + {m6})")


def _sv_svinit_body(iota: str) -> ProofNode:
    phi_t = sv_phi_t()
    return seq_chain([
        node("weak", "true", "eps == epsin", "0",
             [node("assn", "epsin == epsin", "eps == epsin", "0")]),
        node("rand", "eps == epsin", phi_t, iota,
             schema="lap_acc", site_index=iota, frame="eps == epsin"),
    ], ["0", iota])


def _sv_svstep_body(iota: str) -> ProofNode:
    phi_t = sv_phi_t()
    psi_a = f"abs(a - evalQ(qq, d)) <= (1/(eps/4))*log(1/({iota}))"
    p_a = conj(psi_a, phi_t)
    post_z = conj(phi_t, sv_phi_q("qq", "z"))
    guard = "a < T"
    if_node = node("if", p_a, post_z, "0", [
        node("weak", conj(p_a, guard), post_z, "0",
             [node("assn", subst_lv(post_z, "z", "false"), post_z, "0")]),
        node("weak", conj(p_a, f"!({guard})"), post_z, "0",
             [node("assn", subst_lv(post_z, "z", "true"), post_z, "0")]),
    ])
    return seq_chain([
        node("rand", phi_t, p_a, iota,
             schema="lap_acc", site_index=iota, frame=phi_t),
        if_node,
    ], [iota, "0"])


SV_HYPS = "0 < beta && beta < 1 && 0 < epsin && 1 <= Q"


def sv_proof() -> ProofScript:
    iota = "beta/(Q+1)"
    phi_t = sv_phi_t()
    inv = conj(SV_HYPS, phi_t, "Qn == Q",
               "forall j in 1 .. u . (" + sv_phi_q("q[j]", "ans[j]") + ")")
    p1 = conj(SV_HYPS, phi_t, "Qn == Q",
              "forall j in 1 .. u - 1 . (" + sv_phi_q("q[j]", "ans[j]") + ")")

    # preservation of the loop invariant through one interaction round
    s1 = node("assn", subst(f"({p1})", "u", "u + 1"), p1, "0")
    ext_pre = forall_sort("v", "query", subst_lv(p1, "q[u]", "v"))
    s2 = node("weak", p1, p1, "0", [node("ext", ext_pre, p1, "0")])
    call_post = conj(phi_t, sv_phi_q("q[u]", "ans[u]"), SV_HYPS, "Qn == Q",
                     "forall j in 1 .. u - 1 . (" + sv_phi_q("q[j]", "ans[j]") + ")")
    s3 = node("weak", p1, inv, iota, [
        node("call", p1, call_post, iota,
             [_sv_svstep_body(iota)],
             proc="svstep", callee_pre=phi_t,
             callee_post=conj(phi_t, sv_phi_q("qq", "res")),
             frame=conj(SV_HYPS, "Qn == Q",
                        "forall j in 1 .. u - 1 . (" + sv_phi_q("q[j]", "ans[j]") + ")")),
    ])
    preserve = seq_chain([s1, s2, s3], ["0", "0", iota])

    # variant decrease
    dvar = "Qn - u < eta"
    dec_pre = conj(inv, "u < Qn", "Qn - u == eta")
    dec = seq_chain([
        node("weak", dec_pre, dvar, "0",
             [node("assn", subst(dvar, "u", "u + 1"), dvar, "0")]),
        node("ext", dvar, dvar, "0"),
        node("call", dvar, dvar, "0",
             [_sv_svstep_trivial()],
             proc="svstep", callee_pre="true", callee_post="true", frame=dvar),
    ], ["0", "0", "0"])
    decrease = node("weak", dec_pre, dvar, "0", [dec])

    loop = node("while", conj(inv, "Qn - u <= Q"), conj(inv, "u >= Qn"),
                "Q * (beta/(Q+1))", [preserve, decrease],
                invariant=inv, variant="Qn - u", bound="Q",
                iter_index=iota, eta="eta")

    # initialization: u <- 0; ans[0] <- false
    pre_ans = subst_lv(loop.pre, "ans[u]", "false")
    pre_u = subst(pre_ans, "u", "0")
    init_sub = seq_chain([
        node("assn", pre_u, pre_ans, "0"),
        node("assn", pre_ans, loop.pre, "0"),
        loop,
    ], ["0", "0", loop.index])
    sv_frame = conj(SV_HYPS, "Qn == Q")
    init_weak = node("weak", conj(phi_t, sv_frame), loop.post, init_sub.index,
                     [init_sub])

    svinit_call = node("call", conj("true", sv_frame), conj(phi_t, sv_frame),
                       iota, [_sv_svinit_body(iota)],
                       proc="svinit", callee_pre="true", callee_post=phi_t,
                       frame=sv_frame)
    chain = seq_chain([svinit_call, init_weak], [iota, init_weak.index])

    theorem = ("forall j in 1 .. Q . ("
               + sv_phi_q("q[j]", "res[j]") + ")")
    theorem_pre = conj("Qn == Q", SV_HYPS)
    body_post = subst(theorem, "res", "ans")
    body = node("weak", theorem_pre, body_post, "beta", [chain])
    root = node("call", theorem_pre, theorem, "beta", [body],
                proc="main", callee_pre=theorem_pre, callee_post=theorem)
    return ProofScript(logicals=_sorts(SV_LOGICALS),
                       entry={"proc": "main", "arg": "0", "result": "res"},
                       root=root)


def _sv_svstep_trivial() -> ProofNode:
    """svstep body at index 0 with a trivial contract (used where only
    the frame matters)."""
    rand = node("rand", "true", "true", "0", schema="true_post", site_index="0")
    if_node = node("if", "true", "true", "0", [
        node("weak", conj("true", "a < T"), "true", "0",
             [node("assn", "true", "true", "0")]),
        node("weak", conj("true", "!(a < T)"), "true", "0",
             [node("assn", "true", "true", "0")]),
    ])
    return seq_chain([rand, if_node], ["0", "0"])


# ── synthetic-database release (online multiplicative weights) ──────

MWSV_LOGICALS = {"beta": "real", "Q": "int"}

_GAMMA = "4*n*n*log(X)/(alpha*alpha)"


MW_HYPS = "0 < beta && beta < 1 && 0 < eps && 1 <= Q && 1 <= n && 2 <= X && 0 < alpha"


def mw_defs() -> str:
    return conj(
        MW_HYPS,
        "eta == alpha/(2*n)",
        "T == 2*alpha",
        f"c == {_GAMMA}",
        "epsin == eps/(4*c)",
        "tin == T",
        "Qn == Q",
        "alpha >= (24*c/eps)*log(2*(Q+1)/beta)",
        "alpha >= (4*c/eps)*log(2*c/beta)",
        "size(d) == n",
    )


def mw_theorem_pre() -> str:
    gam = _GAMMA
    return conj(
        MW_HYPS,
        "Qn == Q",
        "size(d) == n",
        f"alpha >= (24*({gam})/eps)*log(2*(Q+1)/beta)",
        f"alpha >= (4*({gam})/eps)*log(2*({gam})/beta)",
    )


def mw_phi_t() -> str:
    # the threshold-check subsystem runs at scale epsin over 2Q queries
    # with half the failure budget
    return ("abs(tin - Tsv) <= (2/eps2)*log(2*(2*Q+1)/beta)"
            " && eps2 == epsin")


def mw_phi_q(query_term: str, ans_term: str) -> str:
    m6 = "(6/eps2)*log(2*(2*Q+1)/beta)"
    return (f"({ans_term} == true ==> evalQ({query_term}, d) >= tin - {m6})"
            f" && ({ans_term} == false ==> evalQ({query_term}, d) <= tin + {m6})")


def mw_pot(u_term: str) -> str:
    return f"potential(mwdb, d) <= log(X) - ({u_term})*alpha*alpha/(4*n*n)"


def mw_acc(hi: str) -> str:
    return f"forall j in 1 .. {hi} . abs(ans[j] - evalQ(q[j], d)) <= alpha"


_IOTA_SV = "(beta/2)/(2*Q+1)"
_IOTA_LAP = "beta/(2*Q)"


def _mw_svinit_body() -> ProofNode:
    phi_t = mw_phi_t()
    return seq_chain([
        node("weak", "true", "eps2 == epsin", "0",
             [node("assn", "epsin == epsin", "eps2 == epsin", "0")]),
        node("rand", "eps2 == epsin", phi_t, _IOTA_SV,
             schema="lap_acc", site_index=_IOTA_SV, frame="eps2 == epsin"),
    ], ["0", _IOTA_SV])


def _mw_svstep_body() -> ProofNode:
    phi_t = mw_phi_t()
    psi_a = f"abs(a - evalQ(qq, d)) <= (1/(eps2/4))*log(1/({_IOTA_SV}))"
    p_a = conj(psi_a, phi_t)
    post_z = conj(phi_t, mw_phi_q("qq", "z"))
    guard = "a < Tsv"
    if_node = node("if", p_a, post_z, "0", [
        node("weak", conj(p_a, guard), post_z, "0",
             [node("assn", subst_lv(post_z, "z", "false"), post_z, "0")]),
        node("weak", conj(p_a, f"!({guard})"), post_z, "0",
             [node("assn", subst_lv(post_z, "z", "true"), post_z, "0")]),
    ])
    return seq_chain([
        node("rand", phi_t, p_a, _IOTA_SV,
             schema="lap_acc", site_index=_IOTA_SV, frame=phi_t),
        if_node,
    ], [_IOTA_SV, "0"])


def _mw_svstep_trivial() -> ProofNode:
    rand = node("rand", "true", "true", "0", schema="true_post", site_index="0")
    if_node = node("if", "true", "true", "0", [
        node("weak", conj("true", "a < Tsv"), "true", "0",
             [node("assn", "true", "true", "0")]),
        node("weak", conj("true", "!(a < Tsv)"), "true", "0",
             [node("assn", "true", "true", "0")]),
    ])
    return seq_chain([rand, if_node], ["0", "0"])


def _mw_sv_call(pre_frame: str, post_extra: str) -> ProofNode:
    """Contracted call to the threshold-check step with a frame."""
    phi_t = mw_phi_t()
    return node(
        "call",
        conj(phi_t, pre_frame),
        conj(phi_t, post_extra, pre_frame),
        _IOTA_SV,
        [_mw_svstep_body()],
        proc="svstep", callee_pre=phi_t,
        callee_post=conj(phi_t, mw_phi_q("qq", "res")),
        frame=pre_frame)


def mwsv_proof() -> ProofScript:
    defs = mw_defs()
    phi_t = mw_phi_t()
    beta_iter = f"2*({_IOTA_SV}) + {_IOTA_LAP}"
    inv = conj(phi_t, defs, mw_pot("u"), mw_acc("k"))
    p1 = conj(phi_t, defs, mw_pot("u"), mw_acc("k - 1"))

    # loop body, forward: k increment, adversary query, cached answers
    s1 = node("assn", subst(f"({p1})", "k", "k + 1"), p1, "0")
    ext_pre = forall_sort("v", "query", subst_lv(p1, "q[k]", "v"))
    s2 = node("weak", p1, p1, "0", [node("ext", ext_pre, p1, "0")])
    p2 = conj(p1, "approx == evalQ(q[k], mwdb)")
    s3 = node("assn", subst_lv(p2, "approx", "evalQ(q[k], mwdb)"), p2, "0")
    p3 = conj(p2, "exact == evalQ(q[k], d)")
    s4 = node("assn", subst_lv(p3, "exact", "evalQ(q[k], d)"), p3, "0")

    # saturated branch: answer from the synthetic database
    then_assn = node("assn", subst_lv(inv, "ans[k]", "approx"), inv, "0")
    then_branch = node("weak", conj(p3, "k >= c"), inv, beta_iter,
                       [then_assn], export=["pre"])

    # pre-saturation: two threshold checks, maybe an update
    f1 = conj(defs, mw_pot("u"), mw_acc("k - 1"),
              "approx == evalQ(q[k], mwdb)", "exact == evalQ(q[k], d)",
              "errgt == error(q[k], mwdb)")
    e1_post = conj(phi_t, f1)
    e1 = node("assn", subst_lv(e1_post, "errgt", "error(q[k], mwdb)"),
              e1_post, "0")
    e2 = _mw_sv_call(f1, mw_phi_q("errgt", "at"))
    f2 = conj(f1, mw_phi_q("errgt", "at"),
              "errlt == invQ(error(q[k], mwdb))")
    e3_post = conj(phi_t, f2)
    e3 = node("assn", subst_lv(e3_post, "errlt", "invQ(error(q[k], mwdb))"),
              e3_post, "0")
    f2b = conj(f1, mw_phi_q("errgt", "at"), "errlt == invQ(error(q[k], mwdb))")
    e4 = _mw_sv_call(f2b, mw_phi_q("errlt", "bt"))
    p5 = conj(phi_t, f2b, mw_phi_q("errlt", "bt"))

    # update branch
    upfact = "(at == true && up == q[k]) || (!(at == true) && up == negQ(q[k]))"
    svfacts = conj(mw_phi_q("errgt", "at"), mw_phi_q("errlt", "bt"),
                   "errgt == error(q[k], mwdb)", "errlt == invQ(error(q[k], mwdb))",
                   "at == true || bt == true")
    mid_a = conj(phi_t, defs, mw_pot("u - 1"), mw_acc("k - 1"),
                 "exact == evalQ(q[k], d)", "approx == evalQ(q[k], mwdb)", svfacts)
    r3 = conj(mid_a, upfact)
    u1 = node("weak", conj(p5, "at == true || bt == true"), mid_a, "0",
              [node("assn", subst(f"({mid_a})", "u", "u + 1"), mid_a, "0")])
    iif = node("if", mid_a, r3, "0", [
        node("weak", conj(mid_a, "at == true"), r3, "0",
             [node("assn", subst_lv(r3, "up", "q[k]"), r3, "0")]),
        node("weak", conj(mid_a, "!(at == true)"), r3, "0",
             [node("assn", subst_lv(r3, "up", "negQ(q[k])"), r3, "0")]),
    ])
    r2 = conj(phi_t, defs, mw_pot("u"), mw_acc("k - 1"), "exact == evalQ(q[k], d)")
    r4 = subst(f"({r2})", "mwdb", "mwStep(mwdb, up, eta, n)")
    m3 = node("weak", r3, r2, "0",
              [node("assn", r4, r2, "0")], export=["pre"])
    psi_k = f"abs(ans[k] - exact) <= (1/(eps/(2*c)))*log(1/({_IOTA_LAP}))"
    rand_k = node("rand", r2, conj(psi_k, r2), _IOTA_LAP,
                  schema="lap_acc", site_index=_IOTA_LAP, frame=r2)
    upd_chain = seq_chain([u1, iif, m3, rand_k], ["0", "0", "0", _IOTA_LAP])
    upd_branch = node("weak", conj(p5, "at == true || bt == true"), inv,
                      _IOTA_LAP, [upd_chain], export=["post"])

    # no-update branch: the synthetic answer is already close
    noupd_assn = node("assn", subst_lv(inv, "ans[k]", "approx"), inv, "0")
    noupd = node("weak", conj(p5, "!(at == true || bt == true)"), inv,
                 _IOTA_LAP, [noupd_assn], export=["pre"])

    e5 = node("if", p5, inv, _IOTA_LAP, [upd_branch, noupd])
    inner = seq_chain([e1, e2, e3, e4, e5],
                      ["0", _IOTA_SV, "0", _IOTA_SV, _IOTA_LAP])
    else_branch = node("weak", conj(p3, "!(k >= c)"), inv, beta_iter, [inner])

    outer_if = node("if", p3, inv, beta_iter, [then_branch, else_branch])
    preserve = seq_chain([s1, s2, s3, s4, outer_if],
                         ["0", "0", "0", "0", beta_iter])

    # variant decrease child
    dvar = "Qn - k < eta2"
    dec_pre = conj(inv, "k < Qn", "Qn - k == eta2")
    dec_if_inner = node("if", dvar, dvar, "0", [
        node("weak", conj(dvar, "at == true || bt == true"), dvar, "0", [
            seq_chain([
                node("assn", dvar, dvar, "0"),
                node("if", dvar, dvar, "0", [
                    node("weak", conj(dvar, "at == true"), dvar, "0",
                         [node("assn", dvar, dvar, "0")]),
                    node("weak", conj(dvar, "!(at == true)"), dvar, "0",
                         [node("assn", dvar, dvar, "0")]),
                ]),
                node("assn", dvar, dvar, "0"),
                node("rand", dvar, conj("true", dvar), "0",
                     schema="true_post", site_index="0", frame=dvar),
            ], ["0", "0", "0", "0"]),
        ]),
        node("weak", conj(dvar, "!(at == true || bt == true)"), conj("true", dvar), "0",
             [node("assn", conj("true", dvar), conj("true", dvar), "0")]),
    ])
    dec_nodes = [
        node("weak", dec_pre, dvar, "0",
             [node("assn", subst(dvar, "k", "k + 1"), dvar, "0")]),
        node("ext", dvar, dvar, "0"),
        node("assn", dvar, dvar, "0"),
        node("assn", dvar, dvar, "0"),
        node("if", dvar, dvar, "0", [
            node("weak", conj(dvar, "k >= c"), dvar, "0",
                 [node("assn", dvar, dvar, "0")]),
            node("weak", conj(dvar, "!(k >= c)"), dvar, "0", [
                seq_chain([
                    node("assn", dvar, dvar, "0"),
                    node("call", dvar, dvar, "0", [_mw_svstep_trivial()],
                         proc="svstep", callee_pre="true", callee_post="true",
                         frame=dvar),
                    node("assn", dvar, dvar, "0"),
                    node("call", dvar, dvar, "0", [_mw_svstep_trivial()],
                         proc="svstep", callee_pre="true", callee_post="true",
                         frame=dvar),
                    dec_if_inner,
                ], ["0", "0", "0", "0", "0"]),
            ]),
        ]),
    ]
    decrease = node("weak", dec_pre, "Qn - k < eta2", "0",
                    [seq_chain(dec_nodes, ["0", "0", "0", "0", "0"])])

    loop = node("while", conj(inv, "Qn - k <= Q"), conj(inv, "k >= Qn"),
                f"Q * ({beta_iter})", [preserve, decrease],
                invariant=inv, variant="Qn - k", bound="Q",
                iter_index=beta_iter, eta="eta2")

    # initialization: parameters, counters, synthetic db, threshold setup
    frame_init = conj(defs, mw_pot("u"), "k == 0", "u == 0")
    svinit_call = node("call", conj("true", frame_init),
                       conj(phi_t, frame_init), _IOTA_SV,
                       [_mw_svinit_body()],
                       proc="svinit", callee_pre="true", callee_post=phi_t,
                       frame=frame_init)
    init_stmts = [("eta", "alpha/(2*n)"), ("T", "2*alpha"),
                  ("c", "4*n*n*log(X)/(alpha*alpha)"), ("u", "0"), ("k", "0"),
                  ("ans[k]", "0"), ("mwdb", "mwInit(eta, X, n)"),
                  ("epsin", "eps/(4*c)"), ("tin", "T")]
    pre0, init_nodes = assign_chain(init_stmts, svinit_call.pre)
    post_init = node("weak", svinit_call.post, loop.post, loop.index, [
        node("weak", conj(phi_t, frame_init), loop.post, loop.index, [
            node("weak", loop.pre, loop.post, loop.index, [loop])])])
    chain = seq_chain(init_nodes + [svinit_call, post_init],
                      ["0"] * len(init_nodes) + [_IOTA_SV, loop.index])

    theorem = "forall j in 1 .. Q . abs(res[j] - evalQ(q[j], d)) <= alpha"
    body_post = subst(theorem, "res", "ans")
    body = node("weak", mw_theorem_pre(), body_post, "beta", [chain], export=["pre"])
    root = node("call", mw_theorem_pre(), theorem, "beta", [body],
                proc="main", callee_pre=mw_theorem_pre(), callee_post=theorem)
    return ProofScript(logicals=_sorts(MWSV_LOGICALS),
                       entry={"proc": "main", "arg": "0", "result": "res"},
                       root=root)
