"""Shipped case-study sources in concrete syntax.

Procedure parameters beyond the single formal argument are module-level
globals initialized by the harness; the sparse-threshold procedures are
shared verbatim between the interactive threshold case and the
synthetic-database case.
"""

RNM_SOURCE = """\
// report the candidate with the highest noised quality score
var R : set<int>;
var qscore : real[];
var eps : real;
var flag : bool;
var best : real;
var rstar : int;
var r : int;
var noisy : real[];

proc main(w) {
  flag <- true;
  best <- 0;
  while (!isempty(R)) {
    r <- pick(R);
    noisy[r] <$ lap(eps/2, qscore[r]);
    if (noisy[r] > best || flag == true) {
      flag <- false;
      rstar <- r;
      best <- noisy[r];
    }
    R <- remove(R, r);
  }
} return rstar
"""

SV_SOURCE = """\
// interactive above-threshold answering with noisy threshold
var eps : real;
var epsin : real;
var tin : real;
var T : real;
var d : db;
var Qn : int;
var u : int;
var q : query[];
var ans : bool[];
var a : real;
var z : bool;
var x0 : int;
var qq : query;
extern adv(bool) : query;

proc svinit(w) {
  eps <- epsin;
  T <$ lap(eps/2, tin);
} return 0

proc svstep(qq) {
  a <$ lap(eps/4, evalQ(qq, d));
  if (a < T) {
    z <- false;
  } else {
    z <- true;
  }
} return z

proc main(w) {
  x0 <- svinit(0);
  u <- 0;
  ans[u] <- false;
  while (u < Qn) {
    u <- u + 1;
    q[u] <@ adv(ans[u-1]);
    ans[u] <- svstep(q[u]);
  }
} return ans
"""

MWSV_SOURCE = """\
// online released answers via a synthetic database, with threshold
// checks deciding when to update it
var d : db;
var alpha : real;
var eps : real;
var Qn : int;
var X : int;
var n : int;
var eta : real;
var T : real;
var c : real;
var u : int;
var k : int;
var ans : real[];
var q : query[];
var mwdb : db;
var approx : real;
var exact : real;
var errgt : query;
var errlt : query;
var at : bool;
var bt : bool;
var up : query;
var x0 : int;
var epsin : real;
var tin : real;
var Tsv : real;
var eps2 : real;
var a : real;
var z : bool;
var qq : query;
extern adv(real, db) : query;

proc svinit(w) {
  eps2 <- epsin;
  Tsv <$ lap(eps2/2, tin);
} return 0

proc svstep(qq) {
  a <$ lap(eps2/4, evalQ(qq, d));
  if (a < Tsv) {
    z <- false;
  } else {
    z <- true;
  }
} return z

proc main(w) {
  eta <- alpha / (2 * n);
  T <- 2 * alpha;
  c <- 4 * n * n * log(X) / (alpha * alpha);
  u <- 0;
  k <- 0;
  ans[k] <- 0;
  mwdb <- mwInit(eta, X, n);
  epsin <- eps / (4 * c);
  tin <- T;
  x0 <- svinit(0);
  while (k < Qn) {
    k <- k + 1;
    q[k] <@ adv(ans[k-1], mwdb);
    approx <- evalQ(q[k], mwdb);
    exact <- evalQ(q[k], d);
    if (k >= c) {
      ans[k] <- approx;
    } else {
      errgt <- error(q[k], mwdb);
      at <- svstep(errgt);
      errlt <- invQ(error(q[k], mwdb));
      bt <- svstep(errlt);
      if (at == true || bt == true) {
        u <- u + 1;
        if (at == true) {
          up <- q[k];
        } else {
          up <- negQ(q[k]);
        }
        mwdb <- mwStep(mwdb, up, eta, n);
        ans[k] <$ lap(eps/(2*c), exact);
      } else {
        ans[k] <- approx;
      }
    }
  }
} return ans
"""
