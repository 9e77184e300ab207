"""The extensionality relations ~_alpha on K1 as bounded procedures.

Refutations are finite certificates; agreement is only ever sampled.

Fuel in certificates is per application: every application along a
certificate's argument path gets the stamped budget.

Limit levels: s !~_lam t means s !~_beta t for every beta < lam, which no
finite object can show. A Drop(beta, c) node proves the refutation at the
single point beta, so check_cert reports the level a certificate actually
proves (`proved_level`) next to the level it was checked against. Search
and probes descend a limit lam at the cofinal point lam[n] with
n = 1 + (largest small numeral consumed so far on the path); call this the
cofinal cut.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

from . import coding
from . import machine as m
from . import ordinals as O
from .coding import Nat
from .pca import (App, DistinctDefined, Elem, Term, Unknown, eval_term, k_apply, verdict_of,
                  K_INNER)

DEFAULT_FUEL = 20_000


# distinguished constants

@lru_cache(maxsize=None)
def _self_template() -> Nat:
    # n |-> code of the constant program returning n
    return m.encode(m.num_code_expr(m.INPUT))


@lru_cache(maxsize=None)
def estar() -> Nat:
    """e_* with e_*.x = e_*; padded, so it lies outside the range of s11."""
    return m.fix(_self_template(), pad_index=1)


@lru_cache(maxsize=None)
def cstar() -> Nat:
    """Same behaviour as e_*, different code."""
    return m.fix(_self_template(), pad_index=2)


def selfrep_pair() -> Tuple[Nat, Nat]:
    """Distinct hereditarily total f, g with f.x = f and g.x = g."""
    return estar(), cstar()


NONEXT_BASE = m.CODE_INPUT  # the identity program


def nonext_pair() -> Tuple[Nat, Nat]:
    """Two codes of the identity: unequal as elements, equal as functions."""
    return NONEXT_BASE, m.pad(NONEXT_BASE, 1)


def addk_lift(f: Nat, g: Nat) -> Tuple[Nat, Nat]:
    return k_apply(f), k_apply(g)


# witness pairs by effective transfinite recursion

P_KIND, P_OPRED, P_FUND = 32, 33, 34


def _witness_body(me: m.Ast, arg: m.Ast) -> m.Ast:
    f0, g0 = nonext_pair()
    mode, payload = m.Fst(arg), m.Snd(arg)
    side = mode
    beta = payload
    gen = m.IfEq(
        m.Prim(P_KIND, beta), m.Num(0),
        m.IfEq(side, m.Num(0), m.Num(f0), m.Num(g0)),
        m.IfEq(
            m.Prim(P_KIND, beta), m.Num(1),
            m.s11_expr(m.Num(K_INNER), m.Run(me, m.Pair(side, m.Prim(P_OPRED, beta)))),
            m.s11_expr(m.s11_expr(me, m.Num(2)), m.Pair(side, beta)),
        ),
    )
    # mode 2: payload = <<side, beta>, n>  ->  witness(side, beta[n])
    sb, n = m.Fst(payload), m.Snd(payload)
    limit_step = m.Run(me, m.Pair(m.Fst(sb), m.Prim(P_FUND, m.Pair(m.Snd(sb), n))))
    return m.IfEq(mode, m.Num(2), limit_step, gen)


@lru_cache(maxsize=None)
def witness_generator() -> Nat:
    """W with W.<side, code(beta)> = code of the side-th witness for beta."""
    return m.recursive(_witness_body)


MAX_WITNESS = O.omega_pow(O.OMEGA)


def _witness(alpha: O.Ord, side: int) -> Nat:
    if alpha >= MAX_WITNESS:
        raise O.OrdinalError(f"{alpha} is beyond the configured notation bound w^w")
    k = O.kind(alpha)
    if k is O.Kind.ZERO:
        return nonext_pair()[side]
    if k is O.Kind.SUCC:
        return k_apply(_witness(O.pred(alpha), side))
    return m.s11(m.s11(witness_generator(), 2), coding.pair2(side, O.ord_code(alpha)))


def witness_pair(alpha: O.Ord) -> Tuple[Nat, Nat]:
    """(f, g) with f !~_alpha g and f ~_{alpha+1} g."""
    return _witness(alpha, 0), _witness(alpha, 1)


# certificates

@dataclass(frozen=True)
class Leaf0:
    fuel: int
    v1: Nat
    v2: Nat


@dataclass(frozen=True)
class LeafDiv:
    side: int
    fuel: int
    v_other: Nat


@dataclass(frozen=True)
class Step:
    x: Nat
    inner: "Cert"


@dataclass(frozen=True)
class Drop:
    beta: O.Ord
    inner: "Cert"


Cert = Union[Leaf0, LeafDiv, Step, Drop]


def cert_to_json(c: Cert) -> dict:
    if isinstance(c, Leaf0):
        return {"kind": "Leaf0", "fuel": c.fuel, "v1": coding.nat_to_json(c.v1), "v2": coding.nat_to_json(c.v2)}
    if isinstance(c, LeafDiv):
        return {"kind": "LeafDiv", "side": c.side, "fuel": c.fuel, "v_other": coding.nat_to_json(c.v_other)}
    if isinstance(c, Step):
        return {"kind": "Step", "x": coding.nat_to_json(c.x), "inner": cert_to_json(c.inner)}
    return {"kind": "Drop", "beta": O.show(c.beta), "inner": cert_to_json(c.inner)}


def cert_from_json(d: dict) -> Cert:
    k = d.get("kind")
    if k == "Leaf0":
        return Leaf0(int(d["fuel"]), coding.nat_from_json(d["v1"]), coding.nat_from_json(d["v2"]))
    if k == "LeafDiv":
        return LeafDiv(int(d["side"]), int(d["fuel"]), coding.nat_from_json(d["v_other"]))
    if k == "Step":
        return Step(coding.nat_from_json(d["x"]), cert_from_json(d["inner"]))
    if k == "Drop":
        return Drop(O.parse(d["beta"]), cert_from_json(d["inner"]))
    raise ValueError(f"unknown certificate node {k!r}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def cert_depth(c: Cert) -> int:
    n = 0
    while isinstance(c, (Step, Drop)):
        n += 1
        c = c.inner
    return n


@dataclass(frozen=True)
class CertVerdict:
    kind: str  # Holds | HoldsModuloDivergence | Fails
    reason: str = ""
    proved_level: Optional[O.Ord] = None
    limit_drops: Tuple[Tuple[O.Ord, O.Ord], ...] = ()

    @property
    def ok(self) -> bool:
        return self.kind != "Fails"

    @property
    def exact(self) -> bool:
        """True when no limit level was passed through a single Drop."""
        return self.ok and not self.limit_drops

    def to_json(self) -> dict:
        return {
            "verdict": self.kind,
            "reason": self.reason,
            "proved_level": O.show(self.proved_level) if self.proved_level is not None else None,
            "limit_drops": [[O.show(a), O.show(b)] for a, b in self.limit_drops],
        }


def _as_term(s) -> Term:
    return s if isinstance(s, (Elem, App)) else Elem(s)


def _step_state(v: Optional[Nat], x: Nat, fuel: int, oracles) -> Optional[Nat]:
    if v is None:
        return None
    o = m.apply(v, x, fuel, oracles)
    return o.value if isinstance(o, m.Defined) else None


def _start_state(t: Term, fuel: int, oracles) -> Optional[Nat]:
    if isinstance(t, Elem):
        return t.c
    o = eval_term(t, fuel, oracles)
    return o.value if isinstance(o, m.Defined) else None


def check_cert(s, t, alpha: O.Ord, cert: Cert, fuel_cap: int = 10**6,
               oracles: Optional[m.OracleTable] = None) -> CertVerdict:
    """Re-verify a refutation certificate of s ~_alpha t."""
    s, t = _as_term(s), _as_term(t)
    args: List[Nat] = []
    drops = []
    level = alpha
    node = cert
    while isinstance(node, (Step, Drop)):
        k = O.kind(level)
        if isinstance(node, Step):
            if k is not O.Kind.SUCC:
                return CertVerdict("Fails", f"shape: Step at level {O.show(level)}")
            args.append(node.x)
            level = O.pred(level)
        else:
            if k is not O.Kind.LIMIT:
                return CertVerdict("Fails", f"shape: Drop at level {O.show(level)}")
            if not node.beta < level:
                return CertVerdict("Fails", f"shape: Drop to {O.show(node.beta)} not below {O.show(level)}")
            drops.append((level, node.beta))
            level = node.beta
        node = node.inner
    if not level.is_zero:
        return CertVerdict("Fails", f"shape: leaf at level {O.show(level)}")
    if node.fuel > fuel_cap:
        return CertVerdict("Fails", f"leaf fuel {node.fuel} exceeds cap {fuel_cap}")
    sv = _start_state(s, node.fuel, oracles)
    tv = _start_state(t, node.fuel, oracles)
    for x in args:
        sv = _step_state(sv, x, node.fuel, oracles)
        tv = _step_state(tv, x, node.fuel, oracles)
    proved = _proved_level(cert)
    if isinstance(node, Leaf0):
        if sv is None or tv is None:
            return CertVerdict("Fails", "leaf: a side is undefined at the stated fuel")
        if sv != node.v1 or tv != node.v2:
            return CertVerdict("Fails", "leaf: values differ from the certificate")
        if sv == tv:
            return CertVerdict("Fails", "leaf: values are equal")
        return CertVerdict("Holds", "", proved, tuple(drops))
    if node.side not in (1, 2):
        return CertVerdict("Fails", "leaf: side must be 1 or 2")
    div, other = (sv, tv) if node.side == 1 else (tv, sv)
    if div is not None:
        return CertVerdict("Fails", "leaf: the divergent side is defined")
    if other is None or other != node.v_other:
        return CertVerdict("Fails", "leaf: the defined side does not match")
    return CertVerdict("HoldsModuloDivergence", "assumes divergence at the LeafDiv side", proved, tuple(drops))


def _proved_level(c: Cert) -> O.Ord:
    if isinstance(c, Step):
        return O.succ(_proved_level(c.inner))
    if isinstance(c, Drop):
        return _proved_level(c.inner)
    return O.ZERO


def lift_cert(c: Cert, x0: Nat = 0) -> Cert:
    """Certificate for K f !~_{alpha+1} K g from one for f !~_alpha g."""
    return Step(x0, c)


def unlift_cert(c: Cert) -> Cert:
    if not isinstance(c, Step):
        raise ValueError("not a lifted certificate")
    return c.inner


# pools and cuts

def default_pool(bound: int = 4, extra: Sequence[Nat] = ()) -> List[Nat]:
    pool = list(range(bound + 1)) + [estar(), cstar()]
    for x in extra:
        if x not in pool:
            pool.append(x)
    return pool


def _cut(seen: int) -> int:
    return seen + 1


def _bump(seen: int, x: Nat) -> int:
    return max(seen, x) if type(x) is int and x < 1 << 20 else seen


# refutation search

def refute_sim(s, t, alpha: O.Ord, depth_budget: int = 64, pool: Optional[Sequence[Nat]] = None,
               fuel: int = DEFAULT_FUEL, oracles: Optional[m.OracleTable] = None,
               allow_divergence: bool = True, min_cut: int = 0) -> Optional[Cert]:
    """Bounded search for a certificate of s !~_alpha t. Incomplete by design."""
    pool = list(pool) if pool is not None else default_pool()
    if not pool:
        raise ValueError("pool must be nonempty")
    memo: Dict[tuple, Tuple[int, Optional[Cert]]] = {}
    sv = _start_state(_as_term(s), fuel, oracles)
    tv = _start_state(_as_term(t), fuel, oracles)

    def key(v):
        return ("u",) if v is None else v

    def go(a, b, level: O.Ord, seen: int, budget: int) -> Optional[Cert]:
        if a is None and b is None:
            return None
        if a is not None and a == b:
            return None
        k = O.kind(level)
        if k is O.Kind.ZERO:
            if a is not None and b is not None:
                return Leaf0(fuel, a, b)
            if not allow_divergence:
                return None
            return LeafDiv(1, fuel, b) if a is None else LeafDiv(2, fuel, a)
        if budget <= 0:
            return None
        mk = (key(a), key(b), level, seen)
        if mk in memo:
            old_budget, old = memo[mk]
            if old is not None or old_budget >= budget:
                return old
        memo[mk] = (budget, None)
        res = None
        if k is O.Kind.LIMIT:
            beta = O.fund_seq(level, max(_cut(seen), min_cut))
            inner = go(a, b, beta, seen, budget - 1)
            res = Drop(beta, inner) if inner is not None else None
        else:
            below = O.pred(level)
            for x in pool:
                na = _step_state(a, x, fuel, oracles)
                nb = _step_state(b, x, fuel, oracles)
                inner = go(na, nb, below, _bump(seen, x), budget - 1)
                if inner is not None:
                    res = Step(x, inner)
                    break
        memo[mk] = (budget, res)
        return res

    return go(sv, tv, alpha, -1, depth_budget)


# sampling probes

@dataclass
class ProbeReport:
    counterexamples_found: int
    tuples_tried: int
    divergence_asymmetric: int = 0
    examples: List[List[Nat]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "counterexamples_found": self.counterexamples_found,
            "tuples_tried": self.tuples_tried,
            "divergence_asymmetric": self.divergence_asymmetric,
            "examples": [[coding.nat_to_json(x) for x in e] for e in self.examples],
        }


def probe_sim(s, t, alpha: O.Ord, samples: int = 500, fuel: int = DEFAULT_FUEL,
              pool: Optional[Sequence[Nat]] = None, seed: int = 0,
              oracles: Optional[m.OracleTable] = None, max_len: int = 256) -> ProbeReport:
    """Walk random argument tuples down to level 0 and count unequal endings."""
    pool = list(pool) if pool is not None else default_pool()
    rng = random.Random(seed)
    s0 = _start_state(_as_term(s), fuel, oracles)
    t0 = _start_state(_as_term(t), fuel, oracles)
    found = asym = 0
    examples: List[List[Nat]] = []
    cache: Dict[tuple, Optional[Nat]] = {}

    def step(v, x):
        if v is None:
            return None
        ck = (v, x)
        if ck not in cache:
            cache[ck] = _step_state(v, x, fuel, oracles)
        return cache[ck]

    for _ in range(samples):
        a, b, level, seen = s0, t0, alpha, -1
        used: List[Nat] = []
        hit = False
        for _ in range(max_len):
            if (a is None and b is None) or (a is not None and a == b):
                break
            k = O.kind(level)
            if k is O.Kind.ZERO:
                hit = True
                if a is None or b is None:
                    asym += 1
                break
            if k is O.Kind.LIMIT:
                level = O.fund_seq(level, _cut(seen))
                continue
            x = pool[rng.randrange(len(pool))]
            used.append(x)
            seen = _bump(seen, x)
            a, b = step(a, x), step(b, x)
            level = O.pred(level)
        if hit:
            found += 1
            if len(examples) < 5:
                examples.append(used)
    return ProbeReport(found, samples, asym, examples)


# Kleene-Brouwer view

def distinguishing_tree(s, t, depth: int, width: int, fuel: int = DEFAULT_FUEL,
                        oracles: Optional[m.OracleTable] = None) -> dict:
    """Label strings sigma (|sigma| <= depth, entries < width) by the verdict on
    (s sigma, t sigma); if the distinct-labelled part is a complete finite tree,
    rank it."""
    labels: Dict[Tuple[int, ...], object] = {}
    s0 = _start_state(_as_term(s), fuel, oracles)
    t0 = _start_state(_as_term(t), fuel, oracles)
    frontier = [((), s0, t0)]
    complete = True
    while frontier:
        nxt = []
        for sigma, a, b in frontier:
            v = verdict_of(m.Defined(a, 0) if a is not None else m.OUT_OF_FUEL,
                           m.Defined(b, 0) if b is not None else m.OUT_OF_FUEL)
            labels[sigma] = v
            if isinstance(v, Unknown):
                complete = False
            if isinstance(v, DistinctDefined):
                if len(sigma) == depth:
                    complete = False
                    continue
                for x in range(width):
                    nxt.append((sigma + (x,), _step_state(a, x, fuel, oracles), _step_state(b, x, fuel, oracles)))
        frontier = nxt
    nodes = [sg for sg, v in labels.items() if isinstance(v, DistinctDefined)]
    out = {"labels": labels, "tree": nodes, "complete": complete}
    if complete:
        tree = O.FiniteTree(nodes)
        if nodes:
            total, rank_of = O.kb_rank(tree)
            out.update(kb_total=total, kb_rank=rank_of, kb_bound=total,
                       bound=tree.height_rank()[()] + 1)
        else:
            out.update(kb_total=0, kb_rank={}, kb_bound=0, bound=0)
    return out


# well-foundedness reduction

def finite_tree_decider(tree: O.FiniteTree) -> Nat:
    """Program returning 1 on codes of members of the tree, else 0."""
    cases = [(coding.str_code(sg), m.Num(1)) for sg in tree]
    return m.encode(m.table_lookup(m.INPUT, cases, m.Num(0)))


@lru_cache(maxsize=None)
def zero_spine_decider() -> Nat:
    """Decides the infinite tree of all-zero strings."""
    def body(me, arg):
        return m.IfEq(arg, m.Num(0), m.Num(1),
                      m.IfEq(m.Prim(m.P_STR_LAST, arg), m.Num(0),
                             m.Run(me, m.Prim(m.P_STR_INIT, arg)), m.Num(0)))
    return m.recursive(body)


@lru_cache(maxsize=None)
def _wf_extend_program() -> Nat:
    # <<i, <e, sigma>>, x>  ->  Phi_i(<e, sigma^x>)
    head = m.Fst(m.INPUT)
    i, rest = m.Fst(head), m.Snd(head)
    e, sigma = m.Fst(rest), m.Snd(rest)
    return m.encode(m.Run(i, m.Pair(e, m.AppendElem(sigma, m.Snd(m.INPUT)))))


@lru_cache(maxsize=None)
def wf_index() -> Nat:
    """i with Phi_i(e, sigma) = e_* off the tree and g(i, e, sigma) on it."""
    star = estar()
    g = _wf_extend_program()

    def body(me, arg):
        member = m.Run(m.Fst(arg), m.Snd(arg))
        return m.IfEq(member, m.Num(1), m.s11_expr(m.Num(g), m.Pair(me, arg)), m.Num(star))

    return m.recursive(body)


def wf_g(e: Nat, sigma: Nat) -> Nat:
    return m.s11(_wf_extend_program(), coding.pair2(wf_index(), coding.pair2(e, sigma)))


def wf_reduction(tree_decider: Nat, sigma: Sequence[int] = (), fuel: int = 10**6) -> Nat:
    """f(e, sigma) = Phi_i(e, sigma); f(e, ()) is the reduction's output."""
    o = m.eval_code(wf_index(), coding.pair2(tree_decider, coding.str_code(sigma)), fuel)
    if not isinstance(o, m.Defined):
        raise RuntimeError("tree decider did not answer within fuel")
    return o.value
