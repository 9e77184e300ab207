"""The fourteen acceptance checks, shared by `pca-lab selftest` and the test-suite.

Each check returns a CriterionResult; `run_all` prints one line per check.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

from . import coding
from . import embeddings as E
from . import hierarchy as H
from . import instances as I
from . import k2 as K2
from . import machine as m
from . import ordinals as O
from . import reductions as R
from .coding import pair2
from .pca import (App, DistinctDefined, Elem, EqualDefined, Var, app, bracket_abstract,
                  eval_term, i_code, k_apply, k_code, kleene_eq_bounded, s_code, substitute)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0
    facts: Dict[str, object] = field(default_factory=dict)

    def line(self, timing: bool = True) -> str:
        mark = "PASS" if self.passed else "FAIL"
        out = f"[{mark}] {self.number:2d} {self.title}: {self.detail}"
        return f"{out} ({self.seconds:.1f}s)" if timing else out

    def to_json(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "detail": self.detail, "facts": self.facts}


def _rand_code(rng: random.Random, depth: int = 4) -> coding.Nat:
    return m.encode(m.random_ast(rng, depth))


def _same_outcome(a: m.Outcome, b: m.Outcome) -> bool:
    if isinstance(a, m.Defined) and isinstance(b, m.Defined):
        return a.value == b.value and a.steps == b.steps
    return type(a) is type(b)


# 1

def machine_laws(seed: int = 0) -> CriterionResult:
    rng = random.Random(seed)
    fuels = (10**2, 10**3, 10**4)
    bad: List[str] = []
    for _ in range(1000):
        e, x = _rand_code(rng, 5), rng.randrange(200)
        outs = [m.eval_code(e, x, f) for f in fuels]
        if not _same_outcome(outs[-1], m.eval_code(e, x, fuels[-1])):
            bad.append(f"nondeterministic at e={e}")
        for lo, hi in zip(outs, outs[1:]):
            if isinstance(lo, m.Defined) and not _same_outcome(lo, hi):
                bad.append(f"fuel monotonicity broken at e={e} x={x}")
    for _ in range(100):
        e, y, x = _rand_code(rng, 4), rng.randrange(50), rng.randrange(50)
        direct = m.eval_code(e, pair2(y, x), 10**4)
        curried = m.eval_code(m.s11(e, y), x, 10**4 + 50)
        if isinstance(direct, m.Defined) and not (isinstance(curried, m.Defined) and curried.value == direct.value):
            bad.append(f"s11 law at e={e}")
    for _ in range(100):
        r = m.encode(m.random_ast(rng, 4))
        # body: self on input 0, r on the rest
        body = m.encode(m.IfEq(m.Snd(m.INPUT), m.Num(0), m.Fst(m.INPUT), m.Run(m.Num(r), m.Snd(m.INPUT))))
        template = m.encode(m.s11_expr(m.Num(body), m.INPUT))
        n = m.fix(template)
        x = rng.randrange(5)
        lhs = m.eval_code(n, x, 10**5)
        mid = m.eval_code(template, n, 10**5)
        rhs = m.eval_code(mid.value, x, 10**5) if isinstance(mid, m.Defined) else m.OUT_OF_FUEL
        if not (isinstance(lhs, m.Defined) and isinstance(rhs, m.Defined) and lhs.value == rhs.value) \
                and not (not isinstance(lhs, m.Defined) and not isinstance(rhs, m.Defined)):
            bad.append(f"fix law at r={r} x={x}")
        if x == 0 and isinstance(lhs, m.Defined) and lhs.value != n:
            bad.append("fix: self reference does not return the fixed point")
    return CriterionResult(1, "machine laws", not bad, f"{len(bad)} failures", facts={"failures": bad[:5]})


# 2

def _random_term(rng: random.Random, depth: int, var: str, leaves: Sequence) -> object:
    if depth <= 0 or rng.random() < 0.3:
        return Var(var) if rng.random() < 0.4 else Elem(rng.choice(leaves))
    return App(_random_term(rng, depth - 1, var, leaves), _random_term(rng, depth - 1, var, leaves))


def combinator_laws(seed: int = 0) -> CriterionResult:
    rng = random.Random(seed)
    fuel = 10**5
    distinct = 0
    K, S = k_code(), s_code()
    for _ in range(200):
        a, b, c = (_rand_code(rng, 3) for _ in range(3))
        if isinstance(kleene_eq_bounded(app(K, a, b), Elem(a), fuel), DistinctDefined):
            distinct += 1
        lhs = app(S, a, b, c)
        rhs = App(app(a, c), app(b, c))
        if isinstance(kleene_eq_bounded(lhs, rhs, fuel), DistinctDefined):
            distinct += 1
    leaves = [K, S, i_code(), 0, 1, 2, 7, m.CODE_INPUT]
    beta_bad = both_defined = 0
    for _ in range(100):
        t = _random_term(rng, 4, "x", leaves)
        arg = Elem(rng.choice(leaves))
        v = kleene_eq_bounded(App(bracket_abstract(t, "x"), arg), substitute(t, "x", arg), fuel)
        if isinstance(v, DistinctDefined):
            beta_bad += 1
        elif isinstance(v, EqualDefined):
            both_defined += 1
    ok = distinct == 0 and beta_bad == 0
    return CriterionResult(2, "combinators", ok,
                           f"{distinct} K/S mismatches, {beta_bad} beta mismatches, {both_defined}/100 beta both defined")


# 3

def fixed_constants() -> CriterionResult:
    star, cst = H.estar(), H.cstar()
    bad = 0
    for x in range(101):
        for code in (star, cst):
            o = eval_term(app(code, x, x, x), 10**5)
            if m.apply(code, x, 10**4) != m.Defined(code, m.apply(code, x, 10**4).steps) \
                    or not (isinstance(o, m.Defined) and o.value == code):
                bad += 1
    ok = bad == 0 and star != cst
    return CriterionResult(3, "fixed constants", ok, f"{bad} failures, c_* != e_*: {star != cst}")


# 4

def certified_pairs(count: int = 50, seed: int = 0):
    """(f, g, level, cert) for random programs refuted at level 1 or 2."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        f, g = _rand_code(rng, 3), _rand_code(rng, 3)
        if f == g:
            continue
        level = O.nat(1 + len(out) % 2)
        c = H.refute_sim(f, g, level, depth_budget=8, pool=list(range(6)), allow_divergence=False)
        if c is not None:
            out.append((f, g, level, c))
    return out


def cert_transfer(seed: int = 0) -> CriterionResult:
    bad = 0
    pairs = certified_pairs(50, seed)
    for f, g, level, c in pairs:
        lf, lg = H.addk_lift(f, g)
        up = H.check_cert(lf, lg, O.succ(level), H.lift_cert(c))
        down = H.check_cert(f, g, level, H.unlift_cert(H.lift_cert(c)))
        if up.kind != "Holds" or down.kind != "Holds":
            bad += 1
    return CriterionResult(4, "certificate lift/unlift", bad == 0, f"{len(pairs)} pairs, {bad} failures")


# 5

WITNESS_LEVELS = ("0", "1", "2", "3", "w", "w+1", "w*2", "w^2", "w^2+w")


def witness_pairs(samples: int = 500) -> CriterionResult:
    rows, bad, flagged = [], [], []
    for lit in WITNESS_LEVELS:
        alpha = O.parse(lit)
        f, g = H.witness_pair(alpha)
        cert = H.refute_sim(f, g, alpha)
        verdict = H.check_cert(f, g, alpha, cert) if cert is not None else None
        probe = H.probe_sim(f, g, O.succ(alpha), samples=samples)
        if verdict is None or not verdict.ok:
            bad.append(f"{lit}: no certificate")
        elif verdict.kind == "HoldsModuloDivergence":
            flagged.append(lit)
        if probe.counterexamples_found:
            bad.append(f"{lit}+1: {probe.counterexamples_found} counterexamples")
        rows.append({"alpha": lit, "verdict": verdict.kind if verdict else None,
                     "proved_level": O.show(verdict.proved_level) if verdict else None,
                     "counterexamples": probe.counterexamples_found})
    detail = f"{len(WITNESS_LEVELS) - len(bad)}/{len(WITNESS_LEVELS)} levels clean"
    if flagged:
        detail += f", modulo divergence at {','.join(flagged)}"
    return CriterionResult(5, "witness pairs", not bad, detail, facts={"rows": rows, "problems": bad})


# 6

def _in_range_of_G(g: O.Ord) -> bool:
    lam, k = O.split_finite(g)
    return k <= 1


def fg_table() -> CriterionResult:
    notations = O.enumerate_below(4, 3)
    inv_bad = [O.show(a) for a in notations if O.F(O.G(a)) != a]
    shape_bad = []
    for a in notations:
        g = O.G(a)
        lam, k = O.split_finite(a)
        if not _in_range_of_G(g):
            shape_bad.append(O.show(a))
        elif not a.is_zero and a != O.ONE:
            want = O.Kind.LIMIT if O.parity(a) is O.Parity.EVEN else O.Kind.SUCC
            if O.kind(g) is not want:
                shape_bad.append(O.show(a))
    mono_bad = sum(1 for a, b in zip(notations, notations[1:]) if not O.G(a) < O.G(b))
    table_bad = []
    for k in range(1, 6):
        wk = O.omega_pow(O.ONE, k)
        if O.add(O.ONE, O.F(wk)) != O.nat(2 * k + 1):
            table_bad.append(f"w*{k}")
    for k in range(6):
        for n in range(1, 6):
            a = O.add(O.omega_pow(O.ONE, k) if k else O.ZERO, O.nat(n))
            want = 2 * k + 2 if k else 2
            if O.add(O.ONE, O.F(a)) != O.nat(want):
                table_bad.append(O.show(a))
    ok = not (inv_bad or shape_bad or mono_bad or table_bad)
    return CriterionResult(6, "F/G bookkeeping", ok,
                           f"{len(notations)} notations; F(G(a)) != a: {len(inv_bad)}, range shape: {len(shape_bad)},"
                           f" monotonicity: {mono_bad}, table: {len(table_bad)}",
                           facts={"inverse": inv_bad[:5], "shape": shape_bad[:5], "table": table_bad})


# 7

def random_tree(rng: random.Random, max_nodes: int = 40, width: int = 4, depth: int = 5) -> O.FiniteTree:
    nodes = {()}
    target = rng.randint(1, max_nodes)
    while len(nodes) < target:
        parent = rng.choice(sorted(nodes))
        if len(parent) < depth:
            nodes.add(parent + (rng.randrange(width),))
    return O.FiniteTree(nodes)


def kb_brute_rank(tree: O.FiniteTree) -> Dict[tuple, int]:
    return {s: sum(1 for t in tree.nodes if O.kb_less(t, s)) for s in tree.nodes}


def kb_machinery(seed: int = 0) -> CriterionResult:
    rng = random.Random(seed)
    rank_bad = 0
    for _ in range(100):
        tree = random_tree(rng)
        _, ranks = O.kb_rank(tree)
        if ranks != kb_brute_rank(tree):
            rank_bad += 1
    chain_bad = []
    width = 3
    for n in (1, 2, 3):
        f, g = H.nonext_pair()
        for _ in range(n - 1):
            f, g = H.addk_lift(f, g)
        res = H.distinguishing_tree(f, g, depth=n, width=width)
        want = {s for L in range(n) for s in _strings(width, L)}
        if not res["complete"] or set(res["tree"]) != want or res["bound"] != n:
            chain_bad.append(n)
    return CriterionResult(7, "Kleene-Brouwer machinery", rank_bad == 0 and not chain_bad,
                           f"{rank_bad}/100 rank mismatches, chain failures: {chain_bad}")


def _strings(width: int, length: int):
    if length == 0:
        return [()]
    return [s + (x,) for s in _strings(width, length - 1) for x in range(width)]


# 8

def wf_reduction_check(seed: int = 0) -> CriterionResult:
    rng = random.Random(seed)
    star = H.estar()
    bad = []
    width = 3
    for t in range(20):
        tree = random_tree(rng, max_nodes=15, width=width, depth=4)
        dec = H.finite_tree_decider(tree)
        values = {(): H.wf_reduction(dec)}
        for sigma in tree:  # breadth-first: parents come first
            v = values[sigma]
            if v == star:
                bad.append(f"tree {t}: e_* inside the tree at {sigma}")
            for x in range(width + 1):
                o = m.apply(v, x, 10**6)
                child = sigma + (x,)
                if not isinstance(o, m.Defined):
                    bad.append(f"tree {t}: undefined at {child}")
                    continue
                if child in tree:
                    values[child] = o.value
                elif o.value != star:
                    bad.append(f"tree {t}: not e_* at first exit {child}")
    v = H.wf_reduction(H.zero_spine_decider())
    for step in range(10):
        if v == star:
            bad.append(f"spine: e_* at step {step}")
            break
        o = m.apply(v, 0, 10**6)
        if not isinstance(o, m.Defined):
            bad.append(f"spine: undefined at step {step}")
            break
        v = o.value
    return CriterionResult(8, "well-foundedness reduction", not bad, f"{len(bad)} failures",
                           facts={"failures": bad[:5]})


# 9

def check_instance(inst: I.Instance, probes: int = 300) -> List[str]:
    f, g = inst.pair()
    problems = []
    for lvl in inst.levels("cert_levels"):
        c = H.refute_sim(f, g, lvl, pool=list(inst.pool), min_cut=inst.min_cut)
        if c is None:
            problems.append(f"no certificate at {O.show(lvl)}")
        elif not H.check_cert(f, g, lvl, c).ok:
            problems.append(f"certificate at {O.show(lvl)} does not verify")
    for lvl in inst.levels("no_cert_levels"):
        if H.refute_sim(f, g, lvl, pool=list(inst.pool), min_cut=inst.min_cut) is not None:
            problems.append(f"unexpected certificate at {O.show(lvl)}")
    for lvl in inst.levels("clean_levels"):
        rep = H.probe_sim(f, g, lvl, samples=probes, pool=list(inst.pool))
        if rep.counterexamples_found:
            problems.append(f"{rep.counterexamples_found} probe counterexamples at {O.show(lvl)}")
    return problems


def reduction_builders(probes: int = 300) -> CriterionResult:
    problems = {}
    insts = I.reduction_instances()
    for name, inst in insts.items():
        p = check_instance(inst, probes)
        if p:
            problems[name] = p
    return CriterionResult(9, "reduction builders", not problems,
                           f"{len(insts) - len(problems)}/{len(insts)} instances as stated",
                           facts={"problems": problems})


# 10

def combine_examples() -> List[tuple]:
    """(name, passed) for the six combine2 / combine_omega examples."""
    star, cst = H.estar(), H.cstar()
    fuel = 10**5
    out = []
    out.append(("combine2(e_*, c_*) = e_*", R.combine2(star, cst) == star))

    w2 = R.combine2(cst, cst)
    c = H.refute_sim(w2, star, O.ZERO)
    out.append(("combine2(c_*, c_*) != e_* with a level-0 certificate",
                w2 != star and c is not None and H.check_cert(w2, star, O.ZERO, c).kind == "Holds"))

    kc = k_apply(cst)
    elems = [cst, kc, k_apply(kc), m.const_code(5)]
    thread_ok = True
    for a in elems:
        for b in elems:
            for u, v in ((0, 0), (1, 3), (4, 2)):
                au, bv = m.apply(a, u, fuel), m.apply(b, v, fuel)
                got = m.apply(R.combine2(a, b), pair2(u, v), fuel)
                if not (isinstance(got, m.Defined) and got.value == R.combine2(au.value, bv.value)):
                    thread_ok = False
    out.append(("combine2(a,b).<u,v> = combine2(a.u, b.v)", thread_ok))

    w = R.combine_omega(m.const_code(star))
    out.append(("all a_n = e_*: w.u = e_*",
                all(m.apply(w, u, fuel) == m.Defined(star, m.apply(w, u, fuel).steps) for u in range(20))))

    wc = R.combine_omega(m.const_code(cst))
    c = H.refute_sim(wc, star, O.ZERO)
    out.append(("all a_n = c_*: w != e_* with a level-0 certificate",
                wc != star and c is not None and H.check_cert(wc, star, O.ZERO, c).kind == "Holds"))

    seq = m.const_code(kc)  # a_n = K c_*
    wk = R.combine_omega(seq)
    ok = True
    for v0, v1 in ((0, 0), (3, 1), (7, 5)):
        o0 = m.apply(wk, v0, fuel)
        o1 = m.apply(o0.value, v1, fuel) if isinstance(o0, m.Defined) else o0
        ok &= isinstance(o0, m.Defined) and o0.value == R.combine_state(seq, [kc])
        ok &= isinstance(o1, m.Defined) and o1.value == R.combine_state(seq, [cst, kc])
    out.append(("threading: w.v0.v1 = h(e, <a0 v1, a1>)", ok))
    return out


def combine_check() -> CriterionResult:
    rows = combine_examples()
    failed = [name for name, ok in rows if not ok]
    return CriterionResult(10, "combine2 / combine_omega", not failed,
                           f"{len(rows) - len(failed)}/{len(rows)} examples", facts={"failed": failed})


# 11

def helper_check(count: int = 10) -> CriterionResult:
    bad = []
    for level in (1, 2, 3):
        for inst in I.helper_instances(level, count):
            found = I.helper_verdict(inst) is not None
            if found != inst.expect_cert:
                bad.append(f"level {level} z={inst.z}")
    return CriterionResult(11, "hardness helper", not bad, f"{3 * count - len(bad)}/{3 * count} instances",
                           facts={"mismatches": bad})


# 12

def embedding_check(pairs: int = 200) -> CriterionResult:
    it = E.iterator_index()
    iter_bad = []
    for n in range(26):
        o = E.iterate_power(it, n)
        r = m.apply(o.value, 0, 10**6) if isinstance(o, m.Defined) else o
        if not (isinstance(r, m.Defined) and r.value == n):
            iter_bad.append(n)
    failed = 0
    for name, spec in E.shipped_specs().items():
        F = E.embed_k1_rel(spec)
        sample = E.sample_defined_pairs(pairs, spec.source_table, seed=1)
        rep = E.check_embedding(F, sample, 2000, spec.source_table, spec.target_table)
        failed += rep.failed + (pairs - rep.passed)
    inj = E.check_injective(E.embed_k1_rel(), range(10**4))
    ok = not iter_bad and failed == 0 and inj
    return CriterionResult(12, "embeddings", ok,
                           f"iterator failures {iter_bad}, preservation failures {failed}, injective {inj}")


# 13

def k2_check(n: int = 64, stages: int = 64, seed: int = 0) -> CriterionResult:
    emb = K2.embed_k1_to_k2(n, stages)
    triples = K2.defined_triples(emb)
    rep = K2.check_k1k2(emb, triples, gs_per=5, seed=seed, divergent=K2.divergent_pairs(emb)[:50])
    rng = random.Random(seed)
    alt_bad = 0
    prims = tuple(range(8))
    for i in range(100):
        tail = [rng.randrange(100) for _ in range(8)]
        gs = [rng.randrange(100) for _ in range(8)]
        g = lambda k, gs=gs: gs[k] if k < len(gs) else 0
        x = rng.randrange(16)
        if i % 2 == 0:
            code = m.encode(m.random_ast(rng, 4, prims))
            f = lambda k, code=code, tail=tail: code if k == 0 else tail[k % len(tail)]
            want = m.eval_code(code, x, 10**4)
        else:
            q = rng.randrange(16)
            code = m.encode(m.Prim(K2.JOIN_PRIM, m.Num(q)))
            f = lambda k, code=code, tail=tail: code if k == 0 else tail[k % len(tail)]
            want = m.Defined(f(q // 2) if q % 2 == 0 else g(q // 2), 0)
        got = K2.apply_alt(f, g, x, 10**4)
        if isinstance(want, m.Defined) != isinstance(got, m.Defined) or \
                (isinstance(got, m.Defined) and got.value != want.value):
            alt_bad += 1
    ok = rep.ok and rep.defined_triples >= 50 and alt_bad == 0
    return CriterionResult(13, "K2 embedding", ok,
                           f"{rep.defined_triples} triples, {rep.checks} checks, {len(rep.failures)} failures,"
                           f" {rep.monotone_violations} monotone violations, apply_alt mismatches {alt_bad}",
                           facts=rep.to_json())


# 14

def sampled_pairs(count: int = 50, seed: int = 0):
    """Mix of extensionally equal, level-0 distinct and random program pairs."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        kind = len(out) % 3
        p = _rand_code(rng, 3)
        if kind == 0:
            out.append((p, m.pad(p, 1 + rng.randrange(3))))
        elif kind == 1:
            out.append((m.const_code(rng.randrange(4)), m.const_code(rng.randrange(4))))
        else:
            out.append((p, _rand_code(rng, 3)))
    return out


def defining_formula_check(seed: int = 0, witness_bound: int = 12, forall_bound: int = 80) -> CriterionResult:
    """The universal variable of the level-1 formula ranges over n = <x, k>
    (argument x, step budget k), so the matching evidence is Kleene equality
    of u.x and v.x at fuel k for every n < forall_bound."""
    phi = R.defining_formula(O.ONE)
    contradictions, counts = [], {}
    for u, v in sampled_pairs(50, seed):
        t = R.eval_formula_bounded(phi, pair2(u, v), witness_bound=witness_bound,
                                   forall_bound=forall_bound, fuel=10**5)
        counts[t.value] = counts.get(t.value, 0) + 1
        evidence = []
        for n in range(forall_bound):
            x, k = coding.unpair2(n)
            evidence.append(kleene_eq_bounded(app(u, x), app(v, x), k))
        distinct = any(isinstance(e, DistinctDefined) for e in evidence)
        if t in (R.Truth.TRUE, R.Truth.TRUE_WITHIN_BOUNDS) and distinct:
            contradictions.append((u, v, t.value))
        if t is R.Truth.FALSE and not distinct:
            contradictions.append((u, v, t.value))
    return CriterionResult(14, "defining formula vs Kleene evidence", not contradictions,
                           f"{len(contradictions)} contradictions, verdicts {dict(sorted(counts.items()))}")


CRITERIA: Dict[int, Callable[[], CriterionResult]] = {
    1: machine_laws, 2: combinator_laws, 3: fixed_constants, 4: cert_transfer,
    5: witness_pairs, 6: fg_table, 7: kb_machinery, 8: wf_reduction_check,
    9: reduction_builders, 10: combine_check, 11: helper_check, 12: embedding_check,
    13: k2_check, 14: defining_formula_check,
}


def run_one(number: int) -> CriterionResult:
    t = time.perf_counter()
    try:
        res = CRITERIA[number]()
    except Exception as exc:  # a crash is a failed criterion, not a crashed suite
        res = CriterionResult(number, CRITERIA[number].__name__, False, f"error: {exc!r}")
    res.seconds = time.perf_counter() - t
    return res


def run_all(selected: Optional[Sequence[int]] = None, echo: Optional[Callable[[str], None]] = print) -> List[CriterionResult]:
    out = []
    for n in selected or sorted(CRITERIA):
        res = run_one(n)
        if echo:
            echo(res.line())
        out.append(res)
    return out
