"""Embeddings between relativized copies of the kernel machine.

An oracle table X is the kernel table extended by named primitives from
ORACLE_REGISTRY. An embedding X -> Y is specified by a translator for every
source primitive: a Y-program computing it. The simulator index e runs a
source program under Y by rewriting its primitives on the fly, and the
embedding is F(a) = s11(e, a).
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from . import coding
from . import machine as m
from .coding import Nat, pair2
from .machine import (INPUT, IfEq, Fst, Num, Pair, Prim, Run, Snd, s11, s11_expr)


class EmbeddingError(ValueError):
    pass


def _small(fn: Callable[[int], int]) -> Callable[[Nat], Nat]:
    # codes >= 2**64 are pairs; fold their components so the primitive stays total
    def go(x: Nat) -> Nat:
        return coding.from_int(fn(x if type(x) is int else _fold(x)))
    return go


def _fold(x: Nat) -> int:
    return x if type(x) is int else (_fold(coding.fst(x)) * 31 + _fold(coding.snd(x))) % (1 << 61)


ORACLE_REGISTRY: Dict[str, Callable[[Nat], Nat]] = {
    "parity": _small(lambda x: x & 1),
    "successor": _small(lambda x: x + 1),
    "double": _small(lambda x: 2 * x),
    "square": _small(lambda x: x * x),
    "half": _small(lambda x: x // 2),
}


def oracle_table(names: Sequence[str], label: Optional[str] = None) -> m.OracleTable:
    """Kernel table plus the named oracle primitives at ids 64, 65, ..."""
    entries = []
    for i, name in enumerate(names):
        if name not in ORACLE_REGISTRY:
            raise EmbeddingError(f"unknown oracle primitive {name!r}")
        entries.append((m.USER_PRIM_BASE + i, name, ORACLE_REGISTRY[name]))
    if not entries:
        return m.KERNEL
    return m.KERNEL.extend(entries, label or "kernel+" + "+".join(names))


@dataclass(frozen=True)
class EmbeddingSpec:
    """Source and target oracle names plus translator programs (target codes)
    for source oracle primitives. Missing translators default to the target
    primitive of the same name."""

    source: Tuple[str, ...] = ()
    target: Tuple[str, ...] = ()
    translators: Tuple[Tuple[str, Nat], ...] = ()

    @property
    def source_table(self) -> m.OracleTable:
        return oracle_table(self.source)

    @property
    def target_table(self) -> m.OracleTable:
        return oracle_table(self.target)

    def translator_map(self) -> Dict[int, Nat]:
        """Source primitive id -> target program computing it."""
        explicit = dict(self.translators)
        tgt = self.target_table
        out: Dict[int, Nat] = {}
        for pid, _, _ in m.KERNEL.entries:
            out[pid] = m.encode(Prim(pid, INPUT))
        for i, name in enumerate(self.source):
            pid = m.USER_PRIM_BASE + i
            if name in explicit:
                out[pid] = explicit[name]
            elif name in self.target:
                out[pid] = m.encode(Prim(tgt.id_of(name), INPUT))
            else:
                raise EmbeddingError(f"no translator for source primitive {name!r}")
        return out

    def table_code(self) -> Nat:
        return coding.str_code([pair2(k, v) for k, v in sorted(self.translator_map().items())])

    def to_json(self) -> dict:
        return {
            "source": list(self.source),
            "target": list(self.target),
            "translators": {k: coding.nat_to_json(v) for k, v in self.translators},
        }

    @staticmethod
    def from_json(d: Mapping) -> "EmbeddingSpec":
        tr = d.get("translators", {})
        return EmbeddingSpec(tuple(d.get("source", ())), tuple(d.get("target", ())),
                             tuple((k, coding.nat_from_json(v)) for k, v in tr.items()))

    def validate(self, probes: int = 64, fuel: int = 10**4) -> List[str]:
        """Translators must agree with the source primitive on probed inputs."""
        problems = []
        tmap, tgt = self.translator_map(), self.target_table
        for i, name in enumerate(self.source):
            code, fn = tmap[m.USER_PRIM_BASE + i], ORACLE_REGISTRY[name]
            for x in range(probes):
                o = m.eval_code(code, x, fuel, tgt)
                if not isinstance(o, m.Defined):
                    problems.append(f"{name}: translator diverges at {x}")
                    break
                if o.value != fn(x):
                    problems.append(f"{name}: translator gives {o.value} at {x}, want {fn(x)}")
                    break
        return problems


IDENTITY_SPEC = EmbeddingSpec()


def shipped_specs() -> Dict[str, EmbeddingSpec]:
    """Specs used by the checks and the CLI."""
    double_via_add = m.encode(Prim(m.P_ADD, Pair(INPUT, INPUT)))
    return {
        "kernel": IDENTITY_SPEC,
        "parity-to-parity-successor": EmbeddingSpec(("parity",), ("parity", "successor")),
        "double-to-kernel": EmbeddingSpec(("double",), (), (("double", double_via_add),)),
    }


# the simulator

def _s11_shape(y: m.Ast, e: m.Ast, then: Callable[[m.Ast], m.Ast]) -> m.Ast:
    """then(b) if y = s11(e, b), Bot otherwise; checked node by node."""
    r = Snd(y)
    q = Snd(Snd(r))
    checks = [
        (Fst(y), Num(m.T_RUN)),
        (Fst(Fst(r)), Num(m.T_NUM)),
        (Snd(Fst(r)), e),
        (Fst(Snd(r)), Num(m.T_PAIR)),
        (Fst(Fst(q)), Num(m.T_NUM)),
        (Snd(q), Num(m.CODE_INPUT)),
    ]
    out = then(Snd(Fst(q)))
    for a, b in reversed(checks):
        out = IfEq(a, b, out, m.BOT)
    return out


@lru_cache(maxsize=None)
def simulator(table_code: Nat) -> Nat:
    """e with e.<a, s11(e, b)> = s11(e, a.b) (a.b computed under the source
    table through translation), undefined on other inputs."""
    def body(me, arg):
        a, x = Fst(arg), Snd(arg)
        run = lambda b: s11_expr(me, Run(Prim(m.P_TRANSLATE, Pair(Num(table_code), a)), b))
        return _s11_shape(x, me, run)
    return m.recursive(body)


def embed_k1_rel(spec: EmbeddingSpec = IDENTITY_SPEC) -> Callable[[Nat], Nat]:
    """F: source codes -> target codes, F(a) = s11(e, a)."""
    e = simulator(spec.table_code())

    def F(a: Nat) -> Nat:
        return s11(e, a)

    F.simulator = e  # type: ignore[attr-defined]
    F.spec = spec  # type: ignore[attr-defined]
    return F


# the iterator index

@lru_cache(maxsize=None)
def _iterator_body() -> Nat:
    # <n, x>: n if x = 0, else s11(self, n+1)
    def body(me, arg):
        n, x = Fst(arg), Snd(arg)
        return IfEq(x, Num(0), n, s11_expr(me, Prim(m.P_SUCC, n)))
    return m.recursive(body)


def iterator_code(n: int) -> Nat:
    """f(n) = s11(d, n): f(n).0 = n and f(n).x = f(n+1) for x != 0."""
    return s11(_iterator_body(), n)


def iterator_index() -> Nat:
    """e with e^n . 0 = n, e^n the left-nested n-fold self-application."""
    return iterator_code(1)


def iterate_power(e: Nat, n: int, fuel: int = 10**6, oracles=None) -> m.Outcome:
    """e^n with e^0 = I, e^1 = e, e^(k+1) = e^k . e."""
    if n == 0:
        from .pca import i_code
        return m.Defined(i_code(), 0)
    acc, used = e, 0
    for _ in range(n - 1):
        o = m.apply(acc, e, fuel - used, oracles)
        if not isinstance(o, m.Defined):
            return o
        acc, used = o.value, used + o.steps
    return m.Defined(acc, used)


# validation

@dataclass
class EmbeddingReport:
    passed: int = 0
    failed: int = 0
    untestable: int = 0
    divergence_clause: str = "no counterexample found at fuel"
    failures: List[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def to_json(self) -> dict:
        return {
            "passed": self.passed, "failed": self.failed, "untestable": self.untestable,
            "divergence_clause": self.divergence_clause, "failures": self.failures,
        }


def check_embedding(F: Callable[[Nat], Nat], sample_pairs: Sequence[Tuple[Nat, Nat]], fuel: int,
                    source: Optional[m.OracleTable] = None, target: Optional[m.OracleTable] = None,
                    target_fuel: Optional[int] = None) -> EmbeddingReport:
    """Defined source applications must map to defined target applications
    with the matching image. Source divergence at fuel is untestable; if the
    target side still answers, the divergence clause is flagged as suspect."""
    tf = target_fuel if target_fuel is not None else 50 * fuel + 2000
    rep = EmbeddingReport()
    for a, b in sample_pairs:
        src = m.apply(a, b, fuel, source)
        if not isinstance(src, m.Defined):
            rep.untestable += 1
            if isinstance(m.apply(F(a), F(b), tf, target), m.Defined):
                rep.divergence_clause = "suspect: target answered where source ran out of fuel"
            continue
        tgt = m.apply(F(a), F(b), tf, target)
        want = F(src.value)
        if isinstance(tgt, m.Defined) and tgt.value == want:
            rep.passed += 1
        else:
            rep.failed += 1
            got = tgt.value if isinstance(tgt, m.Defined) else None
            rep.failures.append({"a": coding.nat_to_json(a), "b": coding.nat_to_json(b),
                                 "got": None if got is None else coding.show_nat(got)})
    return rep


def check_injective(F: Callable[[Nat], Nat], codes: range) -> bool:
    seen = set()
    for c in codes:
        v = F(c)
        if v in seen:
            return False
        seen.add(v)
    return True


def sample_defined_pairs(count: int, table: m.OracleTable = m.KERNEL, fuel: int = 2000,
                         seed: int = 0, max_depth: int = 3) -> List[Tuple[Nat, Nat]]:
    """Random (program, input) pairs whose application is Defined at fuel."""
    rng = random.Random(seed)
    prim_ids = [pid for pid in table.ids() if pid not in (m.P_TRANSLATE, m.P_CHAIN)]
    out: List[Tuple[Nat, Nat]] = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 200 * count:
            raise EmbeddingError("could not sample enough defined pairs")
        a = m.encode(m.random_ast(rng, max_depth, prim_ids))
        b = rng.randrange(50)
        if isinstance(m.apply(a, b, fuel, table), m.Defined):
            out.append((a, b))
    return out
