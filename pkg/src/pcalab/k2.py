"""Kleene's second model at finite precision.

An element of Baire space is read as a code for a monotone map on finite
strings: entry 0 is a free head value and every later entry codes a pair
sigma |-> tau as pair2(str_code(sigma), str_code(tau)). Earlier entries win
when sigma repeats. A finite prefix codes a finite partial map; the
prefix <n> codes the empty map.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

from . import coding
from . import machine as m
from .coding import Nat, pair2, str_code, str_decode

Str = Tuple[Nat, ...]


class K2Error(ValueError):
    pass


def is_prefix(a: Sequence, b: Sequence) -> bool:
    return len(a) <= len(b) and tuple(b[:len(a)]) == tuple(a)


class K2Approx:
    """A finite prefix of a K2 element: head value plus ordered map entries.

    Strings are kept as tuples; an entry is the pair (sigma, tau) and
    entry_code gives its numeric coding on demand."""

    __slots__ = ("head", "entries", "_string", "_map")

    def __init__(self, head: Nat, entries: Tuple[Tuple[Str, tuple], ...] = (), check: bool = True):
        self.head = head
        self.entries = tuple(entries)
        self._string = (head,) + self.entries
        mp: Dict[Str, tuple] = {}
        for sg, tau in self.entries:
            mp.setdefault(sg, tau)
        self._map = mp
        if check:
            problems = monotonicity_violations(self)
            if problems:
                raise K2Error(f"non-monotone map: {problems[0]}")

    @property
    def mapping(self) -> Dict[Str, tuple]:
        return self._map

    def as_string(self) -> tuple:
        return self._string

    def extend(self, more: Sequence[Tuple[Str, tuple]]) -> "K2Approx":
        known = self._map
        fresh = tuple((sg, t) for sg, t in more if sg not in known)
        return K2Approx(self.head, self.entries + fresh) if fresh else self

    def extends(self, other: "K2Approx") -> bool:
        return is_prefix(other.as_string(), self.as_string())

    def to_json(self, depth: int = 2):
        return string_to_json(self._string, depth)

    def __len__(self):
        return len(self._string)

    def __eq__(self, other):
        return isinstance(other, K2Approx) and self._string == other._string

    def __hash__(self):
        return hash((self.head, len(self.entries)))

    def __repr__(self):
        return f"K2Approx(head={self.head}, entries={len(self.entries)})"


def entry_code(entry) -> Nat:
    """pair2(str_code(sigma), str_code(tau)), entries of tau coded recursively."""
    if not isinstance(entry, tuple):
        return entry
    sg, tau = entry
    return pair2(str_code(sg), str_code(entry_code(x) for x in tau))


def string_to_json(string: tuple, depth: int = 2):
    """Nested JSON view; entries below `depth` are elided to their lengths."""
    out = []
    for x in string:
        if isinstance(x, tuple):
            sg, tau = x
            out.append({"sigma": [coding.nat_to_json(v) for v in sg],
                        "tau": string_to_json(tau, depth - 1) if depth > 0 else {"len": len(tau)}})
        else:
            out.append(coding.nat_to_json(x))
    return out


def monotonicity_violations(f: K2Approx) -> List[str]:
    """Pairs sigma0 <= sigma1 in the domain whose images are not nested."""
    mp = f.mapping
    bad = []
    for s1, t1 in mp.items():
        for k in range(len(s1)):
            t0 = mp.get(s1[:k])
            if t0 is not None and not is_prefix(t0, t1):
                bad.append(f"{s1[:k]} maps to a string that is not a prefix of the image of {s1}")
    return bad


class K2Elem:
    """Stage generator s -> K2Approx, each stage extending the previous.

    `lookup(s, sigma)` answers single queries; elements given by a rule
    answer them without enumerating their stages."""

    def __init__(self, stage_fn: Callable[[int], K2Approx], name: str = "k2",
                 lookup_fn: Optional[Callable[[int, Str], Optional[tuple]]] = None):
        self.stage_fn = stage_fn
        self.name = name
        self._lookup = lookup_fn
        self._cache: Dict[int, K2Approx] = {}

    def stage(self, s: int) -> K2Approx:
        if s not in self._cache:
            self._cache[s] = self.stage_fn(s)
        return self._cache[s]

    def lookup(self, s: int, sigma: Str) -> Optional[tuple]:
        if self._lookup is not None:
            return self._lookup(s, sigma)
        return self.stage(s).mapping.get(tuple(sigma))

    @staticmethod
    def from_map(fn: Callable[[Str], Str], head: Nat = 0, name: str = "map") -> "K2Elem":
        """Element coding sigma |-> fn(sigma); at stage s the domain is the
        strings of length <= s with entries <= s (fn must be monotone)."""
        def stage(s: int) -> K2Approx:
            doms = sorted(_strings_upto(s), key=lambda x: (max(x, default=0), len(x), x))
            return K2Approx(head, tuple((d, tuple(fn(d))) for d in doms))

        def look(s: int, sigma: Str):
            if len(sigma) <= s and all(type(v) is int and v <= s for v in sigma):
                return tuple(fn(tuple(sigma)))
            return None
        return K2Elem(stage, name, look)

    def check_stages(self, upto: int) -> List[str]:
        """Monotonicity is enforced per stage; also check stage extension."""
        problems = []
        prev = None
        for s in range(upto + 1):
            cur = self.stage(s)
            problems += [f"stage {s}: {p}" for p in monotonicity_violations(cur)]
            if prev is not None and not cur.extends(prev):
                problems.append(f"stage {s} does not extend stage {s - 1}")
            prev = cur
        return problems


def _strings_upto(s: int) -> Iterator[Str]:
    for n in range(s + 1):
        yield from itertools.product(range(s + 1), repeat=n)


def from_stream(g: Callable[[int], Nat]) -> Callable[[int], Str]:
    """Prefix provider for the infinite sequence g(0), g(1), ..."""
    return lambda n: tuple(g(i) for i in range(n))


@dataclass(frozen=True)
class K2Output:
    value: Str
    undefined_at_budget: bool


def apply_k2(f: K2Elem, g: Callable[[int], Str], out_len: int, stage_budget: int) -> K2Output:
    """Longest image (cut to out_len) of a prefix of g of length <= stage_budget
    under f's stage at stage_budget. Short output sets the flag."""
    prefix = tuple(g(stage_budget))
    best: tuple = ()
    for k in range(len(prefix) + 1):
        img = f.lookup(stage_budget, prefix[:k])
        if img is not None and len(img) > len(best):
            best = img
    best = best[:out_len]
    return K2Output(best, len(best) < out_len)


# the stagewise embedding of the kernel machine

@dataclass
class K1K2Embedding:
    """f_{n,s} for n <= bound, s <= stages; f_{n,0} = <n>."""

    bound: int
    stages: int
    oracles: Optional[m.OracleTable] = None
    tables: List[Dict[int, K2Approx]] = field(default_factory=list)

    def f(self, n: int, s: int) -> K2Approx:
        return self.tables[min(s, self.stages)][n]

    def elem(self, n: int) -> K2Elem:
        return K2Elem(lambda s: self.f(n, s), name=f"f_{n}")

    def all_approx(self) -> Iterator[K2Approx]:
        for table in self.tables:
            yield from table.values()


def embed_k1_to_k2(table_bound: int, stage_bound: int,
                   oracles: Optional[m.OracleTable] = None) -> K1K2Embedding:
    """At stage s+1, for a <= s and each not-yet-mapped tau with code <= s:
    tau -> f_{c,s} if tau = <b, ...> and a.b = c within s steps with c <= s;
    tau -> the empty string otherwise."""
    top = max(table_bound, stage_bound)
    emb = K1K2Embedding(table_bound, stage_bound, oracles)
    cur = {n: K2Approx(n) for n in range(top + 1)}
    emb.tables.append(cur)
    taus = [(k, str_decode(k)) for k in range(stage_bound + 1)]
    for s in range(stage_bound):
        nxt = dict(cur)
        for a in range(min(s, top) + 1):
            known = cur[a].mapping
            new = []
            for k, tau in taus[: s + 1]:
                if tau in known:
                    continue
                image: Str = ()
                if tau:
                    o = m.apply(a, tau[0], s, oracles)
                    if isinstance(o, m.Defined) and type(o.value) is int and o.value <= s:
                        image = cur[o.value].as_string()
                new.append((tau, image))
            nxt[a] = cur[a].extend(new)
        emb.tables.append(nxt)
        cur = nxt
    return emb


@dataclass
class PreservationReport:
    defined_triples: int = 0
    divergent_pairs: int = 0
    checks: int = 0
    failures: List[dict] = field(default_factory=list)
    monotone_violations: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures and self.monotone_violations == 0

    def to_json(self) -> dict:
        return {"defined_triples": self.defined_triples, "divergent_pairs": self.divergent_pairs,
                "checks": self.checks, "failures": self.failures,
                "monotone_violations": self.monotone_violations, "ok": self.ok}


def defined_triples(emb: K1K2Embedding) -> List[Tuple[int, int, int]]:
    """(a, b, c) with a.b = c, where the cone above <b> is first met at a stage
    whose step budget already suffices (otherwise <b> itself maps to the empty
    string and only longer strings, beyond the table, would carry f_c)."""
    out = []
    S = emb.stages
    for a in range(min(emb.bound, S) + 1):
        for b in range(S + 1):
            s0 = max(a, str_code((b,)))
            if s0 >= S:
                continue
            o = m.apply(a, b, s0, emb.oracles)
            if isinstance(o, m.Defined) and type(o.value) is int and o.value <= s0:
                out.append((a, b, o.value))
    return out


def check_k1k2(emb: K1K2Embedding, triples: Sequence[Tuple[int, int, int]], gs_per: int = 5,
               seed: int = 0, out_len: int = 3, divergent: Sequence[Tuple[int, int]] = ()) -> PreservationReport:
    """Both preservation implications on sampled providers g extending <b>."""
    import random
    rng = random.Random(seed)
    rep = PreservationReport()
    S = emb.stages
    for approx in emb.all_approx():
        rep.monotone_violations += len(monotonicity_violations(approx))
    for a, b, c in triples:
        rep.defined_triples += 1
        target = emb.f(c, S).as_string()
        for _ in range(gs_per):
            tail = [rng.randrange(S + 1) for _ in range(S)]
            g = lambda n, tail=tail: ((b,) + tuple(tail))[:n]
            out = apply_k2(emb.elem(a), g, out_len, S)
            rep.checks += 1
            if not out.value or not is_prefix(out.value, target):
                rep.failures.append({"a": a, "b": b, "c": c, "got": list(out.value)})
    for a, b in divergent:
        rep.divergent_pairs += 1
        for _ in range(gs_per):
            tail = [rng.randrange(S + 1) for _ in range(S)]
            g = lambda n, tail=tail: ((b,) + tuple(tail))[:n]
            out = apply_k2(emb.elem(a), g, 1, S)
            rep.checks += 1
            if out.value:
                rep.failures.append({"a": a, "b": b, "diverges": True, "got": list(out.value)})
    return rep


def divergent_pairs(emb: K1K2Embedding) -> List[Tuple[int, int]]:
    """(a, b) with a.b out of fuel at the final stage budget."""
    S = emb.stages
    out = []
    for a in range(min(emb.bound, S) + 1):
        for b in range(S + 1):
            if not isinstance(m.apply(a, b, S, emb.oracles), m.Defined):
                out.append((a, b))
    return out


# the alternative coding: f.g runs program f(0) with oracle f (+) g

JOIN_PRIM = m.USER_PRIM_BASE


def join(f: Callable[[int], Nat], g: Callable[[int], Nat]) -> Callable[[Nat], Nat]:
    """(f (+) g)(2i) = f(i), (f (+) g)(2i+1) = g(i); oversized queries read 0."""
    def h(x: Nat) -> Nat:
        if type(x) is not int or x >= coding.SMALL:
            return 0
        return f(x // 2) if x % 2 == 0 else g(x // 2)
    return h


def apply_alt(f: Callable[[int], Nat], g: Callable[[int], Nat], x: Nat, fuel: int) -> m.Outcome:
    """One point of f.g under the alternative coding. Totality of the result is
    not certified: only the value at x is computed."""
    table = m.KERNEL.extend([(JOIN_PRIM, "join", join(f, g))], "kernel+join")
    return m.eval_code(f(0), x, fuel, table)
