"""Cantor normal form ordinals below epsilon_0, the F/G bookkeeping functions,
and Kleene-Brouwer ranking of finite trees."""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import cmp_to_key, lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import coding


class OrdinalError(ValueError):
    pass


@dataclass(frozen=True)
class Ord:
    """Sum of omega^exp * coeff terms, exponents strictly decreasing."""

    terms: Tuple[Tuple["Ord", int], ...] = ()

    def __post_init__(self):
        prev = None
        for e, c in self.terms:
            if not isinstance(c, int) or c < 1:
                raise OrdinalError("coefficients must be positive integers")
            if prev is not None and cmp(e, prev) >= 0:
                raise OrdinalError("exponents must strictly decrease")
            prev = e

    def __lt__(self, other):
        return cmp(self, other) < 0

    def __le__(self, other):
        return cmp(self, other) <= 0

    def __gt__(self, other):
        return cmp(self, other) > 0

    def __ge__(self, other):
        return cmp(self, other) >= 0

    def __str__(self):
        return show(self)

    def __repr__(self):
        return f"Ord({show(self)!r})"

    def __add__(self, other):
        return add(self, other)

    @property
    def is_zero(self) -> bool:
        return not self.terms


ZERO = Ord()


def nat(n: int) -> Ord:
    return Ord(((ZERO, n),)) if n > 0 else ZERO


ONE = nat(1)
OMEGA = Ord(((ONE, 1),))


def omega_pow(e: Ord, c: int = 1) -> Ord:
    return Ord(((e, c),)) if c > 0 else ZERO


def cmp(a: Ord, b: Ord) -> int:
    for (ea, ca), (eb, cb) in zip(a.terms, b.terms):
        r = cmp(ea, eb)
        if r:
            return r
        if ca != cb:
            return -1 if ca < cb else 1
    la, lb = len(a.terms), len(b.terms)
    return (la > lb) - (la < lb)


class Ordering(str, Enum):
    LESS = "Less"
    EQUAL = "Equal"
    GREATER = "Greater"


def ord_cmp(a: Ord, b: Ord) -> Ordering:
    return [Ordering.LESS, Ordering.EQUAL, Ordering.GREATER][cmp(a, b) + 1]


def is_finite(a: Ord) -> bool:
    return not a.terms or (len(a.terms) == 1 and a.terms[0][0].is_zero)


def to_int(a: Ord) -> int:
    if not is_finite(a):
        raise OrdinalError(f"{show(a)} is not finite")
    return a.terms[0][1] if a.terms else 0


def add(a: Ord, b: Ord) -> Ord:
    if not b.terms:
        return a
    lead, lc = b.terms[0]
    kept = []
    for e, c in a.terms:
        r = cmp(e, lead)
        if r > 0:
            kept.append((e, c))
        elif r == 0:
            kept.append((e, c + lc))
            return Ord(tuple(kept) + b.terms[1:])
        else:
            break
    return Ord(tuple(kept) + b.terms)


ord_add = add


class Kind(str, Enum):
    ZERO = "Zero"
    SUCC = "Succ"
    LIMIT = "Limit"


def kind(a: Ord) -> Kind:
    if not a.terms:
        return Kind.ZERO
    return Kind.SUCC if a.terms[-1][0].is_zero else Kind.LIMIT


ord_kind = kind


def pred(a: Ord) -> Ord:
    if kind(a) is not Kind.SUCC:
        raise OrdinalError(f"{show(a)} is not a successor")
    *head, (e, c) = a.terms
    return Ord(tuple(head) + (((e, c - 1),) if c > 1 else ()))


def succ(a: Ord) -> Ord:
    return add(a, ONE)


def split_finite(a: Ord) -> Tuple[Ord, int]:
    """a = lam + k with lam zero or a limit."""
    if a.terms and a.terms[-1][0].is_zero:
        return Ord(a.terms[:-1]), a.terms[-1][1]
    return a, 0


def fund_seq(a: Ord, n: int) -> Ord:
    """Wainer fundamental sequence of a limit notation."""
    if kind(a) is not Kind.LIMIT:
        raise OrdinalError(f"fund_seq needs a limit, got {show(a)}")
    if n < 0:
        raise OrdinalError("index must be a natural")
    *head, (e, c) = a.terms
    gamma = Ord(tuple(head) + (((e, c - 1),) if c > 1 else ()))
    if kind(e) is Kind.SUCC:
        return add(gamma, omega_pow(pred(e), n + 1))
    return add(gamma, omega_pow(fund_seq(e, n)))


class Parity(str, Enum):
    EVEN = "Even"
    ODD = "Odd"


def parity(a: Ord) -> Parity:
    return Parity.ODD if split_finite(a)[1] % 2 else Parity.EVEN


# omega-multiples: exponent shifts e -> 1+e and its inverse

def _one_plus(e: Ord) -> Ord:
    return nat(to_int(e) + 1) if is_finite(e) else e


def _minus_one(e: Ord) -> Ord:
    if e.is_zero:
        raise OrdinalError("not divisible by omega")
    return nat(to_int(e) - 1) if is_finite(e) else e


def omega_times(mu: Ord, times: int = 1) -> Ord:
    """omega^times * mu."""
    terms = []
    for e, c in mu.terms:
        for _ in range(times):
            e = _one_plus(e)
        terms.append((e, c))
    return Ord(tuple(terms))


def div_omega(lam: Ord) -> Ord:
    """mu with omega * mu = lam, for lam zero or a limit."""
    return Ord(tuple((_minus_one(e), c) for e, c in lam.terms))


def F(a: Ord) -> Ord:
    lam, k = split_finite(a)
    mu = div_omega(lam)
    mu0, m = split_finite(mu)
    base = add(mu0, nat(2 * m))
    return succ(base) if k else base


def G(a: Ord) -> Ord:
    lam, k = split_finite(a)
    mu = div_omega(lam)
    return add(add(omega_times(mu, 2), omega_pow(ONE, k // 2)), nat(k % 2))


# literals

_TOKEN = re.compile(r"\s*(?:(\d+)|([wω])|(\^)|(\*)|(\+)|(\()|(\)))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks: List[Tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m:
                raise OrdinalError(f"unexpected character at position {pos}: {text[pos:pos + 10]!r}")
            kinds = ["num", "w", "^", "*", "+", "(", ")"]
            for i, g in enumerate(m.groups()):
                if g is not None:
                    self.toks.append((kinds[i], g, m.start(i + 1)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def take(self, k):
        if self.peek() != k:
            where = self.toks[self.i][2] if self.i < len(self.toks) else len(self.text)
            raise OrdinalError(f"expected {k!r} at position {where}")
        t = self.toks[self.i]
        self.i += 1
        return t

    def sum(self) -> Ord:
        acc = self.term()
        while self.peek() == "+":
            self.take("+")
            acc = add(acc, self.term())
        return acc

    def term(self) -> Ord:
        if self.peek() == "num":
            return nat(int(self.take("num")[1]))
        if self.peek() == "(":
            self.take("(")
            v = self.sum()
            self.take(")")
            return v
        self.take("w")
        e = ONE
        if self.peek() == "^":
            self.take("^")
            e = self.atom()
        c = 1
        if self.peek() == "*":
            self.take("*")
            c = int(self.take("num")[1])
        return omega_pow(e, c)

    def atom(self) -> Ord:
        if self.peek() == "num":
            return nat(int(self.take("num")[1]))
        if self.peek() == "w":
            self.take("w")
            return OMEGA
        self.take("(")
        v = self.sum()
        self.take(")")
        return v


def parse(text: str) -> Ord:
    p = _Parser(text)
    if not p.toks:
        raise OrdinalError("empty ordinal literal")
    v = p.sum()
    if p.i != len(p.toks):
        raise OrdinalError(f"trailing input at position {p.toks[p.i][2]}")
    return v


def show(a: Ord) -> str:
    if not a.terms:
        return "0"
    parts = []
    for e, c in a.terms:
        if e.is_zero:
            parts.append(str(c))
            continue
        if e == ONE:
            base = "w"
        elif is_finite(e) or e == OMEGA:
            base = f"w^{show(e)}"
        else:
            base = f"w^({show(e)})"
        parts.append(base if c == 1 else f"{base}*{c}")
    return " + ".join(parts)


def enumerate_below(max_exp: int, max_coeff: int) -> List[Ord]:
    """All notations with finite exponents < max_exp and coefficients <= max_coeff."""
    out = [ZERO]
    for e in range(max_exp - 1, -1, -1):
        nxt = list(out)
        for a in out:
            if a.terms and to_int(a.terms[-1][0]) <= e:
                continue
            for c in range(1, max_coeff + 1):
                nxt.append(Ord(a.terms + ((nat(e), c),)))
        out = nxt
    return sorted(out, key=cmp_to_key(cmp))


# numeric codes, used by machine primitives

@lru_cache(maxsize=4096)
def ord_code(a: Ord) -> coding.Nat:
    return coding.str_code(coding.pair2(ord_code(e), coding.from_int(c)) for e, c in a.terms)


@lru_cache(maxsize=1 << 14)
def ord_decode(code: coding.Nat) -> Optional[Ord]:
    try:
        items = coding.str_decode(code)
        terms = []
        for it in items:
            ec, c = coding.unpair2(it)
            e = ord_decode(ec)
            c = coding.to_int(c)
            if e is None or c < 1:
                return None
            terms.append((e, c))
        return Ord(tuple(terms))
    except (OrdinalError, RecursionError):
        return None


def _prim_kind(c):
    a = ord_decode(c)
    if a is None:
        return 3
    return {Kind.ZERO: 0, Kind.SUCC: 1, Kind.LIMIT: 2}[kind(a)]


def _prim_pred(c):
    a = ord_decode(c)
    return ord_code(pred(a)) if a is not None and kind(a) is Kind.SUCC else 0


def _prim_fund(p):
    c, n = coding.unpair2(p)
    a = ord_decode(c)
    if a is None or kind(a) is not Kind.LIMIT or type(n) is not int:
        return 0
    return ord_code(fund_seq(a, n))


def _prim_parity(c):
    a = ord_decode(c)
    return 0 if a is None or parity(a) is Parity.EVEN else 1


def _prim_limpart(c):
    a = ord_decode(c)
    return ord_code(split_finite(a)[0]) if a is not None else 0


def _prim_finpart(c):
    a = ord_decode(c)
    return split_finite(a)[1] if a is not None else 0


def _prim_lt(p):
    x, y = coding.unpair2(p)
    a, b = ord_decode(x), ord_decode(y)
    return int(a is not None and b is not None and cmp(a, b) < 0)


def _prim_F(c):
    a = ord_decode(c)
    return ord_code(F(a)) if a is not None else 0


def _prim_G(c):
    a = ord_decode(c)
    return ord_code(G(a)) if a is not None else 0


def _prim_succ(c):
    a = ord_decode(c)
    return ord_code(succ(a)) if a is not None else 0


def _prim_add(p):
    x, y = coding.unpair2(p)
    a, b = ord_decode(x), ord_decode(y)
    return ord_code(add(a, b)) if a is not None and b is not None else 0


# stable ids 32.. are reserved for notation primitives
NOTATION_PRIMITIVES = (
    (32, "ord_kind", _prim_kind),
    (33, "ord_pred", _prim_pred),
    (34, "ord_fund", _prim_fund),
    (35, "ord_parity", _prim_parity),
    (36, "ord_limpart", _prim_limpart),
    (37, "ord_finpart", _prim_finpart),
    (38, "ord_lt", _prim_lt),
    (39, "ord_F", _prim_F),
    (40, "ord_G", _prim_G),
    (41, "ord_succ", _prim_succ),
    (42, "ord_add", _prim_add),
)


# Kleene-Brouwer machinery on finite trees of tuples

Str = Tuple[int, ...]


def kb_less(tau: Sequence[int], sigma: Sequence[int]) -> bool:
    if len(tau) > len(sigma) and tuple(tau[: len(sigma)]) == tuple(sigma):
        return True
    for a, b in zip(tau, sigma):
        if a != b:
            return a < b
    return False


def _kb_key(s: Sequence[int]):
    return tuple((0, x) for x in s) + ((1, 0),)


class FiniteTree:
    def __init__(self, nodes: Iterable[Sequence[int]]):
        ns = frozenset(tuple(n) for n in nodes)
        for n in ns:
            if n and n[:-1] not in ns:
                raise ValueError(f"not closed under prefixes: {n[:-1]} missing")
        self.nodes = ns

    def __contains__(self, s):
        return tuple(s) in self.nodes

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(sorted(self.nodes, key=lambda s: (len(s), s)))

    def children(self, s: Str) -> List[Str]:
        return sorted(n for n in self.nodes if len(n) == len(s) + 1 and n[: len(s)] == tuple(s))

    @classmethod
    def closure(cls, strings: Iterable[Sequence[int]]) -> "FiniteTree":
        out = set()
        for s in strings:
            s = tuple(s)
            for i in range(len(s) + 1):
                out.add(s[:i])
        return cls(out)

    def height_rank(self) -> Dict[Str, int]:
        """Well-founded rank: leaves 0, otherwise 1 + max over children."""
        rank: Dict[Str, int] = {}
        for s in sorted(self.nodes, key=len, reverse=True):
            kids = [rank[c] for c in self.children(s)]
            rank[s] = 1 + max(kids) if kids else 0
        return rank


def kb_rank(tree: FiniteTree) -> Tuple[int, Dict[Str, int]]:
    order = sorted(tree.nodes, key=_kb_key)
    return len(order), {s: i for i, s in enumerate(order)}
