"""Closed applicative terms over K1, combinators, bracket abstraction and
bounded Kleene equality."""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

from . import machine as m
from .coding import Nat, show_nat


class UsageError(ValueError):
    pass


class ParseError(UsageError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


@dataclass(frozen=True)
class Elem:
    c: Nat


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    s: "Term"
    t: "Term"


Term = Union[Elem, Var, App]


def app(*parts) -> Term:
    """Left-associated application; naturals become elements."""
    ts = [p if isinstance(p, (Elem, Var, App)) else Elem(p) for p in parts]
    out = ts[0]
    for t in ts[1:]:
        out = App(out, t)
    return out


def free_vars(t: Term) -> set:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, App):
        return free_vars(t.s) | free_vars(t.t)
    return set()


def closed(t: Term) -> bool:
    return not free_vars(t)


def substitute(t: Term, v: str, a: Term) -> Term:
    if isinstance(t, Var):
        return a if t.name == v else t
    if isinstance(t, App):
        return App(substitute(t.s, v, a), substitute(t.t, v, a))
    return t


# combinator codes, built from s11 directly

K_INNER = m.encode(m.Fst(m.INPUT))
S_INNER = m.encode(m.Run(m.Run(m.Fst(m.Fst(m.INPUT)), m.Snd(m.INPUT)),
                         m.Run(m.Snd(m.Fst(m.INPUT)), m.Snd(m.INPUT))))
S_MIDDLE = m.encode(m.s11_expr(m.Num(S_INNER), m.INPUT))


@lru_cache(maxsize=None)
def k_code() -> Nat:
    return m.encode(m.s11_expr(m.Num(K_INNER), m.INPUT))


@lru_cache(maxsize=None)
def s_code() -> Nat:
    return m.encode(m.s11_expr(m.Num(S_MIDDLE), m.INPUT))


def k_apply(a: Nat) -> Nat:
    """The code K.a, computed syntactically."""
    return m.s11(K_INNER, a)


def s_apply2(a: Nat, b: Nat) -> Nat:
    """The code S.a.b, computed syntactically."""
    return m.s11(S_INNER, m.pair2(a, b))


@lru_cache(maxsize=None)
def i_code() -> Nat:
    """I = S K K."""
    return s_apply2(k_code(), k_code())


# evaluation

def eval_term(t: Term, fuel: int, oracles: Optional[m.OracleTable] = None) -> m.Outcome:
    """Leftmost-innermost evaluation with one shared step budget."""
    if not closed(t):
        raise UsageError(f"open term: free variables {sorted(free_vars(t))}")
    left = fuel

    def go(u: Term):
        nonlocal left
        if isinstance(u, Elem):
            return u.c
        f = go(u.s)
        if f is None:
            return None
        x = go(u.t)
        if x is None:
            return None
        o = m.eval_code(f, x, left, oracles)
        if not isinstance(o, m.Defined):
            return None
        left -= o.steps
        return o.value

    v = go(t)
    return m.OUT_OF_FUEL if v is None else m.Defined(v, fuel - left)


def apply_seq(f: Nat, args, fuel: int, oracles: Optional[m.OracleTable] = None) -> m.Outcome:
    """f.a0.a1...; fuel shared across the applications."""
    return eval_term(app(f, *args), fuel, oracles)


# verdicts

@dataclass(frozen=True)
class EqualDefined:
    v: Nat


@dataclass(frozen=True)
class DistinctDefined:
    v1: Nat
    v2: Nat


@dataclass(frozen=True)
class Unknown:
    reason: str  # "BothOutOfFuel" or "OneOutOfFuel"
    side: Optional[int] = None


TriVerdict = Union[EqualDefined, DistinctDefined, Unknown]


def verdict_of(o1: m.Outcome, o2: m.Outcome) -> TriVerdict:
    d1, d2 = isinstance(o1, m.Defined), isinstance(o2, m.Defined)
    if d1 and d2:
        return EqualDefined(o1.value) if o1.value == o2.value else DistinctDefined(o1.value, o2.value)
    if not d1 and not d2:
        return Unknown("BothOutOfFuel")
    return Unknown("OneOutOfFuel", 1 if not d1 else 2)


def kleene_eq_bounded(s: Term, t: Term, fuel: int, oracles: Optional[m.OracleTable] = None) -> TriVerdict:
    return verdict_of(eval_term(s, fuel, oracles), eval_term(t, fuel, oracles))


def is_definite(v: TriVerdict) -> bool:
    return not isinstance(v, Unknown)


# bracket abstraction

def bracket_abstract(t: Term, v: str) -> Term:
    """pca-safe lambda*: the result is defined whether or not the body is."""
    if isinstance(t, Var) and t.name == v:
        return Elem(i_code())
    if isinstance(t, App):
        return App(App(Elem(s_code()), bracket_abstract(t.s, v)), bracket_abstract(t.t, v))
    return App(Elem(k_code()), t)


# surface syntax:  #n  K  S  I  identifiers  ( )  juxtaposition

_TOK = re.compile(r"\s*(?:(#\d+)|([KSI])(?![A-Za-z0-9_])|([a-z_][A-Za-z0-9_]*)|(\()|(\)))")


def _lex(text: str):
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        mt = _TOK.match(text, pos)
        if not mt or mt.end() == pos:
            raise ParseError(f"unexpected {text[pos]!r}", pos)
        for kind, g in zip(("num", "comb", "var", "(", ")"), mt.groups()):
            if g is not None:
                toks.append((kind, g, mt.start(mt.lastindex)))
        pos = mt.end()
    toks.append(("eof", "", len(text)))
    return toks


def parse_term(text: str) -> Term:
    toks = _lex(text)
    i = 0

    def atom():
        nonlocal i
        kind, val, pos = toks[i]
        if kind == "num":
            i += 1
            return Elem(int(val[1:]))
        if kind == "comb":
            i += 1
            return Elem({"K": k_code, "S": s_code, "I": i_code}[val]())
        if kind == "var":
            i += 1
            return Var(val)
        if kind == "(":
            i += 1
            t = seq()
            if toks[i][0] != ")":
                raise ParseError("expected ')'", toks[i][2])
            i += 1
            return t
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos)

    def seq():
        t = atom()
        while toks[i][0] in ("num", "comb", "var", "("):
            t = App(t, atom())
        return t

    t = seq()
    if toks[i][0] != "eof":
        raise ParseError(f"unexpected {toks[i][1]!r}", toks[i][2])
    return t


def show_term(t: Term) -> str:
    names = {k_code(): "K", s_code(): "S", i_code(): "I"}
    if isinstance(t, Elem):
        return names.get(t.c, f"#{show_nat(t.c)}")
    if isinstance(t, Var):
        return t.name
    right = show_term(t.t)
    if isinstance(t.t, App):
        right = f"({right})"
    return f"{show_term(t.s)} {right}"
