"""Fuel-bounded universal machine over naturals.

Programs are ASTs Goedel-numbered by Cantor pairing. A node is
``pair2(tag, payload)``; see docs/encoding.md for the frozen tables.
ASTs are plain tuples whose first entry is the tag.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

from . import coding
from .coding import Nat, pair2, unpair2

# tags
T_NUM, T_INPUT, T_PAIR, T_FST, T_SND, T_IFEQ, T_RUN = 0, 1, 2, 3, 4, 5, 6
T_PRIM, T_PAD, T_BOT, T_LEN, T_AT, T_APPEND = 7, 8, 9, 10, 11, 12

TAG_NAMES = {
    T_NUM: "Num", T_INPUT: "Input", T_PAIR: "Pair", T_FST: "Fst", T_SND: "Snd",
    T_IFEQ: "IfEq", T_RUN: "Run", T_PRIM: "Prim", T_PAD: "Pad", T_BOT: "Bot",
    T_LEN: "Len", T_AT: "At", T_APPEND: "AppendElem",
}

Ast = tuple

INPUT: Ast = (T_INPUT,)
BOT: Ast = (T_BOT,)


def Num(k: Nat) -> Ast:
    return (T_NUM, k)


def Pair(a: Ast, b: Ast) -> Ast:
    return (T_PAIR, a, b)


def Fst(a: Ast) -> Ast:
    return (T_FST, a)


def Snd(a: Ast) -> Ast:
    return (T_SND, a)


def IfEq(a: Ast, b: Ast, then: Ast, other: Ast) -> Ast:
    return (T_IFEQ, a, b, then, other)


def Run(code: Ast, arg: Ast) -> Ast:
    return (T_RUN, code, arg)


def Prim(k: int, a: Ast) -> Ast:
    return (T_PRIM, k, a)


def Pad(i: Nat, a: Ast) -> Ast:
    return (T_PAD, i, a)


def Len(a: Ast) -> Ast:
    return (T_LEN, a)


def At(a: Ast, i: Ast) -> Ast:
    return (T_AT, a, i)


def AppendElem(a: Ast, x: Ast) -> Ast:
    return (T_APPEND, a, x)


class _Invalid:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INVALID"


INVALID = _Invalid()

CODE_INPUT = pair2(T_INPUT, 0)
CODE_BOT = pair2(T_BOT, 0)


def encode_ast(a: Ast) -> Nat:
    t = a[0]
    if t == T_NUM:
        return pair2(T_NUM, a[1])
    if t in (T_INPUT, T_BOT):
        return pair2(t, 0)
    if t in (T_FST, T_SND, T_LEN):
        return pair2(t, encode_ast(a[1]))
    if t in (T_PAIR, T_RUN, T_AT, T_APPEND):
        return pair2(t, pair2(encode_ast(a[1]), encode_ast(a[2])))
    if t in (T_PRIM, T_PAD):
        return pair2(t, pair2(a[1], encode_ast(a[2])))
    if t == T_IFEQ:
        return pair2(t, pair2(pair2(encode_ast(a[1]), encode_ast(a[2])),
                              pair2(encode_ast(a[3]), encode_ast(a[4]))))
    raise ValueError(f"not an AST node: {a!r}")


encode = encode_ast


@lru_cache(maxsize=1 << 17)
def _decode(c: Nat) -> Optional[Ast]:
    tag, p = unpair2(c)
    if type(tag) is not int or tag > T_APPEND:
        return None
    if tag == T_NUM:
        return (T_NUM, p)
    if tag in (T_INPUT, T_BOT):
        return (tag,) if p == 0 else None
    if tag in (T_FST, T_SND, T_LEN):
        sub = _decode(p)
        return None if sub is None else (tag, sub)
    if tag in (T_PAIR, T_RUN, T_AT, T_APPEND):
        x, y = unpair2(p)
        a = _decode(x)
        if a is None:
            return None
        b = _decode(y)
        return None if b is None else (tag, a, b)
    if tag in (T_PRIM, T_PAD):
        k, x = unpair2(p)
        a = _decode(x)
        return None if a is None else (tag, k, a)
    ab, te = unpair2(p)
    parts = []
    for half in (ab, te):
        for q in unpair2(half):
            sub = _decode(q)
            if sub is None:
                return None
            parts.append(sub)
    return (T_IFEQ, *parts)


def decode_ast(c: Nat):
    """AST for code c, or INVALID."""
    r = _decode(c)
    return INVALID if r is None else r


decode = decode_ast


def show_ast(a: Ast) -> str:
    if a is INVALID:
        return "INVALID"
    t = a[0]
    name = TAG_NAMES[t]
    if t == T_NUM:
        return f"Num({coding.show_nat(a[1])})"
    if t in (T_INPUT, T_BOT):
        return name
    if t in (T_PRIM, T_PAD):
        return f"{name}({coding.show_nat(a[1])}, {show_ast(a[2])})"
    return f"{name}({', '.join(show_ast(x) for x in a[1:])})"


# outcomes

@dataclass(frozen=True)
class Defined:
    value: Nat
    steps: int


class _OutOfFuel:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "OutOfFuel"

    def __reduce__(self):
        return (_OutOfFuel, ())


OUT_OF_FUEL = _OutOfFuel()
OutOfFuel = OUT_OF_FUEL
Outcome = Union[Defined, _OutOfFuel]


def is_defined(o) -> bool:
    return isinstance(o, Defined)


# oracle tables

PrimFn = Callable[[Nat], Nat]


class OracleTable:
    """Ordered, immutable list of total primitives keyed by stable ids."""

    def __init__(self, entries: Iterable[Tuple[int, str, PrimFn]] = (), name: str = "custom"):
        self.entries = tuple(entries)
        self.name = name
        self.fns = {}
        for pid, _, fn in self.entries:
            if pid in self.fns:
                raise ValueError(f"duplicate primitive id {pid}")
            self.fns[pid] = fn

    def extend(self, entries: Iterable[Tuple[int, str, PrimFn]], name: Optional[str] = None) -> "OracleTable":
        return OracleTable(self.entries + tuple(entries), name or self.name + "+")

    def ids(self):
        return [e[0] for e in self.entries]

    def id_of(self, name: str) -> int:
        for pid, n, _ in self.entries:
            if n == name:
                return pid
        raise KeyError(name)

    def __repr__(self):
        return f"OracleTable({self.name}, ids={self.ids()})"


# kernel primitive ids
P_SUCC, P_PRED, P_ADD, P_MONUS, P_LT, P_MUL, P_STR_INIT, P_STR_LAST, P_TRANSLATE = range(9)
P_CHAIN, P_TUPLE_AT, P_TUPLE_TO_STR, P_STR_CONCAT = 9, 10, 11, 12


def _canon(v) -> Nat:
    return coding.from_int(v) if type(v) is int and v >= coding.SMALL else v


def _binop(fn):
    def go(p):
        a, b = unpair2(p)
        return _canon(fn(coding.to_int(a), coding.to_int(b)))
    return go


def _str_init(c):
    return coding.str_split(c)[0] if c != 0 else 0


def _str_last(c):
    return coding.str_split(c)[1] if c != 0 else 0


@lru_cache(maxsize=1 << 15)
def _translate_table(tbl: Nat) -> dict:
    out = {}
    for item in coding.str_decode(tbl):
        k, code = unpair2(item)
        out.setdefault(k, code)
    return out


@lru_cache(maxsize=1 << 16)
def translate_code(tbl: Nat, code: Nat) -> Nat:
    """Rewrite program `code` so that each Prim(k, .) runs the table's
    translator for k (Bot when k is not listed); Run targets are rewritten
    lazily."""
    ast = _decode(code)
    if ast is None:
        return code
    return encode_ast(_translate_ast(_translate_table(tbl), tbl, ast))


def _translate_ast(table: dict, tbl: Nat, a: Ast) -> Ast:
    t = a[0]
    if t in (T_NUM, T_INPUT, T_BOT):
        return a
    if t == T_PRIM:
        inner = _translate_ast(table, tbl, a[2])
        if a[1] in table:
            return Run(Num(table[a[1]]), inner)
        return BOT  # no translator: the primitive is unavailable
    if t == T_PAD:
        return (T_PAD, a[1], _translate_ast(table, tbl, a[2]))
    if t == T_RUN:
        code = _translate_ast(table, tbl, a[1])
        return Run(Prim(P_TRANSLATE, Pair(Num(tbl), code)), _translate_ast(table, tbl, a[2]))
    return (t, *(_translate_ast(table, tbl, x) for x in a[1:]))


def _prim_translate(p):
    tbl, code = unpair2(p)
    return translate_code(tbl, code)


def _prim_chain(p):
    """<k, [f, a1..ar]> -> 0 if f.a1...ar needs more than k steps, else 1 + value."""
    k, seq = unpair2(p)
    if type(k) is not int:
        return 0
    items = coding.str_decode(seq)
    if not items:
        return 0
    cur = items[0]
    for a in items[1:]:
        o = eval_code(cur, a, k)
        if not isinstance(o, Defined):
            return 0
        k -= o.steps
        cur = o.value
    return coding.succ(cur)


def _arity_index(q):
    n, i = unpair2(q)
    return (n, i) if type(n) is int and type(i) is int else (None, None)


def _prim_tuple_at(p):
    """<t, <n, i>> -> component i of the n-tuple t (0 when out of range)."""
    t, q = unpair2(p)
    n, i = _arity_index(q)
    if n is None or i >= n or n > 1 << 16:
        return 0
    return coding.tuple_decode(t, n)[i]


def _prim_tuple_to_str(p):
    """<n, t> -> the string of the n components of t."""
    n, t = unpair2(p)
    if type(n) is not int or n > 1 << 16:
        return 0
    return coding.str_code(coding.tuple_decode(t, n))


def _prim_str_concat(p):
    a, b = unpair2(p)
    for x in coding.str_decode(b):
        a = coding.str_append(a, x)
    return a


KERNEL_PRIMITIVES = (
    (P_SUCC, "succ", coding.succ),
    (P_PRED, "pred", coding.pred),
    (P_ADD, "add", _binop(lambda a, b: a + b)),
    (P_MONUS, "monus", _binop(lambda a, b: max(a - b, 0))),
    (P_LT, "lt", lambda p: int(coding.nat_lt(*unpair2(p)))),
    (P_MUL, "mul", _binop(lambda a, b: a * b)),
    (P_STR_INIT, "str_init", _str_init),
    (P_STR_LAST, "str_last", _str_last),
    (P_TRANSLATE, "translate", _prim_translate),
    (P_CHAIN, "chain", _prim_chain),
    (P_TUPLE_AT, "tuple_at", _prim_tuple_at),
    (P_TUPLE_TO_STR, "tuple_to_str", _prim_tuple_to_str),
    (P_STR_CONCAT, "str_concat", _prim_str_concat),
)


def _kernel_table() -> OracleTable:
    from .ordinals import NOTATION_PRIMITIVES

    return OracleTable(KERNEL_PRIMITIVES + NOTATION_PRIMITIVES, name="kernel")


KERNEL = _kernel_table()
EMPTY = OracleTable((), name="empty")

# user oracle primitives must use ids at or above this
USER_PRIM_BASE = 64


# evaluator

_EV, _KPAIR, _KFST, _KSND, _KIF, _KRUN, _KPRIM, _KLEN, _KAT, _KAPP = range(10)
_PAIR_K = (_KPAIR,)
_FST_K = (_KFST,)
_SND_K = (_KSND,)
_RUN_K = (_KRUN,)
_LEN_K = (_KLEN,)
_AT_K = (_KAT,)
_APP_K = (_KAPP,)


def _exec(root: Ast, x: Nat, fuel: int, fns: dict) -> Outcome:
    todo = [(_EV, root, x)]
    vals = []
    push = todo.append
    vpush = vals.append
    used = 0
    while todo:
        item = todo.pop()
        op = item[0]
        if op == _EV:
            used += 1
            if used > fuel:
                return OUT_OF_FUEL
            node = item[1]
            t = node[0]
            if t == T_NUM:
                vpush(node[1])
            elif t == T_INPUT:
                vpush(item[2])
            elif t == T_PAIR:
                inp = item[2]
                push(_PAIR_K)
                push((_EV, node[2], inp))
                push((_EV, node[1], inp))
            elif t == T_FST:
                push(_FST_K)
                push((_EV, node[1], item[2]))
            elif t == T_SND:
                push(_SND_K)
                push((_EV, node[1], item[2]))
            elif t == T_IFEQ:
                inp = item[2]
                push((_KIF, node[3], node[4], inp))
                push((_EV, node[2], inp))
                push((_EV, node[1], inp))
            elif t == T_RUN:
                inp = item[2]
                push(_RUN_K)
                push((_EV, node[2], inp))
                push((_EV, node[1], inp))
            elif t == T_PRIM:
                push((_KPRIM, node[1]))
                push((_EV, node[2], item[2]))
            elif t == T_PAD:
                push((_EV, node[2], item[2]))
            elif t == T_BOT:
                return OUT_OF_FUEL
            elif t == T_LEN:
                push(_LEN_K)
                push((_EV, node[1], item[2]))
            elif t == T_AT:
                inp = item[2]
                push(_AT_K)
                push((_EV, node[2], inp))
                push((_EV, node[1], inp))
            else:
                inp = item[2]
                push(_APP_K)
                push((_EV, node[2], inp))
                push((_EV, node[1], inp))
        elif op == _KPAIR:
            b = vals.pop()
            a = vals.pop()
            vpush(pair2(a, b))
        elif op == _KFST:
            vpush(unpair2(vals.pop())[0])
        elif op == _KSND:
            vpush(unpair2(vals.pop())[1])
        elif op == _KIF:
            b = vals.pop()
            a = vals.pop()
            push((_EV, item[1] if a == b else item[2], item[3]))
        elif op == _KRUN:
            arg = vals.pop()
            code = vals.pop()
            sub = _decode(code)
            if sub is None:
                return OUT_OF_FUEL
            push((_EV, sub, arg))
        elif op == _KPRIM:
            used += 1
            if used > fuel:
                return OUT_OF_FUEL
            fn = fns.get(item[1])
            if fn is None:
                return OUT_OF_FUEL
            vpush(_canon(fn(vals.pop())))
        elif op == _KLEN:
            vpush(coding.str_len(vals.pop()))
        elif op == _KAT:
            i = vals.pop()
            vpush(coding.str_at(vals.pop(), i))
        else:
            v = vals.pop()
            vpush(coding.str_append(vals.pop(), v))
    return Defined(vals[-1], used)


def eval_code(e: Nat, x: Nat, fuel: int, oracles: Optional[OracleTable] = None) -> Outcome:
    """Run program e on input x with the given step budget."""
    if fuel < 0:
        raise ValueError("fuel must be >= 0")
    root = _decode(e)
    if root is None:
        return OUT_OF_FUEL
    return _exec(root, x, fuel, (oracles or KERNEL).fns)


def eval_ast(a: Ast, x: Nat, fuel: int, oracles: Optional[OracleTable] = None) -> Outcome:
    return _exec(a, x, fuel, (oracles or KERNEL).fns)


eval = eval_code  # noqa: A001


def apply(a: Nat, b: Nat, fuel: int, oracles: Optional[OracleTable] = None) -> Outcome:
    """K1 application a.b, memoized (evaluation is deterministic)."""
    return _apply_cached(a, b, fuel, oracles or KERNEL)


@lru_cache(maxsize=1 << 16)
def _apply_cached(a, b, fuel, oracles):
    return eval_code(a, b, fuel, oracles)


# syntactic constructions

def const_code(v: Nat) -> Nat:
    """Code of the program that ignores its input and returns v."""
    return pair2(T_NUM, v)


def s11(e: Nat, y: Nat) -> Nat:
    """Run(Num e, Pair(Num y, Input)): currying of the first argument."""
    return pair2(T_RUN, pair2(pair2(T_NUM, e), pair2(T_PAIR, pair2(pair2(T_NUM, y), CODE_INPUT))))


def s11_inverse(c: Nat) -> Optional[Tuple[Nat, Nat]]:
    """(e, y) with s11(e, y) = c, if c is in the range of s11."""
    tag, p = unpair2(c)
    if tag != T_RUN:
        return None
    ne, rest = unpair2(p)
    t1, e = unpair2(ne)
    if t1 != T_NUM:
        return None
    t2, q = unpair2(rest)
    if t2 != T_PAIR:
        return None
    ny, inp = unpair2(q)
    t3, y = unpair2(ny)
    if t3 != T_NUM or inp != CODE_INPUT:
        return None
    return e, y


def pad(e: Nat, i: Nat) -> Nat:
    """Pad(i, e): same function, fresh code, one extra step."""
    return pair2(T_PAD, pair2(i, e))


# in-machine code builders: ASTs that compute codes at run time

def num_code_expr(v: Ast) -> Ast:
    return Pair(Num(T_NUM), v)


def s11_expr(e: Ast, y: Ast) -> Ast:
    return Pair(Num(T_RUN), Pair(num_code_expr(e),
                                 Pair(Num(T_PAIR), Pair(num_code_expr(y), Num(CODE_INPUT)))))


def pad_expr(e: Ast, i: Nat) -> Ast:
    return Pair(Num(T_PAD), Pair(Num(i), e))


def _diag(body: Ast, pad_index: Optional[Nat]) -> Nat:
    d = encode_ast(body)
    n = s11(d, d)
    return n if pad_index is None else pad(n, pad_index)


def _self_expr(pad_index: Optional[Nat]) -> Ast:
    me = s11_expr(Fst(INPUT), Fst(INPUT))
    return me if pad_index is None else pad_expr(me, pad_index)


SELF_ARG = Snd(INPUT)


def recursive(body: Callable[[Ast, Ast], Ast], pad_index: Optional[Nat] = None) -> Nat:
    """Code n whose program is body(self, arg), with self evaluating to n.

    Built by diagonalizing s11: n = s11(d, d) (optionally padded) where d
    receives <d, x>."""
    return _diag(body(_self_expr(pad_index), SELF_ARG), pad_index)


def fix(template: Nat, pad_index: Optional[Nat] = None) -> Nat:
    """n with eval(n, x) ~ eval(eval(template, n), x). Nothing is evaluated."""
    return recursive(lambda me, arg: Run(Run(Num(template), me), arg), pad_index)


# small program library

def if_zero(v: Ast, then: Ast, other: Ast) -> Ast:
    return IfEq(v, Num(0), then, other)


def prim(name: str, a: Ast, table: OracleTable = KERNEL) -> Ast:
    return Prim(table.id_of(name), a)


def table_lookup(arg: Ast, cases: Sequence[Tuple[Nat, Ast]], default: Ast) -> Ast:
    out = default
    for key, val in reversed(list(cases)):
        out = IfEq(arg, Num(key), val, out)
    return out


def random_ast(rng, depth: int, prim_ids: Sequence[int] = tuple(range(8))) -> Ast:
    """Random Run-free program; used for sampling and property tests."""
    if depth <= 0 or rng.random() < 0.25:
        return INPUT if rng.random() < 0.5 else Num(rng.randrange(20))
    d = depth - 1
    pick = rng.randrange(8)
    if pick == 0:
        return Pair(random_ast(rng, d, prim_ids), random_ast(rng, d, prim_ids))
    if pick == 1:
        return Fst(random_ast(rng, d, prim_ids))
    if pick == 2:
        return Snd(random_ast(rng, d, prim_ids))
    if pick == 3:
        return IfEq(*(random_ast(rng, d, prim_ids) for _ in range(4)))
    if pick in (4, 5) and prim_ids:
        return Prim(rng.choice(list(prim_ids)), random_ast(rng, d, prim_ids))
    if pick == 6:
        return Len(random_ast(rng, d, prim_ids))
    return AppendElem(random_ast(rng, d, prim_ids), random_ast(rng, d, prim_ids))
