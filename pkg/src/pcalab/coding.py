"""Natural-number coding kit.

Naturals below ``SMALL`` are plain ints. Anything at or above it is kept as an
interned ``Big`` node meaning ``pair2(left, right)``. The two forms never
overlap, so equality is ``==`` on ints and identity on ``Big``. Program codes
nest whole programs as constants and would otherwise grow doubly exponentially.
"""
from __future__ import annotations

import math
import weakref
from typing import Iterable, Sequence, Union

SMALL = 1 << 64


class Big:
    __slots__ = ("a", "b", "_h", "__weakref__")

    def __init__(self, a, b):
        self.a = a
        self.b = b
        self._h = hash((id(a) if isinstance(a, Big) else a, id(b) if isinstance(b, Big) else b, "P"))

    def __hash__(self):
        return self._h

    def __repr__(self):
        return show_nat(self)

    def __reduce__(self):
        return (_intern, (self.a, self.b))


Nat = Union[int, Big]

_table: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()


def _key(x):
    return ("B", id(x)) if isinstance(x, Big) else x


def _intern(a: Nat, b: Nat) -> Big:
    k = (_key(a), _key(b))
    node = _table.get(k)
    if node is None:
        node = Big(a, b)
        _table[k] = node
    return node


def _tri(n: int) -> int:
    return n * (n + 1) // 2


def pair2(x: Nat, y: Nat) -> Nat:
    """Cantor pairing (x+y)(x+y+1)/2 + y."""
    if type(x) is int and type(y) is int:
        s = x + y
        v = s * (s + 1) // 2 + y
        if v < SMALL:
            return v
    if type(x) is int and x >= SMALL:
        x = from_int(x)
    if type(y) is int and y >= SMALL:
        y = from_int(y)
    return _intern(x, y)


def _unpair_int(n: int):
    w = (math.isqrt(8 * n + 1) - 1) // 2
    y = n - _tri(w)
    return w - y, y


def unpair2(n: Nat):
    if type(n) is int:
        if n >= SMALL:
            n = from_int(n)
            return n.a, n.b
        return _unpair_int(n)
    return n.a, n.b


def fst(n: Nat) -> Nat:
    return unpair2(n)[0]


def snd(n: Nat) -> Nat:
    return unpair2(n)[1]


def from_int(n: int) -> Nat:
    """Canonical form of an arbitrary Python int."""
    if n < 0:
        raise ValueError("naturals only")
    if n < SMALL:
        return n
    x, y = _unpair_int(n)
    return _intern(from_int(x), from_int(y))


def to_int(n: Nat) -> int:
    """Materialize as a Python int (may be astronomically large)."""
    if type(n) is int:
        return n
    stack = [n]
    out: dict = {}
    while stack:
        cur = stack[-1]
        if id(cur) in out:
            stack.pop()
            continue
        pending = [c for c in (cur.a, cur.b) if isinstance(c, Big) and id(c) not in out]
        if pending:
            stack.extend(pending)
            continue
        a = out[id(cur.a)] if isinstance(cur.a, Big) else cur.a
        b = out[id(cur.b)] if isinstance(cur.b, Big) else cur.b
        out[id(cur)] = _tri(a + b) + b
        stack.pop()
    return out[id(n)]


def is_small(n: Nat) -> bool:
    return type(n) is int


def succ(n: Nat) -> Nat:
    if type(n) is int:
        return from_int(n + 1)
    x, y = n.a, n.b
    if x == 0:
        return pair2(succ(y), 0)
    return pair2(pred(x), succ(y))


def pred(n: Nat) -> Nat:
    """Truncated predecessor."""
    if type(n) is int:
        return n - 1 if n > 0 else 0
    x, y = n.a, n.b
    if y == 0:
        return pair2(0, pred(x))
    return pair2(succ(x), pred(y))


def nat_lt(a: Nat, b: Nat) -> bool:
    if type(a) is int and type(b) is int:
        return a < b
    if type(a) is int:
        return True
    if type(b) is int:
        return False
    return to_int(a) < to_int(b)


def bit_length(n: Nat) -> int:
    """Exact bit length; falls back to materialization for Big."""
    return to_int(n).bit_length()


# strings

def str_append(code: Nat, x: Nat) -> Nat:
    return succ(pair2(code, x))


def str_code(seq: Iterable[Nat]) -> Nat:
    c: Nat = 0
    for x in seq:
        c = str_append(c, x)
    return c


def str_split(code: Nat):
    """(prefix, last) of a nonempty string code."""
    return unpair2(pred(code))


def str_decode(code: Nat) -> tuple:
    out = []
    while code != 0:
        code, x = str_split(code)
        out.append(x)
    out.reverse()
    return tuple(out)


def str_len(code: Nat) -> int:
    n = 0
    while code != 0:
        code = str_split(code)[0]
        n += 1
    return n


def str_at(code: Nat, i: Nat) -> Nat:
    """Entry i, or 0 when out of range."""
    items = str_decode(code)
    if type(i) is int and i < len(items):
        return items[i]
    return 0


def tuple_code(items: Sequence[Nat]) -> Nat:
    """<x0,...,x_{n-1}>_n by right-nested pairing; <x>_1 = x and <>_0 = 0."""
    if not items:
        return 0
    acc = items[-1]
    for x in reversed(items[:-1]):
        acc = pair2(x, acc)
    return acc


def tuple_decode(code: Nat, n: int) -> tuple:
    if n == 0:
        return ()
    out = []
    for _ in range(n - 1):
        x, code = unpair2(code)
        out.append(x)
    out.append(code)
    return tuple(out)


# json helpers: big naturals appear as {"pair": [a, b]}

def nat_to_json(n: Nat):
    if type(n) is int:
        if n < SMALL:
            return n
        n = from_int(n)
    return {"pair": [nat_to_json(n.a), nat_to_json(n.b)]}


def nat_from_json(v) -> Nat:
    if isinstance(v, bool):
        raise ValueError("boolean is not a natural")
    if isinstance(v, int):
        return from_int(v)
    if isinstance(v, dict) and set(v) == {"pair"} and len(v["pair"]) == 2:
        return pair2(nat_from_json(v["pair"][0]), nat_from_json(v["pair"][1]))
    raise ValueError(f"not a natural: {v!r}")


def show_nat(n: Nat, limit: int = 60) -> str:
    if type(n) is int:
        return str(n)
    s = f"pair2({show_nat(n.a, limit)}, {show_nat(n.b, limit)})"
    return s if len(s) <= limit else f"<code ~{approx_bits(n)} bits>"


def approx_bits(n: Nat) -> int:
    """Cheap upper estimate of the bit length, no materialization."""
    memo: dict = {}

    def go(v):
        if type(v) is int:
            return v.bit_length()
        k = id(v)
        if k not in memo:
            memo[k] = 2 * max(go(v.a), go(v.b)) + 1
        return memo[k]

    return go(n)
