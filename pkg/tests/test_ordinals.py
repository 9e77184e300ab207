import functools
import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from pcalab import machine as m
from pcalab import ordinals as O

P = O.parse


# independent oracle for notations with finite exponents: {exponent: coeff}

def poly(a):
    out = {}
    for e, c in a.terms:
        out[O.to_int(e)] = c
    return out


def from_poly(p):
    return O.Ord(tuple((O.nat(e), c) for e, c in sorted(p.items(), reverse=True) if c))


def oracle_F(a):
    p = poly(a)
    k = p.get(0, 0)
    out = {e - 1: c for e, c in p.items() if e >= 2}
    out[0] = 2 * p.get(1, 0) + (1 if k else 0)
    return from_poly(out)


def oracle_G(a):
    p = poly(a)
    k = p.get(0, 0)
    out = {e + 1: c for e, c in p.items() if e >= 1}
    out[1] = out.get(1, 0) + k // 2
    out[0] = k % 2
    return from_poly(out)


NOTATIONS = O.enumerate_below(4, 3)


def test_enumeration_size_and_order():
    assert len(NOTATIONS) == 256
    assert all(a < b for a, b in zip(NOTATIONS, NOTATIONS[1:]))


def test_F_and_G_match_closed_forms():
    for a in NOTATIONS:
        assert O.F(a) == oracle_F(a), O.show(a)
        assert O.G(a) == oracle_G(a), O.show(a)


def test_F_table_for_omega_multiples():
    assert O.F(O.OMEGA) == O.nat(2)
    for k in range(1, 6):
        assert O.add(O.ONE, O.F(P(f"w*{k}"))) == O.nat(2 * k + 1)
        for n in range(1, 6):
            assert O.add(O.ONE, O.F(P(f"w*{k} + {n}"))) == O.nat(2 * k + 2)


def test_G_small_values():
    assert O.G(O.nat(2)) == O.OMEGA
    assert O.G(O.nat(4)) == P("w*2")
    assert O.G(O.ZERO) == O.ZERO and O.G(O.ONE) == O.ONE
    assert O.G(O.OMEGA) == P("w^2")


def test_F_inverts_G_and_range_shape():
    for a in NOTATIONS:
        g = O.G(a)
        assert O.F(g) == a
        lam, k = O.split_finite(g)
        assert k in (0, 1)


def test_monotonicity_on_enumeration():
    for b, a in zip(NOTATIONS, NOTATIONS[1:]):
        assert O.F(b) <= O.F(a)
        assert O.G(b) < O.G(a)


def test_fundamental_sequence_examples():
    assert O.kind(O.OMEGA) is O.Kind.LIMIT
    assert O.fund_seq(O.OMEGA, 3) == O.nat(4)
    assert O.fund_seq(P("w^2"), 2) == P("w*3")
    assert O.fund_seq(P("w^w"), 2) == P("w^3")
    assert O.fund_seq(P("w^2 + w"), 0) == P("w^2 + 1")


def test_fund_seq_rejects_non_limits():
    for a in (O.ZERO, O.nat(3), P("w + 1")):
        with pytest.raises(O.OrdinalError):
            O.fund_seq(a, 0)


def test_addition_and_comparison():
    assert O.add(P("w + 1"), O.OMEGA) == P("w*2")
    assert O.add(P("w"), O.nat(3)) == P("w + 3")
    assert O.ord_cmp(P("w^2"), P("w*5")) is O.Ordering.GREATER
    assert O.ord_cmp(P("w*5"), P("w*5")) is O.Ordering.EQUAL


def test_parity_examples():
    assert O.parity(O.ZERO) is O.Parity.EVEN
    assert O.parity(P("w + 3")) is O.Parity.ODD
    assert O.parity(P("w^2")) is O.Parity.EVEN


def test_literal_syntax():
    assert O.show(P("w^2*3 + w*1 + 4")) == "w^2*3 + w + 4"
    assert O.show(P("w^(w+1)")) == "w^(w + 1)"
    assert P("ω") == O.OMEGA
    assert P("w*2 + w") == P("w*3")
    for bad in ("", "w +", "w^", "3 3"):
        with pytest.raises(O.OrdinalError):
            P(bad)


def test_cnf_invariants_enforced():
    with pytest.raises(O.OrdinalError):
        O.Ord(((O.ONE, 0),))
    with pytest.raises(O.OrdinalError):
        O.Ord(((O.ZERO, 1), (O.ONE, 1)))


def test_ordinal_codes_round_trip():
    for a in NOTATIONS + [P("w^w"), P("w^(w+1)*2 + 5")]:
        assert O.ord_decode(O.ord_code(a)) == a


def test_notation_primitives_run_in_the_machine():
    fid = m.KERNEL.id_of("ord_F")
    assert fid == 39
    prog = m.encode(m.Prim(fid, m.INPUT))
    out = m.eval_code(prog, O.ord_code(P("w*3")), 100)
    assert O.ord_decode(out.value) == O.nat(6)


# Kleene-Brouwer

def test_kb_less_examples():
    assert O.kb_less((0, 1), (0,))
    assert O.kb_less((1,), (2,))
    assert not O.kb_less((2,), (1, 5))
    assert not O.kb_less((), ())


def test_kb_rank_examples():
    assert O.kb_rank(O.FiniteTree([()])) == (1, {(): 0})
    total, rank = O.kb_rank(O.FiniteTree([(), (0,), (1,)]))
    assert total == 3 and rank == {(0,): 0, (1,): 1, (): 2}


def test_tree_must_be_prefix_closed():
    with pytest.raises(ValueError):
        O.FiniteTree([(), (0, 1)])


def brute_rank(tree):
    nodes = list(tree.nodes)
    order = sorted(nodes, key=functools.cmp_to_key(
        lambda a, b: -1 if O.kb_less(a, b) else (1 if O.kb_less(b, a) else 0)))
    return {s: i for i, s in enumerate(order)}


def random_tree(rng, size):
    nodes = {()}
    while len(nodes) < size:
        parent = rng.choice(sorted(nodes))
        if len(parent) < 5:
            nodes.add(parent + (rng.randrange(4),))
    return O.FiniteTree(nodes)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 40))
def test_kb_rank_matches_brute_sort(seed, size):
    tree = random_tree(random.Random(seed), size)
    total, rank = O.kb_rank(tree)
    assert total == len(tree)
    assert rank == brute_rank(tree)
    assert rank[()] == total - 1


strings = st.lists(st.integers(0, 3), max_size=4).map(tuple)


@given(strings, strings, strings)
def test_kb_is_a_strict_total_order(a, b, c):
    assert not O.kb_less(a, a)
    if a != b:
        assert O.kb_less(a, b) != O.kb_less(b, a)
    if O.kb_less(a, b) and O.kb_less(b, c):
        assert O.kb_less(a, c)


# properties over random notations

def notation(max_depth=2):
    leaf = st.integers(0, 4).map(O.nat)

    def extend(inner):
        return st.lists(st.tuples(inner, st.integers(1, 3)), min_size=1, max_size=3).map(build)
    return st.recursive(leaf, extend, max_leaves=6)


def build(pairs):
    acc = O.ZERO
    for e, c in sorted(pairs, key=lambda p: functools.cmp_to_key(O.cmp)(p[0]), reverse=True):
        acc = O.add(acc, O.omega_pow(e, c))
    return acc


@settings(max_examples=200)
@given(notation())
def test_F_inverts_G(a):
    assert O.F(O.G(a)) == a


@settings(max_examples=200)
@given(notation(), notation())
def test_monotonicity(a, b):
    if b < a:
        assert O.F(b) <= O.F(a)
        assert O.G(b) < O.G(a)


@settings(max_examples=100)
@given(notation())
def test_fund_seq_increases_to_the_limit(a):
    lam, _ = O.split_finite(a)
    if lam.is_zero:
        return
    prev = None
    for n in range(51):
        x = O.fund_seq(lam, n)
        assert x < lam
        if prev is not None:
            assert prev < x
        prev = x


@settings(max_examples=200)
@given(notation())
def test_literal_round_trip(a):
    assert P(O.show(a)) == a


@given(notation(), notation(), notation())
def test_comparison_is_total_order(a, b, c):
    assert (O.cmp(a, b) == 0) == (a == b)
    assert O.cmp(a, b) == -O.cmp(b, a)
    if a < b and b < c:
        assert a < c
    for x, y in itertools.permutations((a, b), 2):
        assert O.add(x, y) >= y
