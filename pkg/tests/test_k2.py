import random

import pytest
from hypothesis import given, settings, strategies as st

from pcalab import k2 as K2
from pcalab import machine as m
from pcalab.machine import INPUT, Prim

EMB = K2.embed_k1_to_k2(24, 24)


def test_everywhere_undefined_element():
    f = K2.K2Elem.from_map(lambda s: ())
    out = K2.apply_k2(f, K2.from_stream(lambda i: 5), 4, 8)
    assert out.value == () and out.undefined_at_budget


def test_identity_coding():
    f = K2.K2Elem.from_map(lambda s: s)
    out = K2.apply_k2(f, K2.from_stream(lambda i: 5), 4, 8)
    assert out.value == (5, 5, 5, 5) and not out.undefined_at_budget


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 8), min_size=32, max_size=32), st.integers(1, 8))
def test_budget_monotonicity(seq, s):
    f = K2.K2Elem.from_map(lambda sg: tuple(x + 1 for x in sg))
    g = lambda n: tuple(seq[:n])
    small = K2.apply_k2(f, g, 8, s)
    large = K2.apply_k2(f, g, 16, 2 * s)
    assert K2.is_prefix(small.value, large.value)


def test_heads_are_indices():
    for n in range(25):
        assert EMB.f(n, 24).as_string()[0] == n
        assert EMB.f(n, 0).as_string() == (n,)


def test_defined_applications_are_preserved():
    triples = K2.defined_triples(EMB)
    assert triples
    rng = random.Random(0)
    for a, b, c in triples:
        target = EMB.f(c, 24).as_string()
        for _ in range(3):
            tail = tuple(rng.randrange(25) for _ in range(24))
            out = K2.apply_k2(EMB.elem(a), lambda n: ((b,) + tail)[:n], 3, 24)
            assert out.value and K2.is_prefix(out.value, target)


def test_divergent_applications_stay_empty():
    pairs = K2.divergent_pairs(EMB)
    assert pairs and all(a <= 24 and b <= 24 for a, b in pairs)
    for a, b in pairs[:30]:
        out = K2.apply_k2(EMB.elem(a), lambda n: ((b,) + (0,) * 24)[:n], 1, 24)
        assert out.value == () and out.undefined_at_budget


def test_all_stages_monotone_and_extending():
    assert all(not K2.monotonicity_violations(f) for f in EMB.all_approx())
    for n in (0, 5, 11):
        assert EMB.elem(n).check_stages(24) == []


def test_check_report():
    rep = K2.check_k1k2(EMB, K2.defined_triples(EMB), gs_per=2, divergent=K2.divergent_pairs(EMB)[:5])
    assert rep.ok and rep.checks > 0


def test_non_monotone_map_rejected():
    with pytest.raises(K2.K2Error):
        K2.K2Approx(0, (((), (1, 2)), ((0,), (3,))))


def test_alt_application_reads_the_second_stream():
    g = lambda i: 100 + i
    prog = m.encode(Prim(K2.JOIN_PRIM, Prim(m.P_SUCC, Prim(m.P_ADD, m.Pair(INPUT, INPUT)))))
    f = lambda i: prog if i == 0 else 0
    for x in range(6):
        assert K2.apply_alt(f, g, x, 1000).value == 100 + x


def test_alt_application_invalid_code():
    f = lambda i: 4 if i == 0 else 0
    for x in range(4):
        assert K2.apply_alt(f, lambda i: i, x, 10**5) is m.OUT_OF_FUEL


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 30))
def test_alt_application_agrees_with_kernel(seed, x):
    code = m.encode(m.random_ast(random.Random(seed), 4))
    f = lambda i: code if i == 0 else 7
    assert K2.apply_alt(f, lambda i: 0, x, 5000) == m.eval_code(code, x, 5000)
