import json

import pytest
from hypothesis import given, settings, strategies as st

from pcalab import coding
from pcalab import hierarchy as H
from pcalab import machine as m
from pcalab import ordinals as O
from pcalab.pca import DistinctDefined, Elem, EqualDefined, apply_seq

P = O.parse
FUEL = 10**5


def val(f, *args, fuel=FUEL):
    o = apply_seq(f, args, fuel)
    assert isinstance(o, m.Defined)
    return o.value


# fixed constants

def test_estar_and_cstar():
    e, c = H.estar(), H.cstar()
    assert e != c
    assert val(e, 17) == e
    assert val(c, c) == c
    assert val(e, 3, 99, 1234) == e


def test_selfrep_pair():
    f, g = H.selfrep_pair()
    assert f != g
    assert val(f, f, g, 0) == f
    assert val(g, 5, 5) == g
    rep = H.probe_sim(f, g, P("w^2"), samples=40)
    assert rep.counterexamples_found == rep.tuples_tried == 40


def test_selfrep_pair_has_no_cert_anywhere_but_level_zero_shape():
    f, g = H.selfrep_pair()
    cert = H.refute_sim(f, g, P("w"), depth_budget=4, pool=[0, 1])
    assert cert is not None and H.check_cert(f, g, P("w"), cert).kind == "Holds"


# non-extensional base pair

def test_nonext_pair():
    f, g = H.nonext_pair()
    assert f != g
    for n in range(101):
        assert val(f, n) == val(g, n)
    assert H.check_cert(f, g, O.ZERO, H.Leaf0(10, f, g)).kind == "Holds"
    assert H.probe_sim(f, g, O.ONE, samples=100).counterexamples_found == 0


def test_addk_lift():
    f, g = H.addk_lift(1, 2)
    assert (val(f, 0), val(g, 0)) == (1, 2)
    a, b = H.addk_lift(7, 7)
    assert a == b
    f0, g0 = H.nonext_pair()
    f1, g1 = H.addk_lift(f0, g0)
    assert H.check_cert(f1, g1, O.ONE, H.Step(0, H.Leaf0(10, f0, g0))).kind == "Holds"


def test_addk_chain_certified_at_each_length():
    f, g = H.nonext_pair()
    cert = H.Leaf0(10, f, g)
    for n in range(1, 5):
        f, g = H.addk_lift(f, g)
        cert = H.lift_cert(cert, n)
        v = H.check_cert(f, g, O.nat(n), cert)
        assert v.kind == "Holds" and v.exact and v.proved_level == O.nat(n)
        assert H.refute_sim(f, g, O.nat(n + 1), pool=[0, 1]) is None


# certificate checking

def test_check_cert_basic():
    assert H.check_cert(Elem(1), Elem(2), O.ZERO, H.Leaf0(10, 1, 2)).kind == "Holds"


@pytest.mark.parametrize("alpha, cert, reason", [
    ("1", H.Leaf0(10, 1, 2), "shape"),
    ("0", H.Step(0, H.Leaf0(10, 1, 2)), "shape"),
    ("w", H.Step(0, H.Leaf0(10, 1, 2)), "shape"),
    ("w", H.Drop(P("w"), H.Leaf0(10, 1, 2)), "shape"),
    ("0", H.Leaf0(10, 1, 3), "leaf"),
    ("0", H.Leaf0(10**9, 1, 2), "cap"),
])
def test_check_cert_rejects(alpha, cert, reason):
    v = H.check_cert(Elem(1), Elem(2), P(alpha), cert)
    assert v.kind == "Fails" and reason in v.reason


def test_drop_reports_limit_bookkeeping():
    f, g = H.witness_pair(O.OMEGA)
    cert = H.refute_sim(f, g, O.OMEGA)
    v = H.check_cert(f, g, O.OMEGA, cert)
    assert v.kind == "Holds"
    assert v.limit_drops and v.limit_drops[0][0] == O.OMEGA
    assert not v.exact


def test_leafdiv_is_modulo_divergence():
    bot = m.encode(m.BOT)
    v = H.check_cert(Elem(bot), Elem(m.const_code(3)), O.ONE, H.Step(0, H.LeafDiv(1, 1000, 3)))
    assert v.kind == "HoldsModuloDivergence" and v.ok


def test_cert_json_is_canonical():
    cert = H.Drop(P("w^2"), H.Step(coding.pair2(2**70, 1), H.LeafDiv(2, 5, 9)))
    d = H.cert_to_json(cert)
    assert H.cert_from_json(json.loads(json.dumps(d))) == cert
    assert H.canonical_json(d) == H.canonical_json(H.cert_to_json(H.cert_from_json(d)))
    with pytest.raises(ValueError):
        H.cert_from_json({"kind": "Leaf9"})


leaf = st.builds(H.Leaf0, st.integers(1, 10**6), st.integers(0, 2**80), st.integers(0, 2**80)) | \
    st.builds(H.LeafDiv, st.sampled_from([1, 2]), st.integers(1, 10**6), st.integers(0, 2**80))
certs = st.recursive(leaf, lambda inner: st.builds(H.Step, st.integers(0, 2**70), inner) |
                     st.builds(H.Drop, st.sampled_from([P("w"), P("w*2 + 3"), P("w^w")]), inner),
                     max_leaves=8)


@settings(max_examples=200)
@given(certs)
def test_cert_json_round_trip(cert):
    canon = lambda c: H.cert_from_json(H.cert_to_json(c))
    assert H.cert_from_json(H.cert_to_json(cert)) == canon(cert)
    assert H.cert_to_json(canon(cert)) == H.cert_to_json(cert)


# search and probes

def test_refute_examples():
    assert H.refute_sim(Elem(1), Elem(1), O.ZERO) is None
    e = H.estar()
    assert H.refute_sim(e, e, O.nat(5), pool=[0, 1, 2]) is None
    cert = H.refute_sim(Elem(1), Elem(2), O.ZERO)
    assert cert == H.Leaf0(cert.fuel, 1, 2)


def test_probe_examples():
    f, g = H.nonext_pair()
    assert H.probe_sim(f, g, O.ONE, samples=50).counterexamples_found == 0
    assert H.probe_sim(Elem(1), Elem(2), O.ZERO, samples=1).counterexamples_found == 1


@pytest.mark.parametrize("alpha", ["0", "1", "2", "3", "w", "w+1"])
def test_witness_pairs_refuted_at_level_and_clean_above(alpha):
    a = P(alpha)
    f, g = H.witness_pair(a)
    cert = H.refute_sim(f, g, a)
    assert cert is not None and H.check_cert(f, g, a, cert).kind == "Holds"
    assert H.probe_sim(f, g, O.succ(a), samples=100).counterexamples_found == 0


def test_witness_pair_base_and_limit_unfolding():
    assert H.witness_pair(O.ZERO) == H.nonext_pair()
    f, g = H.witness_pair(O.OMEGA)
    f3, g3 = H.witness_pair(O.fund_seq(O.OMEGA, 3))
    fw3, gw3 = val(f, 3), val(g, 3)
    for args in ([0, 0, 0], [1, 2, 0], [0, 0, 0, 5]):
        assert val(fw3, *args) == val(f3, *args)
        assert val(gw3, *args) == val(g3, *args)


def test_witness_pair_bound():
    with pytest.raises(ValueError):
        H.witness_pair(P("w^w"))


def test_search_is_deterministic():
    f, g = H.witness_pair(P("w*2"))
    assert H.refute_sim(f, g, P("w*2")) == H.refute_sim(f, g, P("w*2"))
    a = H.probe_sim(f, g, P("w*2+1"), samples=50, seed=4)
    b = H.probe_sim(f, g, P("w*2+1"), samples=50, seed=4)
    assert a.to_json() == b.to_json()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**64), st.sampled_from(["0", "1", "3", "w", "w+2"]))
def test_reflexive_pairs_never_refuted(c, alpha):
    assert H.refute_sim(c, c, P(alpha), depth_budget=3, pool=[0, 1]) is None


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**20), st.integers(0, 2**20))
def test_found_certs_verify_and_survive_more_fuel(a, b):
    f, g = m.const_code(a), m.const_code(b)
    cert = H.refute_sim(f, g, O.ONE, pool=[0])
    if a == b:
        assert cert is None
        return
    assert H.check_cert(f, g, O.ONE, cert).kind == "Holds"
    bigger = H.Step(cert.x, H.Leaf0(cert.inner.fuel * 10, cert.inner.v1, cert.inner.v2))
    assert H.check_cert(f, g, O.ONE, bigger).kind == "Holds"


# distinguishing trees

def test_distinguishing_tree_examples():
    same = H.distinguishing_tree(Elem(4), Elem(4), 3, 3)
    assert isinstance(same["labels"][()], EqualDefined) and same["bound"] == 0
    f, g = H.nonext_pair()
    one = H.distinguishing_tree(f, g, 3, 3)
    assert isinstance(one["labels"][()], DistinctDefined)
    assert one["tree"] == [()] and one["bound"] == 1
    f2, g2 = H.addk_lift(*H.addk_lift(f, g))
    two = H.distinguishing_tree(f2, g2, 3, 3)
    expected = {s for n in range(3) for s in _strings(3, n)}
    assert set(two["tree"]) == expected and two["bound"] == 3
    assert two["kb_total"] == len(expected)


def _strings(width, length):
    if length == 0:
        return [()]
    return [s + (x,) for s in _strings(width, length - 1) for x in range(width)]


# well-foundedness reduction

def test_wf_reduction_single_node():
    e = H.estar()
    out = H.wf_reduction(H.finite_tree_decider(O.FiniteTree([()])))
    assert out != e
    for x in range(5):
        assert val(out, x) == e


def test_wf_reduction_zero_spine():
    e = H.estar()
    v = H.wf_reduction(H.zero_spine_decider())
    for _ in range(10):
        assert v != e
        v = val(v, 0, fuel=10**6)
    assert val(v, 1) == e


def test_wf_reduction_one_branch():
    e = H.estar()
    out = H.wf_reduction(H.finite_tree_decider(O.FiniteTree.closure([(5,)])))
    five = val(out, 5)
    assert five != e
    for y in range(4):
        assert val(five, y) == e
    assert val(out, 4) == e
