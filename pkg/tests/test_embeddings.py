import json

import pytest
from hypothesis import given, settings, strategies as st

from pcalab import embeddings as E
from pcalab import machine as m
from pcalab.machine import INPUT, Prim


def test_iterator_small_powers():
    it = E.iterator_index()
    assert it != 0
    for n in (0, 1, 3):
        power = E.iterate_power(it, n)
        assert m.apply(power.value, 0, 10**6).value == n


def test_iterator_twenty_five():
    power = E.iterate_power(E.iterator_index(), 25)
    assert m.apply(power.value, 0, 10**6).value == 25


def test_plain_embedding_preserves_application():
    F = E.embed_k1_rel()
    pairs = E.sample_defined_pairs(50, seed=3)
    rep = E.check_embedding(F, pairs, 2000)
    assert rep.ok and rep.passed == 50


def test_plain_embedding_injective():
    assert E.check_injective(E.embed_k1_rel(), range(2000))


def test_parity_into_parity_successor():
    spec = E.shipped_specs()["parity-to-parity-successor"]
    assert spec.validate() == []
    F = E.embed_k1_rel(spec)
    pairs = E.sample_defined_pairs(50, spec.source_table, seed=4)
    rep = E.check_embedding(F, pairs, 2000, spec.source_table, spec.target_table)
    assert rep.ok and rep.passed == 50


def test_identity_map_passes():
    pairs = E.sample_defined_pairs(40, seed=5)
    rep = E.check_embedding(lambda a: a, pairs, 2000)
    assert rep.passed == 40 and rep.failed == 0


def test_corrupted_map_is_caught():
    pairs = E.sample_defined_pairs(40, seed=5)
    a, b = pairs[7]
    bad_output = m.apply(a, b, 2000).value

    def corrupted(c):
        return c + 1 if c == bad_output and type(c) is int else c
    rep = E.check_embedding(corrupted, [(a, b)], 2000)
    assert rep.failed == 1 and len(rep.failures) == 1


def test_divergent_sources_are_untestable():
    bot = m.encode(m.BOT)
    rep = E.check_embedding(lambda c: c, [(bot, 0)], 100, target_fuel=100)
    assert rep.untestable == 1 and rep.passed == rep.failed == 0
    assert rep.divergence_clause.startswith("no counterexample")


def test_spec_json_round_trip():
    for spec in E.shipped_specs().values():
        back = E.EmbeddingSpec.from_json(json.loads(json.dumps(spec.to_json())))
        assert back == spec
        assert back.table_code() == spec.table_code()


def test_missing_translator_rejected():
    spec = E.EmbeddingSpec(("parity",), ())
    with pytest.raises(E.EmbeddingError):
        spec.translator_map()


def test_wrong_translator_reported():
    spec = E.EmbeddingSpec(("double",), (), (("double", m.encode(Prim(m.P_SUCC, INPUT))),))
    assert spec.validate(probes=4)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**64), st.integers(0, 2**64))
def test_embedding_injective_on_random_codes(a, b):
    F = E.embed_k1_rel()
    assert (F(a) == F(b)) == (a == b)
