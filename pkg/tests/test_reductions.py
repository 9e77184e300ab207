import random

import pytest
from hypothesis import given, settings, strategies as st

from pcalab import coding
from pcalab import hierarchy as H
from pcalab import machine as m
from pcalab import ordinals as O
from pcalab import reductions as R
from pcalab.coding import pair2
from pcalab.machine import IfEq, Num
from pcalab.pca import ParseError, apply_seq, k_apply, k_code
from pcalab.reductions import Atom, Conj, Disj, FormulaFin, Truth

FUEL = 10**5


def out(f, *args, fuel=FUEL):
    return apply_seq(f, args, fuel)


def val(f, *args, fuel=FUEL):
    o = out(f, *args, fuel=fuel)
    assert isinstance(o, m.Defined)
    return o.value


def even_decider():
    def body(me, arg):
        return IfEq(arg, Num(0), Num(1), IfEq(arg, Num(1), Num(0), m.Run(me, R._pred(R._pred(arg)))))
    return m.recursive(body)


# bounded evaluation

def test_decidable_atom():
    phi = FormulaFin((), even_decider())
    assert R.eval_formula_bounded(phi, 4) is Truth.TRUE
    assert R.eval_formula_bounded(phi, 7) is Truth.FALSE


def test_unsatisfiable_existential_is_unknown():
    phi = FormulaFin(("E",), R.matrix_decider(R.const01(0), 1))
    for bound in (1, 5, 20):
        assert R.eval_formula_bounded(phi, 3, witness_bound=bound) is Truth.UNKNOWN


def test_successor_always_exists_within_bounds():
    phi = FormulaFin(("A", "E"), R.matrix_decider(lambda v: R.eq01(v(2), R._succ(v(1))), 2))
    assert R.eval_formula_bounded(phi, 0, witness_bound=10, forall_bound=10) is Truth.TRUE_WITHIN_BOUNDS
    assert R.eval_formula_bounded(phi, 0, witness_bound=3, forall_bound=10) is Truth.UNKNOWN


def test_universal_counterexample_is_false():
    phi = FormulaFin(("A",), R.matrix_decider(lambda v: R._lt(v(1), Num(5)), 1))
    assert R.eval_formula_bounded(phi, 0, forall_bound=10) is Truth.FALSE
    assert R.eval_formula_bounded(phi, 0, forall_bound=5) is Truth.TRUE_WITHIN_BOUNDS


def test_formula_surface_syntax():
    phi = R.parse_formula_fin("A n E m . matrix=#35")
    assert phi == FormulaFin(("A", "E"), 35)
    assert R.parse_formula_fin(". matrix=#0").prefix == ()


@pytest.mark.parametrize("text, pos", [
    ("A n E m matrix=#3", 17), ("A n E . matrix=#3", 6), ("A n Q m . matrix=#3", 4),
    ("A n . matrix=3", 6), ("A n . matrix=#x", 14),
])
def test_formula_syntax_errors(text, pos):
    with pytest.raises(ParseError) as err:
        R.parse_formula_fin(text)
    assert err.value.pos == pos


# collapsing and lifting

def test_collapse_of_k():
    f, g = R.collapse_pair(k_code(), k_code())
    for a, b in ((0, 0), (3, 9), (12, 1)):
        assert val(f, pair2(a, b)) == a == val(g, pair2(a, b))


def test_collapse_transfers_certificates():
    f0, g0 = H.nonext_pair()
    s, t = H.addk_lift(*H.addk_lift(f0, g0))
    cert = H.Step(2, H.Step(5, H.Leaf0(100, f0, g0)))
    assert H.check_cert(s, t, O.nat(2), cert).kind == "Holds"
    cf, cg = R.collapse_pair(s, t)
    assert H.check_cert(cf, cg, O.ONE, R.collapse_cert(cert)).kind == "Holds"
    with pytest.raises(R.ReductionError):
        R.collapse_cert(H.Step(0, H.Leaf0(1, 0, 1)))


def test_lift_of_nonext_pair():
    f0, g0 = H.nonext_pair()
    f, g = R.lift_pair(f0, g0)
    assert H.check_cert(f, g, O.ONE, H.Step(0, H.Leaf0(100, f0, g0))).kind == "Holds"


# hard_pi2

def test_pi2_satisfiable_matrix():
    psi = R.matrix_decider(lambda v: R.ge01(v(2), v(1)), 2)
    for ell in (1, 2):
        f, g = R.hard_pi2(psi, 0, ell)
        assert g == R.d_chain(ell)
        for n in range(21):
            assert val(f, n) == R.d_chain(ell - 1) == val(g, n)


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_pi2_false_matrix(ell):
    psi = R.matrix_decider(R.const01(0), 2)
    f, g = R.hard_pi2(psi, 0, ell)
    assert out(f, 0, fuel=20000) is m.OUT_OF_FUEL
    assert isinstance(out(g, *[0] * (ell - 1)), m.Defined)
    cert = H.refute_sim(f, g, O.nat(ell), pool=[0, 1])
    assert isinstance(cert, H.Step)
    v = H.check_cert(f, g, O.nat(ell), cert)
    assert v.kind == "HoldsModuloDivergence"
    assert H.probe_sim(f, g, O.nat(ell + 1), samples=100, pool=[0, 1, 2]).counterexamples_found == 0


def test_pi2_rejects_zero_length_chain():
    with pytest.raises(R.ReductionError):
        R.hard_pi2(0, 0, 0)


# spines

def test_spine_index():
    f = R.spine_index(m.const_code(9))
    assert val(f, pair2(0, 0)) == 9
    assert out(f, pair2(1, 0), 1, fuel=20000) is m.OUT_OF_FUEL
    ident = R.spine_index(m.CODE_INPUT)
    assert val(ident, pair2(2, 5), 0, 0) == pair2(2, 5)
    assert out(ident, pair2(2, 5), 0, 1, fuel=20000) is m.OUT_OF_FUEL


# sigma3 and the omega-k family

def test_omega_one_is_sigma3():
    phi = FormulaFin(("E", "A", "E"), R.matrix_decider(lambda v: R.ge01(v(1), v(0)), 3))
    assert R.hard_omega_k(phi, 2, 1) == R.hard_sigma3(phi, 2)


def test_omega_k_bounds():
    phi = FormulaFin(("E", "A", "E"), 0)
    with pytest.raises(R.ReductionError):
        R.hard_omega_k(phi, 0, 0)
    with pytest.raises(R.ReductionError):
        R.hard_omega_k(phi, 0, 4)
    with pytest.raises(R.ReductionError):
        R.hard_omega_k(FormulaFin(("A", "E", "A"), 0), 0, 1)


def test_sigma3_false_has_branch_certs():
    phi = FormulaFin(("E", "A", "E"), R.matrix_decider(R.const01(0), 3))
    f, g = R.hard_sigma3(phi, 2)
    for n in range(4):
        fn, gn = val(f, n), val(g, n)
        cert = H.refute_sim(fn, gn, O.nat(n + 1), pool=[0, 1])
        assert cert is not None and H.check_cert(fn, gn, O.nat(n + 1), cert).ok


def test_sigma3_true_from_zero_is_clean_at_small_levels():
    phi = FormulaFin(("E", "A", "E"), R.matrix_decider(R.const01(1), 3))
    f, g = R.hard_sigma3(phi, 2)
    pool = list(range(6))
    for lvl in ("2", "3", "w+1"):
        assert H.probe_sim(f, g, O.parse(lvl), samples=100, pool=pool).counterexamples_found == 0
    # a drop at the limit lands on the cut, which must reach the agreeing level
    assert H.refute_sim(f, g, O.OMEGA, pool=pool, min_cut=2) is None
    assert H.refute_sim(f, g, O.OMEGA, pool=pool, min_cut=0) is not None


def test_omega2_false_branch_levels():
    phi = FormulaFin(tuple("EAEAE"), R.matrix_decider(R.const01(0), 5))
    f, g = R.hard_omega_k(phi, 1, 2)
    for n in range(3):
        lvl = O.add(O.OMEGA, O.nat(n + 1))
        cert = H.refute_sim(f, g, lvl, pool=list(range(6)))
        assert cert is not None and H.check_cert(f, g, lvl, cert).ok


def test_omega2_trivially_true_diverges_symmetrically():
    phi = FormulaFin(tuple("EAEAE"), R.matrix_decider(R.const01(1), 5))
    f, g = R.hard_omega_k(phi, 1, 2)
    for args in ((pair2(1, 0), 1), (pair2(2, 0), 0, 5)):
        assert out(f, *args, fuel=20000) is m.OUT_OF_FUEL
        assert out(g, *args, fuel=20000) is m.OUT_OF_FUEL
    pool = list(range(6))
    for lvl in ("2", "3", "w+1"):
        assert H.probe_sim(f, g, O.parse(lvl), samples=100, pool=pool).divergence_asymmetric == 0
    assert H.probe_sim(f, g, O.parse("w+1"), samples=100, pool=pool).counterexamples_found == 0


# monotonization

def test_monotonize_zero_width():
    phi = FormulaFin(("E",), R.matrix_decider(lambda v: R.eq01(v(1), Num(3)), 1))
    mono = R.monotonize(phi)
    got = [val(mono.matrix, pair2(0, n)) for n in range(10)]
    assert got == [0, 0, 0, 1, 1, 1, 1, 1, 1, 1]


def test_monotonize_keeps_truth_and_is_monotone():
    theta = R.matrix_decider(lambda v: R.IfEq(v(1), Num(2), R.ge01(v(2), v(0)), Num(0)), 2)
    phi = FormulaFin(("E", "E"), theta)
    mono = R.monotonize(phi)
    for z in range(3):
        # the rewritten witness is an (n+1)-tuple, so it needs a larger search bound
        assert R.eval_formula_bounded(phi, z, 6) is Truth.TRUE
        assert R.eval_formula_bounded(mono, z, 25) is Truth.TRUE
    never = FormulaFin(("E", "E"), R.matrix_decider(R.const01(0), 2))
    assert R.eval_formula_bounded(R.monotonize(never), 0, 25) is Truth.UNKNOWN
    for z in range(3):
        for n in range(5):
            for x in range(4):
                cols = coding.tuple_code([x] * (n + 1))
                if val(mono.matrix, coding.tuple_code((z, n, cols))) == 1:
                    wider = coding.tuple_code([x] * (n + 2))
                    assert val(mono.matrix, coding.tuple_code((z, n + 1, wider))) == 1
    with pytest.raises(R.ReductionError):
        R.monotonize(FormulaFin(("A",), theta))


# combiners

def test_combine2_preserves_hereditary_totality():
    star, cst = H.estar(), H.cstar()
    kc = k_apply(cst)
    elems = [star, cst, kc, k_apply(kc)]
    rng = random.Random(5)
    for a in elems:
        for b in elems:
            c = R.combine2(a, b)
            for _ in range(5):
                args = [pair2(rng.randrange(4), rng.randrange(4)) for _ in range(4)]
                assert isinstance(out(c, *args), m.Defined)


def test_combine_omega_preserves_hereditary_totality():
    kc = k_apply(H.cstar())
    w = R.combine_omega(m.const_code(kc))
    rng = random.Random(6)
    for _ in range(10):
        assert isinstance(out(w, *[rng.randrange(20) for _ in range(4)]), m.Defined)


# infinitary formulas

def atom_codes():
    return st.builds(Atom, st.integers(0, 2**70), st.sampled_from([0, 1]))


levels = st.sampled_from(["1", "2", "w", "w*2+1", "w^w"]).map(O.parse)
formulas = atom_codes() | st.builds(Disj, levels, st.integers(0, 2**70)) | \
    st.builds(Conj, levels, st.integers(0, 2**70))


def canonical(phi):
    if isinstance(phi, Atom):
        return Atom(coding.from_int(phi.decider), phi.polarity)
    return type(phi)(phi.level, coding.from_int(phi.parts))


@settings(max_examples=200)
@given(formulas)
def test_formula_code_round_trip(phi):
    assert R.formula_decode(R.formula_code(phi)) == canonical(phi)
    assert R.formula_from_json(R.formula_to_json(phi)) == canonical(phi)


def test_formula_decode_rejects_junk():
    assert R.formula_decode(pair2(7, 0)) is None
    assert R.formula_decode(pair2(0, pair2(5, 3))) is None


def test_listed_parts_and_negation():
    yes = Atom(R.env_decider(R.const01(1)))
    phi = R.disj(1, [yes, Atom(yes.decider, 0)])
    assert R.subformula(phi, 0) == yes
    assert R.subformula(phi, 5) == Atom(yes.decider, 0)
    neg = R.negate(phi)
    assert isinstance(neg, Conj) and neg.level == O.ONE
    assert R.eval_formula_bounded(phi, 0) is Truth.TRUE
    assert R.eval_formula_bounded(neg, 0) is Truth.FALSE


def test_formula_json_with_listed_parts():
    yes = Atom(R.env_decider(R.const01(1)))
    d = {"disj": {"level": "1", "parts": [R.formula_to_json(yes)]}}
    phi = R.formula_from_json(d)
    assert R.subformula(phi, 0) == yes
    expanded = R.formula_to_json(phi, expand=1)
    assert expanded["disj"]["parts"][0] == R.formula_to_json(yes)


def test_stratification_checked():
    yes = Atom(R.env_decider(R.const01(1)))
    bad = R.disj(1, [R.disj(1, [yes])])
    with pytest.raises(R.ReductionError):
        R.validate_stratification(bad)
    flat = R.disj(2, [R.conj(2, [yes])])
    with pytest.raises(R.ReductionError):
        R.validate_stratification(flat)
    with pytest.raises(R.ReductionError):
        R.hardness_helper(R.conj(1, [yes]), 0)


# hardness helper, base level

def test_helper_unsatisfiable_base():
    phi = R.disj(1, [Atom(R.env_decider(R.const01(0)))])
    p = R.hardness_helper(phi, 0)
    star = H.estar()
    for l in range(3):
        for n in range(4):
            assert val(p, pair2(l, n)) == star
    assert R.hardness_target(phi) == O.ONE


def test_helper_with_witness():
    phi = R.disj(1, [Atom(R.env_decider(lambda v: R.eq01(v(1), Num(3))))])
    p = R.hardness_helper(phi, 0)
    star, cst = H.estar(), H.cstar()
    assert val(p, pair2(0, 3)) == cst
    assert val(p, pair2(0, 2)) == star
    for lvl in (O.ONE, O.nat(2)):
        cert = H.refute_sim(p, star, lvl, pool=[0, pair2(0, 3)])
        assert cert is not None and H.check_cert(p, star, lvl, cert).kind == "Holds"


@pytest.mark.parametrize("truth", [True, False])
def test_helper_even_level(truth):
    atom = Atom(R.env_decider(R.const01(1 if truth else 0)))
    phi = R.disj(2, [R.conj(1, [atom])])
    p = R.hardness_helper(phi, 0)
    star, pool = H.estar(), list(range(4))
    assert R.hardness_target(phi) == O.OMEGA
    cert = H.refute_sim(p, star, O.OMEGA, pool=pool, min_cut=4)
    if truth:
        assert cert is None
        assert H.probe_sim(p, star, O.nat(2), samples=60, pool=pool).counterexamples_found == 0
    else:
        assert cert is not None and H.check_cert(p, star, O.OMEGA, cert).ok


# defining formulas

def test_defining_formula_examples():
    phi = R.defining_formula(O.ONE)
    same = R.eval_formula_bounded(phi, pair2(1, m.pad(1, 1)), witness_bound=12, forall_bound=40)
    assert same is Truth.TRUE_WITHIN_BOUNDS
    assert R.eval_formula_bounded(phi, pair2(1, 2), witness_bound=12, forall_bound=40) is Truth.FALSE


@pytest.mark.parametrize("alpha", ["1", "2", "3", "w", "w+1"])
def test_defining_formula_level_bookkeeping(alpha):
    a = O.parse(alpha)
    phi = R.defining_formula(a)
    assert phi.level == O.add(O.ONE, a)
    assert isinstance(phi, Conj if O.parity(a) is O.Parity.ODD else Disj)


def test_defining_formula_needs_positive_level():
    with pytest.raises(R.ReductionError):
        R.defining_formula(O.ZERO)


def test_defining_formula_for_level():
    phi = R.defining_formula_for_level(O.nat(2))
    assert phi.level == O.add(O.ONE, O.F(O.nat(2)))
