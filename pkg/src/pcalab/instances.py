"""Named formula instances with known truth, used by `build`, the selftest
and the test-suite.

Each instance records where a refutation certificate must exist, where the
search must come back empty, and where random probes must stay clean.
Argument pools are small numerals: index codes such as e_* are huge, and
feeding them to the builders' searches makes every probe run out of fuel.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

from . import coding
from . import hierarchy as H
from . import ordinals as O
from . import reductions as R
from .coding import Nat
from .machine import Num
from .reductions import Atom, FormulaFin, conj, disj, eq01, ge01

SMALL_POOL = tuple(range(6))


@dataclass(frozen=True)
class Instance:
    name: str
    builder: str
    truth: bool
    pair: Callable[[], Tuple[Nat, Nat]]
    cert_levels: Tuple[str, ...] = ()
    no_cert_levels: Tuple[str, ...] = ()
    clean_levels: Tuple[str, ...] = ()
    min_cut: int = 0
    pool: Tuple[Nat, ...] = SMALL_POOL
    note: str = ""

    def levels(self, which: str) -> List[O.Ord]:
        return [O.parse(x) for x in getattr(self, which)]


def _fin(prefix: str, expr, arity: Optional[int] = None) -> FormulaFin:
    k = len(prefix) if arity is None else arity
    return FormulaFin(tuple(prefix), R.matrix_decider(expr, k))


def _neq01(a, b):
    return R._not01(eq01(a, b))


@lru_cache(maxsize=None)
def reduction_instances() -> Dict[str, Instance]:
    out: Dict[str, Instance] = {}

    def add(inst: Instance):
        out[inst.name] = inst

    # A n E m: matrix on <z, n, m>
    pi2_true = _fin("AE", lambda v: ge01(v(2), v(1)))
    pi2_false = _fin("AE", R.const01(0))
    add(Instance("pi2-true", "hard_pi2", True, lambda: R.hard_pi2(pi2_true, 0, 1),
                 no_cert_levels=("1",), clean_levels=("1", "2"),
                 note="A n E m. m >= n"))
    for ell in (1, 2, 3):
        add(Instance(f"pi2-false-{ell}", "hard_pi2", False,
                     lambda ell=ell: R.hard_pi2(pi2_false, 0, ell),
                     cert_levels=(str(ell),), clean_levels=(str(ell + 1),),
                     note="A n E m. false"))

    # E n A a E b: matrix on <z, n, a, b>
    s3_true = _fin("EAE", lambda v: ge01(v(1), v(0)))
    s3_false = _fin("EAE", R.const01(0))
    add(Instance("sigma3-true", "hard_sigma3", True, lambda: R.hard_sigma3(s3_true, 2),
                 no_cert_levels=("w",), clean_levels=("w+1",), min_cut=4,
                 note="E n A a E b. n >= z, z = 2"))
    add(Instance("sigma3-false", "hard_sigma3", False, lambda: R.hard_sigma3(s3_false, 2),
                 cert_levels=("1", "2", "3", "w"), clean_levels=("w+1",),
                 note="E n A a E b. false"))

    o2_true = _fin("EAEAE", lambda v: ge01(v(1), v(0)))
    o2_false = _fin("EAEAE", R.const01(0))
    add(Instance("omega2-true", "hard_omega_k", True, lambda: R.hard_omega_k(o2_true, 1, 2),
                 no_cert_levels=("w*2",), clean_levels=("w*2+1",), min_cut=3,
                 note="Sigma_5, first variable >= z, z = 1"))
    add(Instance("omega2-false", "hard_omega_k", False, lambda: R.hard_omega_k(o2_false, 1, 2),
                 cert_levels=("w+1", "w+2", "w+3", "w*2"), clean_levels=("w*2+1",),
                 note="Sigma_5, false"))

    p1_true = _fin("AEAE", lambda v: ge01(v(2), v(1)))
    p1_false = _fin("AEAE", lambda v: _neq01(v(1), v(0)))
    add(Instance("omega1-plus1-true", "hard_omega_k_plus1", True,
                 lambda: R.hard_omega_k_plus1(p1_true, 1, 1),
                 no_cert_levels=("w+1",), clean_levels=("w+2",), min_cut=3,
                 note="A n E m A a E b. m >= n"))
    add(Instance("omega1-plus1-false", "hard_omega_k_plus1", False,
                 lambda: R.hard_omega_k_plus1(p1_false, 1, 1),
                 cert_levels=("w+1",), clean_levels=("w+2",),
                 note="A n E m A a E b. m != z, z = 1"))
    return out


# hardness-helper families: the formula is true exactly when z < 5

TRUE_BELOW = 5


def _hh_formula(level: int):
    if level == 1:
        # E n. n = z and z < 5          env = [z, <l, n>-bound n]
        d = R.env_decider(lambda v: R.IfEq(R._lt(v(0), Num(TRUE_BELOW)), Num(1), eq01(v(1), v(0)), Num(0)))
        return disj(1, [Atom(d)])
    if level == 2:
        # E n A m. m != 0 or z < 5
        d = R.env_decider(lambda v: R.IfEq(v(2), Num(0), R._lt(v(0), Num(TRUE_BELOW)), Num(1)))
        return disj(2, [conj(1, [Atom(d)])])
    if level == 3:
        # E n A m E k. n = 0 and z < 5
        d = R.env_decider(lambda v: R.IfEq(v(1), Num(0), R._lt(v(0), Num(TRUE_BELOW)), Num(0)))
        return disj(3, [conj(2, [disj(1, [Atom(d)])])])
    raise ValueError("levels 1..3 only")


@dataclass(frozen=True)
class HelperInstance:
    level: int
    z: int
    truth: bool
    formula: R.FormulaInf
    target: O.Ord
    expect_cert: bool
    pool: Tuple[Nat, ...]
    min_cut: int

    def build(self) -> Nat:
        return R.hardness_helper(self.formula, self.z)


def helper_instances(level: int, count: int = 10) -> List[HelperInstance]:
    phi = _hh_formula(level)
    pool = tuple(sorted(set(SMALL_POOL) | {coding.pair2(0, k) for k in range(TRUE_BELOW)}))
    odd = level % 2 == 1
    out = []
    for z in range(count):
        truth = z < TRUE_BELOW
        # odd level: true -> never ~ e_*; even level: false -> never ~ e_*
        expect_cert = truth if odd else not truth
        out.append(HelperInstance(level, z, truth, phi, O.G(O.nat(level)), expect_cert,
                                  pool if level == 1 else SMALL_POOL, 4))
    return out


def helper_verdict(inst: HelperInstance, depth_budget: int = 64) -> Optional[H.Cert]:
    p = inst.build()
    return H.refute_sim(p, H.estar(), inst.target, depth_budget=depth_budget,
                        pool=list(inst.pool), min_cut=inst.min_cut)
