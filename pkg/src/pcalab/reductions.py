"""Formulas over the kernel machine and the index builders that reduce their
truth to the extensionality relations.

Every builder is pure syntax: it assembles program codes (mostly via s11 and
the recursion theorem) and never runs its own output.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

from . import coding
from . import hierarchy as H
from . import machine as m
from . import ordinals as O
from .coding import Nat, pair2, str_code
from .machine import (INPUT, At, AppendElem, Fst, IfEq, Len, Num, Pair, Prim, Run,
                      Snd, s11, s11_expr)
from .pca import App, Elem, Term, K_INNER, k_apply

A_, E_ = "A", "E"


class ReductionError(ValueError):
    pass


# small AST vocabulary

def _succ(a):
    return Prim(m.P_SUCC, a)


def _pred(a):
    return Prim(m.P_PRED, a)


def _lt(a, b):
    return Prim(m.P_LT, Pair(a, b))


def _not01(a):
    return IfEq(a, Num(0), Num(1), Num(0))


def _tuple_ast(parts: Sequence[m.Ast]) -> m.Ast:
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Pair(p, out)
    return out


def _component(t: m.Ast, i: int, n: int) -> m.Ast:
    """Component i of an n-tuple, unrolled statically."""
    for _ in range(i):
        t = Snd(t)
    return Fst(t) if i < n - 1 else t


def _fst2(t):
    return Fst(Fst(t))


def term_program(t: Term) -> m.Ast:
    """Program ignoring its input and evaluating the closed term t."""
    if isinstance(t, Elem):
        return Num(t.c)
    if isinstance(t, App):
        return Run(term_program(t.s), term_program(t.t))
    raise ReductionError("open term")


def _as_term(x) -> Term:
    return x if isinstance(x, (Elem, App)) else Elem(x)


# three-valued truth

class Truth(str, Enum):
    TRUE = "True"
    FALSE = "False"
    TRUE_WITHIN_BOUNDS = "TrueWithinBounds"
    UNKNOWN = "Unknown"

    @property
    def definite(self) -> bool:
        return self in (Truth.TRUE, Truth.FALSE)


def _exists(results: Iterable[Truth]) -> Truth:
    # no witness inside the bound proves nothing
    best = Truth.UNKNOWN
    for r in results:
        if r is Truth.TRUE:
            return r
        if r is Truth.TRUE_WITHIN_BOUNDS:
            best = r
    return best


def _forall(results: Iterable[Truth]) -> Truth:
    unknown = False
    for r in results:
        if r is Truth.FALSE:
            return r
        if r is Truth.UNKNOWN:
            unknown = True
    return Truth.UNKNOWN if unknown else Truth.TRUE_WITHIN_BOUNDS


def _decide(code: Nat, x: Nat, fuel: int) -> Truth:
    o = m.apply(code, x, fuel)
    if not isinstance(o, m.Defined):
        return Truth.UNKNOWN
    if o.value == 1:
        return Truth.TRUE
    if o.value == 0:
        return Truth.FALSE
    return Truth.UNKNOWN


# finitary prenex formulas

@dataclass(frozen=True)
class FormulaFin:
    """Prenex formula Q1 x1 ... Qk xk. matrix(<z, x1, ..., xk>) = 1."""

    prefix: Tuple[str, ...]
    matrix: Nat

    def __post_init__(self):
        if any(q not in (A_, E_) for q in self.prefix):
            raise ReductionError("quantifiers must be 'A' or 'E'")

    def show(self) -> str:
        names = [f"x{i + 1}" for i in range(len(self.prefix))]
        q = " ".join(f"{p} {n}" for p, n in zip(self.prefix, names))
        return f"{q} . matrix=#{coding.show_nat(self.matrix)}".strip()

    def to_json(self) -> dict:
        return {"prefix": "".join(self.prefix), "matrix": coding.nat_to_json(self.matrix)}

    @staticmethod
    def from_json(d: dict) -> "FormulaFin":
        return FormulaFin(tuple(d["prefix"]), coding.nat_from_json(d["matrix"]))


def parse_formula_fin(text: str) -> FormulaFin:
    """Surface syntax `A n E m . matrix=#code` (variable names are free-form)."""
    from .pca import ParseError
    head, sep, tail = text.partition(".")
    if not sep:
        raise ParseError("expected '.' before the matrix", len(text))
    words = head.split()
    if len(words) % 2:
        raise ParseError("each quantifier needs a variable", len(head))
    prefix = []
    pos = 0
    for i in range(0, len(words), 2):
        q = words[i]
        pos = text.find(q, pos)
        if q not in (A_, E_):
            raise ParseError(f"unknown quantifier {q!r}", pos)
        prefix.append(q)
    body = tail.strip()
    at = len(head) + 1 + len(tail) - len(tail.lstrip())
    if not body.startswith("matrix=#"):
        raise ParseError("expected matrix=#code", at)
    try:
        code = int(body[len("matrix=#"):])
    except ValueError:
        raise ParseError("matrix code must be a numeral", at + len("matrix=#")) from None
    return FormulaFin(tuple(prefix), coding.from_int(code))


def _eval_fin(phi: FormulaFin, vals: Tuple[Nat, ...], depth: int, wb: int, fb: int, fuel: int) -> Truth:
    if depth == len(phi.prefix):
        return _decide(phi.matrix, coding.tuple_code(vals), fuel)
    nxt = (lambda x: _eval_fin(phi, vals + (x,), depth + 1, wb, fb, fuel))
    if phi.prefix[depth] == E_:
        return _exists(nxt(x) for x in range(wb + 1))
    return _forall(nxt(x) for x in range(fb))


# computable infinitary formulas, coded as naturals

F_ATOM, F_DISJ, F_CONJ = 0, 1, 2


@dataclass(frozen=True)
class Atom:
    """decider(env) = 1, or = 0 when polarity is 0. env = <z, bound vars...>."""

    decider: Nat
    polarity: int = 1


@dataclass(frozen=True)
class Disj:
    """OR over l of EXISTS n. parts(l)(env ^ n)."""

    level: O.Ord
    parts: Nat


@dataclass(frozen=True)
class Conj:
    """AND over l of FORALL n. parts(l)(env ^ n)."""

    level: O.Ord
    parts: Nat


FormulaInf = Union[Atom, Disj, Conj]


def formula_code(phi: FormulaInf) -> Nat:
    if isinstance(phi, Atom):
        return pair2(F_ATOM, pair2(phi.decider, phi.polarity))
    tag = F_DISJ if isinstance(phi, Disj) else F_CONJ
    return pair2(tag, pair2(O.ord_code(phi.level), phi.parts))


def formula_decode(c: Nat) -> Optional[FormulaInf]:
    tag, body = coding.unpair2(c)
    x, y = coding.unpair2(body)
    if tag == F_ATOM:
        return Atom(x, y) if y in (0, 1) else None
    if tag in (F_DISJ, F_CONJ):
        lvl = O.ord_decode(x)
        if lvl is None:
            return None
        return (Disj if tag == F_DISJ else Conj)(lvl, y)
    return None


def parts_from_list(items: Sequence[Union[FormulaInf, Nat]]) -> Nat:
    """Enumerator l -> items[l], repeating the last item past the end."""
    if not items:
        raise ReductionError("need at least one subformula")
    codes = [formula_code(x) if isinstance(x, (Atom, Disj, Conj)) else x for x in items]
    cases = [(i, Num(c)) for i, c in enumerate(codes[:-1])]
    return m.encode(m.table_lookup(INPUT, cases, Num(codes[-1])))


def disj(level, items) -> Disj:
    return Disj(_ord(level), parts_from_list(items))


def conj(level, items) -> Conj:
    return Conj(_ord(level), parts_from_list(items))


def _ord(x) -> O.Ord:
    if isinstance(x, O.Ord):
        return x
    if isinstance(x, int):
        return O.nat(x)
    return O.parse(x)


def subformula(phi: Union[Disj, Conj], index: int, fuel: int = 10**5) -> FormulaInf:
    o = m.apply(phi.parts, index, fuel)
    if not isinstance(o, m.Defined):
        raise ReductionError(f"part {index} not produced within fuel")
    sub = formula_decode(o.value)
    if sub is None:
        raise ReductionError(f"part {index} is not a formula code")
    return sub


def negate(phi: FormulaInf) -> FormulaInf:
    """Negation with lazily negated parts, built by the in-machine negator."""
    o = m.eval_code(_neg_program(), pair2(0, formula_code(phi)), 100)
    return formula_decode(o.value)


def formula_to_json(phi: FormulaInf, expand: int = 0, fuel: int = 10**5) -> dict:
    """JSON view; with expand > 0 the first `expand` parts are listed too."""
    if isinstance(phi, Atom):
        return {"atom": {"decider": coding.nat_to_json(phi.decider), "polarity": phi.polarity}}
    key = "disj" if isinstance(phi, Disj) else "conj"
    out = {"level": O.show(phi.level), "parts_code": coding.nat_to_json(phi.parts)}
    if expand > 0:
        out["parts"] = [formula_to_json(subformula(phi, i, fuel), expand - 1, fuel) for i in range(expand)]
    return {key: out}


def formula_from_json(d: dict) -> FormulaInf:
    if "atom" in d:
        a = d["atom"]
        return Atom(coding.nat_from_json(a["decider"]), int(a.get("polarity", 1)))
    for key, cls in (("disj", Disj), ("conj", Conj)):
        if key in d:
            body = d[key]
            level = O.parse(str(body["level"]))
            if "parts_code" in body:
                return cls(level, coding.nat_from_json(body["parts_code"]))
            return cls(level, parts_from_list([formula_from_json(x) for x in body["parts"]]))
    raise ReductionError(f"not a formula: {d!r}")


def _eval_inf(phi: FormulaInf, env: Tuple[Nat, ...], wb: int, fb: int, pb: int, fuel: int) -> Truth:
    if isinstance(phi, Atom):
        t = _decide(phi.decider, str_code(env), fuel)
        if phi.polarity == 0 and t.definite:
            t = Truth.FALSE if t is Truth.TRUE else Truth.TRUE
        return t

    def inst(l, n):
        try:
            sub = subformula(phi, l, fuel)
        except ReductionError:
            return Truth.UNKNOWN
        return _eval_inf(sub, env + (n,), wb, fb, pb, fuel)

    if isinstance(phi, Disj):
        return _exists(inst(l, n) for l in range(pb) for n in range(wb + 1))
    return _forall(inst(l, n) for l in range(pb) for n in range(fb))


def eval_formula_bounded(phi, z: Nat, witness_bound: int = 10, fuel: int = 10**4,
                         forall_bound: Optional[int] = None, part_bound: int = 2) -> Truth:
    """Three-valued truth of phi(z).

    Existential variables are searched in 0..witness_bound inclusive, universal
    ones are checked on 0..forall_bound-1, and infinitary conjunctions and
    disjunctions look at their first `part_bound` parts. A universal that
    passes every checked instance is TRUE_WITHIN_BOUNDS, never TRUE; an
    existential with no witness is UNKNOWN, never FALSE."""
    fb = witness_bound if forall_bound is None else forall_bound
    if isinstance(phi, FormulaFin):
        return _eval_fin(phi, (z,), 0, witness_bound, fb, fuel)
    return _eval_inf(phi, (z,), witness_bound, fb, part_bound, fuel)


# collapsing and lifting argument pairs

def lift_pair(s, t) -> Tuple[Nat, Nat]:
    """(f, g) with f ~_1 K s and g ~_1 K t."""
    s, t = _as_term(s), _as_term(t)
    if isinstance(s, Elem) and isinstance(t, Elem):
        return k_apply(s.c), k_apply(t.c)
    return m.encode(term_program(s)), m.encode(term_program(t))


def collapse_pair(s, t) -> Tuple[Nat, Nat]:
    """(f, g) with f.<a,b> ~ s a b and g.<a,b> ~ t a b."""
    def mk(u):
        return m.encode(Run(Run(term_program(_as_term(u)), Fst(INPUT)), Snd(INPUT)))
    return mk(s), mk(t)


def collapse_cert(c: H.Cert) -> H.Cert:
    """A certificate for (s, t) at a+2 that starts with two steps becomes one
    for collapse_pair(s, t) at a+1."""
    if not (isinstance(c, H.Step) and isinstance(c.inner, H.Step)):
        raise ReductionError("certificate must start with two steps")
    return H.Step(pair2(c.x, c.inner.x), c.inner.inner)


# monotonization of the leading existential

def monotonize(phi: FormulaFin) -> FormulaFin:
    """E n Q x.th(z,n,x)  ->  E n Q X. (E p <= n) th(z, p, X[p]).

    Each later variable becomes an (n+1)-tuple; the bounded quantifier is pushed
    past the unbounded ones, so the result is again prenex with a decidable
    matrix, equivalent to the original, and monotone in n."""
    if not phi.prefix or phi.prefix[0] != E_:
        raise ReductionError("monotonize needs a leading existential")
    k = len(phi.prefix) - 1
    if k == 0:
        loop_matrix = _monotone_loop_zero(phi.matrix)
    else:
        loop_matrix = _monotone_loop(phi.matrix, k)
    return FormulaFin(phi.prefix, loop_matrix)


@lru_cache(maxsize=None)
def _monotone_loop_zero(theta: Nat) -> Nat:
    # <z, n>: exists p <= n with theta(<z, p>)
    def body(me, arg):
        p, orig = Fst(arg), Snd(arg)
        z, n = Fst(orig), Snd(orig)
        return IfEq(Run(Num(theta), Pair(z, p)), Num(1), Num(1),
                    IfEq(p, n, Num(0), Run(me, Pair(_succ(p), orig))))
    loop = m.recursive(body)
    return m.encode(Run(Num(loop), Pair(Num(0), INPUT)))


@lru_cache(maxsize=None)
def _monotone_loop(theta: Nat, k: int) -> Nat:
    width = k + 2

    def body(me, arg):
        # arg = <p, <orig, <R1..Rk>>>, Ri = remaining tail of the i-th tuple
        p = Fst(arg)
        orig = Fst(Snd(arg))
        rest = Snd(Snd(arg))
        z = _component(orig, 0, width)
        n = _component(orig, 1, width)
        rs = [_component(rest, i, k) for i in range(k)]
        comps = [IfEq(p, n, r, Fst(r)) for r in rs]
        val = Run(Num(theta), _tuple_ast([z, p] + comps))
        again = Run(me, Pair(_succ(p), Pair(orig, _tuple_ast([Snd(r) for r in rs]))))
        return IfEq(val, Num(1), Num(1), IfEq(p, n, Num(0), again))

    loop = m.recursive(body)
    xs = [_component(INPUT, i + 2, width) for i in range(k)]
    return m.encode(Run(Num(loop), Pair(Num(0), Pair(INPUT, _tuple_ast(xs)))))


def _split_z_matrix(theta: Nat, lead: int) -> Nat:
    """Matrix on <<z, y1..y_lead>, rest> from one on <z, y1..y_lead, rest>."""
    zz = Fst(INPUT)
    head = [Fst(zz)] + [_component(Snd(zz), i, lead) for i in range(lead)]
    return m.encode(Run(Num(theta), _tuple_ast(head + [Snd(INPUT)])))


# Pi^0_2 into ~_1

def d_chain(ell: int) -> Nat:
    """d_0 = an everywhere-undefined code, d_{k+1} = K d_k."""
    d = m.CODE_BOT
    for _ in range(ell):
        d = k_apply(d)
    return d


@lru_cache(maxsize=None)
def _search_program() -> Nat:
    # <P, <n, m>>, P = <psi, <z, r>>: r once psi(<z, n, m>) = 1, else continue at m+1
    def body(me, arg):
        P, nm = Fst(arg), Snd(arg)
        psi, z, r = Fst(P), Fst(Snd(P)), Snd(Snd(P))
        n, mm = Fst(nm), Snd(nm)
        return IfEq(Run(psi, Pair(z, Pair(n, mm))), Num(1), r,
                    Run(me, Pair(P, Pair(n, _succ(mm)))))
    return m.recursive(body)


@lru_cache(maxsize=None)
def _pi2_f() -> Nat:
    return m.encode(Run(Num(_search_program()), Pair(Fst(INPUT), Pair(Snd(INPUT), Num(0)))))


def _matrix_of(psi) -> Nat:
    return psi.matrix if isinstance(psi, FormulaFin) else psi


def hard_pi2(psi, z: Nat, ell: int = 1) -> Tuple[Nat, Nat]:
    """(f, g): f ~_1 g iff A n E m psi(<z,n,m>); otherwise f !~_ell g; always f ~_{ell+1} g."""
    if ell < 1:
        raise ReductionError("ell must be at least 1")
    f = s11(_pi2_f(), pair2(_matrix_of(psi), pair2(z, d_chain(ell - 1))))
    return f, d_chain(ell)


# Sigma^0_3 into ~_omega

@lru_cache(maxsize=None)
def _d_program() -> Nat:
    # n -> d_n, computed in-machine
    def body(me, n):
        return IfEq(n, Num(0), Num(m.CODE_BOT), s11_expr(Num(K_INNER), Run(me, _pred(n))))
    return m.recursive(body)


@lru_cache(maxsize=None)
def _sig3_f() -> Nat:
    # <<theta, z>, n> -> hard_pi2(theta, <z, n>, n+1)[0]
    th, z, n = _fst2(INPUT), Snd(Fst(INPUT)), Snd(INPUT)
    return m.encode(s11_expr(Num(_pi2_f()), Pair(th, Pair(Pair(z, n), Run(Num(_d_program()), n)))))


@lru_cache(maxsize=None)
def _sig3_g() -> Nat:
    return m.encode(Run(Num(_d_program()), _succ(INPUT)))


def _check_prefix(phi: FormulaFin, want: str):
    if "".join(phi.prefix) != want:
        raise ReductionError(f"expected quantifier prefix {want}, got {''.join(phi.prefix) or 'none'}")


def _alternating(n: int, first: str) -> str:
    other = A_ if first == E_ else E_
    return "".join(first if i % 2 == 0 else other for i in range(n))


def _sigma3_theta(phi: FormulaFin) -> Nat:
    _check_prefix(phi, "EAE")
    mono = monotonize(phi)
    return _split_z_matrix(mono.matrix, 1)


def hard_sigma3(phi: FormulaFin, z: Nat) -> Tuple[Nat, Nat]:
    """phi = E n A a E b. theta. f ~_omega g iff phi(z); always f ~_{omega+1} g."""
    th = _sigma3_theta(phi)
    return s11(_sig3_f(), pair2(th, z)), _sig3_g()


# spines

@lru_cache(maxsize=None)
def _zero_tail() -> Nat:
    # 1 iff every entry after the first is 0
    def body(me, s):
        return IfEq(_lt(Len(s), Num(2)), Num(1), Num(1),
                    IfEq(Prim(m.P_STR_LAST, s), Num(0), Run(me, Prim(m.P_STR_INIT, s)), Num(0)))
    return m.recursive(body)


@lru_cache(maxsize=None)
def spine_program() -> Nat:
    """i with i(e, sigma) = e.<n,m> on sigma = <n,m>^0^n, an extender on its
    proper prefixes and undefined elsewhere."""
    ext = H._wf_extend_program()

    def body(me, arg):
        e, sigma = Fst(arg), Snd(arg)
        head = At(sigma, Num(0))
        want = _succ(Fst(head))
        extend = s11_expr(Num(ext), Pair(me, arg))
        on_spine = IfEq(Len(sigma), want, Run(e, head),
                        IfEq(_lt(Len(sigma), want), Num(1), extend, m.BOT))
        return IfEq(sigma, Num(0), extend,
                    IfEq(Run(Num(_zero_tail()), sigma), Num(1), on_spine, m.BOT))

    return m.recursive(body)


def spine_index(seq: Nat) -> Nat:
    """f with f <n,m> 0 ... 0 (n zeros) = seq.<n,m>, diverging off the spines."""
    return s11(H._wf_extend_program(), pair2(spine_program(), pair2(seq, 0)))


def _spine_builder_expr(seq_expr: m.Ast) -> m.Ast:
    return s11_expr(Num(H._wf_extend_program()), Pair(Num(spine_program()), Pair(seq_expr, Num(0))))


# Sigma^0_{2k+1} into ~_{omega k}

@lru_cache(maxsize=None)
def _omega_builders(phi: FormulaFin, k: int) -> Tuple[Nat, Nat]:
    """Programs z -> f-code and z -> g-code for hard_omega_k(phi, z, k)."""
    _check_prefix(phi, _alternating(2 * k + 1, E_))
    if k == 1:
        th = _sigma3_theta(phi)
        return (m.encode(s11_expr(Num(_sig3_f()), Pair(Num(th), INPUT))),
                m.const_code(_sig3_g()))
    mono = monotonize(phi)
    inner = FormulaFin(phi.prefix[2:], _split_z_matrix(mono.matrix, 2))
    ba, bb = _omega_builders(inner, k - 1)
    # s11(seq, z).<n,m> runs the inner builder on z' = <z, <n, m>>
    seq_a, seq_b = m.encode(Run(Num(ba), INPUT)), m.encode(Run(Num(bb), INPUT))
    return (m.encode(_spine_builder_expr(s11_expr(Num(seq_a), INPUT))),
            m.encode(_spine_builder_expr(s11_expr(Num(seq_b), INPUT))))


def _run_builder(b: Nat, z: Nat) -> Nat:
    # builders only assemble syntax; a generous fixed budget always suffices
    o = m.eval_code(b, z, 10**5)
    if not isinstance(o, m.Defined):
        raise ReductionError("builder did not finish")
    return o.value


def hard_omega_k(phi: FormulaFin, z: Nat, k: int) -> Tuple[Nat, Nat]:
    """phi is Sigma^0_{2k+1} prenex (E A E ...). f ~_{omega k} g iff phi(z);
    always f ~_{omega k + 1} g."""
    if k < 1:
        raise ReductionError("k must be at least 1")
    if k > 3:
        raise ReductionError("k is capped at 3")
    if k == 1:
        return hard_sigma3(phi, z)
    ba, bb = _omega_builders(phi, k)
    return _run_builder(ba, z), _run_builder(bb, z)


def hard_omega_k_plus1(phi: FormulaFin, z: Nat, k: int) -> Tuple[Nat, Nat]:
    """phi is Pi^0_{2k+2} prenex (A E A ...). f ~_{omega k + 1} g iff phi(z)."""
    _check_prefix(phi, _alternating(2 * k + 2, A_))
    if k == 0:
        return hard_pi2(phi, z, 1)
    inner = FormulaFin(phi.prefix[1:], _split_z_matrix(phi.matrix, 1))
    ba, bb = _omega_builders(inner, k)
    return (s11(m.encode(Run(Num(ba), INPUT)), z), s11(m.encode(Run(Num(bb), INPUT)), z))


# combiners

@lru_cache(maxsize=None)
def _combine2_g() -> Nat:
    # <<i, <x, y>>, <u, v>> -> i(<x.u, y.v>)
    head, arg = Fst(INPUT), Snd(INPUT)
    i, x, y = Fst(head), Fst(Snd(head)), Snd(Snd(head))
    return m.encode(Run(i, Pair(Run(x, Fst(arg)), Run(y, Snd(arg)))))


@lru_cache(maxsize=None)
def _combine2_i() -> Nat:
    star = H.estar()

    def body(me, arg):
        rest = s11_expr(Num(_combine2_g()), Pair(me, arg))
        return IfEq(Fst(arg), Num(star), Num(star), IfEq(Snd(arg), Num(star), Num(star), rest))

    return m.recursive(body)


def combine2(a: Nat, b: Nat) -> Nat:
    """f(a, b) ~_alpha e_* iff a ~_alpha e_* or b ~_alpha e_* (hereditarily total a, b)."""
    star = H.estar()
    if a == star or b == star:
        return star
    return s11(_combine2_g(), pair2(_combine2_i(), pair2(a, b)))


@lru_cache(maxsize=None)
def _any_star() -> Nat:
    star = H.estar()

    def body(me, s):
        return IfEq(s, Num(0), Num(0),
                    IfEq(Prim(m.P_STR_LAST, s), Num(star), Num(1), Run(me, Prim(m.P_STR_INIT, s))))

    return m.recursive(body)


@lru_cache(maxsize=None)
def _thread() -> Nat:
    # <l, <acc, <R, <sigma, n>>>> -> acc ^ [sigma[l] u_l, ..., sigma[n-1] u_{n-1}]
    def body(me, arg):
        l = Fst(arg)
        acc = Fst(Snd(arg))
        R = Fst(Snd(Snd(arg)))
        sn = Snd(Snd(Snd(arg)))
        sigma, n = Fst(sn), Snd(sn)
        u = IfEq(_succ(l), n, R, Fst(R))
        nxt = Pair(_succ(l), Pair(AppendElem(acc, Run(At(sigma, l), u)), Pair(Snd(R), sn)))
        return IfEq(l, n, acc, Run(me, nxt))

    return m.recursive(body)


@lru_cache(maxsize=None)
def _combine_omega_g() -> Nat:
    # <<i, <e, sigma>>, v> -> i(<e, threaded sigma ^ e.n>)
    head, v = Fst(INPUT), Snd(INPUT)
    i, e, sigma = Fst(head), Fst(Snd(head)), Snd(Snd(head))
    n = Len(sigma)
    first = Run(i, Pair(e, AppendElem(Num(0), Run(e, Num(0)))))
    threaded = Run(Num(_thread()), Pair(Num(0), Pair(Num(0), Pair(v, Pair(sigma, n)))))
    later = Run(i, Pair(e, AppendElem(threaded, Run(e, n))))
    return m.encode(IfEq(n, Num(0), first, later))


@lru_cache(maxsize=None)
def _combine_omega_i() -> Nat:
    star = H.estar()

    def body(me, arg):
        rest = s11_expr(Num(_combine_omega_g()), Pair(me, arg))
        return IfEq(Run(Num(_any_star()), Snd(arg)), Num(1), Num(star), rest)

    return m.recursive(body)


def combine_state(seq: Nat, xs: Sequence[Nat]) -> Nat:
    """h(seq, <x_0..x_{n-1}>): e_* if some x_l is e_*, else the threading index."""
    star = H.estar()
    if any(x == star for x in xs):
        return star
    return s11(_combine_omega_g(), pair2(_combine_omega_i(), pair2(seq, str_code(xs))))


def combine_omega(seq: Nat) -> Nat:
    """w with: a_n ~_alpha e_* for some n gives w ~_{alpha+n+1} e_*, and
    a_n !~_alpha e_* for all n gives w !~_alpha e_*."""
    return combine_state(seq, ())


def _combine_omega_expr(seq: m.Ast) -> m.Ast:
    return s11_expr(Num(_combine_omega_g()), Pair(Num(_combine_omega_i()), Pair(seq, Num(0))))


# hardness for Sigma^0_alpha formulas

@lru_cache(maxsize=None)
def _neg_program() -> Nat:
    # <0, phi> -> code of not-phi;  <1, <parts, l>> -> not-(parts.l)
    def body(me, arg):
        mode, x = Fst(arg), Snd(arg)
        tag, inner = Fst(x), Snd(x)
        neg_parts = s11_expr(s11_expr(me, Num(1)), Snd(inner))
        flip = Pair(Num(F_ATOM), Pair(Fst(inner), _not01(Snd(inner))))
        swap = IfEq(tag, Num(F_DISJ), Pair(Num(F_CONJ), Pair(Fst(inner), neg_parts)),
                    IfEq(tag, Num(F_CONJ), Pair(Num(F_DISJ), Pair(Fst(inner), neg_parts)), m.BOT))
        top = IfEq(tag, Num(F_ATOM), flip, swap)
        return IfEq(mode, Num(0), top, Run(me, Pair(Num(0), Run(Fst(x), Snd(x)))))
    return m.recursive(body)


@lru_cache(maxsize=None)
def _hh_sub() -> Nat:
    # <<hh, <par, <parts, env>>>, <l, n>> -> q_{l,n}
    head, x = Fst(INPUT), Snd(INPUT)
    hh = Fst(head)
    par = Fst(Snd(head))
    parts, env = Fst(Snd(Snd(head))), Snd(Snd(Snd(head)))
    sub = Run(parts, Fst(x))
    env2 = AppendElem(env, Snd(x))
    dec, pol = Fst(Snd(sub)), Snd(Snd(sub))
    raw = Run(dec, env2)
    truth = IfEq(pol, Num(1), IfEq(raw, Num(1), Num(1), Num(0)), IfEq(raw, Num(1), Num(0), Num(1)))
    atom = IfEq(truth, par, Num(H.cstar()), Num(H.estar()))
    deeper = Run(hh, Pair(_not01(par), Pair(Run(Num(_neg_program()), Pair(Num(0), sub)), env2)))
    return m.encode(IfEq(Fst(sub), Num(F_ATOM), atom, deeper))


@lru_cache(maxsize=None)
def _hh_program() -> Nat:
    # <par, <phi, env>> -> p for the disjunction phi at the given parity
    def body(me, arg):
        par, phi, env = Fst(arg), Fst(Snd(arg)), Snd(Snd(arg))
        seq = s11_expr(Num(_hh_sub()), Pair(me, Pair(par, Pair(Snd(Snd(phi)), env))))
        return IfEq(Fst(phi), Num(F_DISJ), IfEq(par, Num(1), seq, _combine_omega_expr(seq)), m.BOT)
    return m.recursive(body)


def validate_stratification(phi: FormulaInf, sample: int = 3, depth: int = 6, fuel: int = 10**5):
    """Check on sampled parts that levels strictly drop and connectives alternate."""
    if isinstance(phi, Atom) or depth == 0:
        return
    want = Conj if isinstance(phi, Disj) else Disj
    for l in range(sample):
        sub = subformula(phi, l, fuel)
        if isinstance(sub, Atom):
            continue
        if not isinstance(sub, want):
            raise ReductionError(f"part {l} of a {type(phi).__name__} must be an atom or a {want.__name__}")
        if not sub.level < phi.level:
            raise ReductionError(f"part level {O.show(sub.level)} is not below {O.show(phi.level)}")
        validate_stratification(sub, sample, depth - 1, fuel)


def hardness_helper(phi: FormulaInf, z: Nat) -> Nat:
    """Hereditarily total p_z for the Sigma^0_alpha formula phi (a Disj):
    even alpha: phi(z) gives p ~_{G(alpha)} e_*, else p is never ~ e_*;
    odd alpha: the other way round."""
    if not isinstance(phi, Disj):
        raise ReductionError("hardness_helper needs a disjunction (a Sigma formula)")
    if phi.level.is_zero:
        raise ReductionError("level must be at least 1")
    validate_stratification(phi)
    par = 1 if O.parity(phi.level) is O.Parity.ODD else 0
    seq = s11(_hh_sub(), pair2(_hh_program(), pair2(par, pair2(phi.parts, str_code((z,))))))
    return seq if par == 1 else combine_omega(seq)


def hardness_target(phi: Disj) -> O.Ord:
    """The level G(alpha) at which hardness_helper's output is compared with e_*."""
    return O.G(phi.level)


# defining formulas for ~_{G(alpha)}

@lru_cache(maxsize=None)
def _gather() -> Nat:
    # <layout, env> -> concatenated argument blocks; layout entries <pos, arity>
    def body(me, arg):
        layout, env = Fst(arg), Snd(arg)
        last = Prim(m.P_STR_LAST, layout)
        block = Prim(m.P_TUPLE_TO_STR, Pair(Snd(last), At(env, Fst(last))))
        return IfEq(layout, Num(0), Num(0),
                    Prim(m.P_STR_CONCAT, Pair(Run(me, Pair(Prim(m.P_STR_INIT, layout), env)), block)))
    return m.recursive(body)


def _chain(f: m.Ast, args: m.Ast, fuel: m.Ast) -> m.Ast:
    return Prim(m.P_CHAIN, Pair(fuel, Prim(m.P_STR_CONCAT, Pair(AppendElem(Num(0), f), args))))


@lru_cache(maxsize=None)
def _atom_core(kind: str) -> Nat:
    # <<u, v>, <args, <k, k2>>>
    uv, rest = Fst(INPUT), Snd(INPUT)
    u, v = Fst(uv), Snd(uv)
    args, k, k2 = Fst(rest), Fst(Snd(rest)), Snd(Snd(rest))
    U, V = _chain(u, args, k), _chain(v, args, k)
    if kind == "noclash":
        body = IfEq(U, Num(0), Num(1), IfEq(V, Num(0), Num(1), IfEq(U, V, Num(1), Num(0))))
    else:
        U2, V2 = _chain(u, args, k2), _chain(v, args, k2)
        left = IfEq(U, Num(0), Num(1), IfEq(V2, U, Num(1), Num(0)))
        right = IfEq(V, Num(0), Num(1), IfEq(U2, V, Num(1), Num(0)))
        body = IfEq(left, Num(1), right, Num(0))
    return m.encode(body)


@lru_cache(maxsize=None)
def _atom_program(kind: str) -> Nat:
    # <<layout, <d, extra>>, env>; env[d] = <x_0..x_{extra-1}, <x, k>>, env[d+1] = k2
    P, env = Fst(INPUT), Snd(INPUT)
    layout, d, extra = Fst(P), Fst(Snd(P)), Snd(Snd(P))
    block = Prim(m.P_TUPLE_TO_STR, Pair(_succ(extra), At(env, d)))
    xk = Prim(m.P_STR_LAST, block)
    pre = Prim(m.P_STR_CONCAT, Pair(Run(Num(_gather()), Pair(layout, env)), Prim(m.P_STR_INIT, block)))
    args = AppendElem(pre, Fst(xk))
    k2 = At(env, _succ(d)) if kind == "match" else Num(0)
    return m.encode(Run(Num(_atom_core(kind)), Pair(At(env, Num(0)), Pair(args, Pair(Snd(xk), k2)))))


def _formula_expr(tag: int, level: m.Ast, parts: m.Ast) -> m.Ast:
    return Pair(Num(tag), Pair(level, parts))


@lru_cache(maxsize=None)
def _def_program() -> Nat:
    one, two = O.ord_code(O.ONE), O.ord_code(O.nat(2))
    P_KIND, P_PRED, P_FUND, P_PAR, P_SUCC, P_ADD = 32, 33, 34, 35, 41, 42

    def body(me, arg):
        mode, P = Fst(arg), Snd(arg)

        def mode_code(k):
            return s11_expr(me, Num(k))

        # mode 0: <alpha, <layout, <d, extra>>>
        alpha, layout = Fst(P), Fst(Snd(P))
        d, extra = Fst(Snd(Snd(P))), Snd(Snd(Snd(P)))
        level = Prim(P_ADD, Pair(Num(one), alpha))
        beta = Prim(P_PRED, alpha)
        base = _formula_expr(F_CONJ, Num(two), s11_expr(mode_code(4), Snd(P)))
        limit = _formula_expr(F_DISJ, level, s11_expr(mode_code(1), Pair(alpha, Pair(layout, d))))
        wider = AppendElem(layout, Pair(d, _succ(extra)))
        odd = _formula_expr(F_CONJ, level, s11_expr(mode_code(3), Pair(beta, Pair(wider, d))))
        even = _formula_expr(F_DISJ, level, s11_expr(mode_code(2), Pair(beta, Pair(layout, d))))
        m0 = IfEq(alpha, Num(one), base,
                  IfEq(Prim(P_KIND, alpha), Num(2), limit,
                       IfEq(Prim(P_PAR, alpha), Num(1), odd, even)))

        # modes 1-3: <<ordinal, <layout, d>>, x>
        head, x = Fst(P), Snd(P)
        o, lay, dd = Fst(head), Fst(Snd(head)), Snd(Snd(head))

        def call(a, lay_, extra_):
            return Run(me, Pair(Num(0), Pair(a, Pair(lay_, Pair(_succ(dd), extra_)))))

        fund = Prim(P_FUND, Pair(o, x))
        oddified = IfEq(Prim(P_PAR, fund), Num(1), fund, Prim(P_SUCC, fund))
        m1 = call(oddified, lay, Num(0))
        m2 = call(o, lay, x)
        m3 = call(o, lay, Num(0))

        # mode 4: <<layout, <d, extra>>, l>;  mode 5: <<layout, <d, extra>>, _>
        q = Fst(P)
        match = _formula_expr(F_DISJ, Num(one), s11_expr(mode_code(5), q))
        noclash = Pair(Num(F_ATOM), Pair(s11_expr(Num(_atom_program("noclash")), q), Num(1)))
        m4 = IfEq(x, Num(0), match, noclash)
        m5 = Pair(Num(F_ATOM), Pair(s11_expr(Num(_atom_program("match")), q), Num(1)))

        return m.table_lookup(mode, [(0, m0), (1, m1), (2, m2), (3, m3), (4, m4)], m5)

    return m.recursive(body)


def _def_formula(alpha: O.Ord, extra: int) -> FormulaInf:
    o = m.eval_code(_def_program(), pair2(0, pair2(O.ord_code(alpha), pair2(0, pair2(1, extra)))), 10**5)
    if not isinstance(o, m.Defined):
        raise ReductionError("formula builder did not finish")
    return formula_decode(o.value)


def defining_formula(alpha) -> FormulaInf:
    """Formula phi(<u, v>) of level 1 + alpha with phi <-> u ~_{G(alpha)} v.

    Odd alpha gives a conjunction (Pi), even alpha a disjunction (Sigma).
    Atoms are bounded-halting tests on application chains."""
    alpha = _ord(alpha)
    if alpha.is_zero:
        raise ReductionError("alpha must be at least 1")
    return _def_formula(alpha, 0)


def defining_formula_for_level(gamma) -> FormulaInf:
    """Formula for ~_gamma itself, of level 1 + F(gamma) (gamma >= 1)."""
    gamma = _ord(gamma)
    if gamma.is_zero:
        raise ReductionError("gamma must be at least 1")
    lam, d = O.split_finite(gamma)
    beta = O.F(gamma)
    if O.kind(gamma) is O.Kind.LIMIT:
        return _def_formula(beta, 0)
    # gamma = lam + 1 + (d - 1): fold the d-1 extra arguments into the top conjunction
    return _def_formula(beta, d - 1)


# decider library for building instances

def env_decider(expr: Callable[[Callable[[int], m.Ast]], m.Ast]) -> Nat:
    """Decider program from an AST over env entries: expr(var) with var(i) = env[i]."""
    return m.encode(expr(lambda i: At(INPUT, Num(i))))


def matrix_decider(expr: Callable[[Callable[[int], m.Ast]], m.Ast], arity: int) -> Nat:
    """Matrix program on <z, x1..xk> from an AST over var(0)=z, var(i)=x_i."""
    return m.encode(expr(lambda i: _component(INPUT, i, arity + 1)))


def eq01(a: m.Ast, b: m.Ast) -> m.Ast:
    return IfEq(a, b, Num(1), Num(0))


def ge01(a: m.Ast, b: m.Ast) -> m.Ast:
    return _not01(_lt(a, b))


def const01(v: int) -> Callable:
    return lambda var: Num(v)
