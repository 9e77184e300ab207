"""Request/response models and the handlers behind every subcommand.

Handlers are pure functions of their request: the CLI calls them in-process
and the HTTP service exposes the same functions, so both paths produce the
same bytes for the same request.
"""
from __future__ import annotations

import json
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator

from . import coding
from . import embeddings as E
from . import hierarchy as H
from . import instances as I
from . import k2 as K2
from . import machine as m
from . import ordinals as O
from . import reductions as R
from .coding import Nat
from .pca import (Elem, ParseError, UsageError, bracket_abstract, eval_term, free_vars, parse_term,
                  show_term, substitute)

EXIT_OK, EXIT_USAGE, EXIT_REFUTED, EXIT_CHECK_FAILED = 0, 1, 2, 3

NatJson = Union[int, Dict[str, Any]]
TermInput = Union[str, int, Dict[str, Any]]


# configuration

def parse_pool(spec: str) -> List[Nat]:
    """'0..12', '0,1,5' or a mix; the names estar and cstar are allowed."""
    named = {"estar": H.estar, "cstar": H.cstar}
    out: List[Nat] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if part in named:
            out.append(named[part]())
        elif ".." in part:
            lo, hi = part.split("..", 1)
            if not (lo.strip().isdigit() and hi.strip().isdigit()):
                raise UsageError(f"bad pool range {part!r}")
            out.extend(range(int(lo), int(hi) + 1))
        elif part.isdigit():
            out.append(int(part))
        else:
            raise UsageError(f"bad pool entry {part!r}")
    if not out:
        raise UsageError("empty argument pool")
    return list(dict.fromkeys(out))


class RunConfig(BaseModel):
    fuel: int = Field(H.DEFAULT_FUEL, gt=0)
    depth: int = Field(64, gt=0)
    width: int = Field(3, gt=0)
    pool: Optional[str] = None
    seed: int = 0
    samples: int = Field(500, gt=0)
    notation_bound: str = "w^w"

    @field_validator("pool")
    @classmethod
    def _pool_ok(cls, v):
        if v is not None:
            parse_pool(v)
        return v

    @field_validator("notation_bound")
    @classmethod
    def _bound_ok(cls, v):
        O.parse(v)
        return v

    def pool_values(self) -> List[Nat]:
        return parse_pool(self.pool) if self.pool else H.default_pool()

    def bound(self) -> O.Ord:
        return O.parse(self.notation_bound)


class Response(BaseModel):
    exit_code: int = EXIT_OK
    result: Dict[str, Any] = Field(default_factory=dict)
    text: str = ""


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


# shared input handling

BUILTIN_TERMS: Dict[str, Callable[[], Nat]] = {"estar": H.estar, "cstar": H.cstar}


def to_term(v: TermInput):
    """Term syntax string, or a code given as a natural or its JSON form."""
    if isinstance(v, str):
        t = parse_term(v)
        for name in sorted(free_vars(t)):
            if name not in BUILTIN_TERMS:
                raise UsageError(f"unknown name {name!r} (builtins: {', '.join(sorted(BUILTIN_TERMS))})")
            t = substitute(t, name, Elem(BUILTIN_TERMS[name]()))
        return t
    return Elem(coding.nat_from_json(v))


def to_code(v: TermInput, fuel: int) -> Nat:
    t = to_term(v)
    if isinstance(t, Elem):
        return t.c
    o = eval_term(t, fuel)
    if not isinstance(o, m.Defined):
        raise UsageError("term is undefined at the configured fuel")
    return o.value


def parse_ord(text: str, cfg: RunConfig) -> O.Ord:
    a = O.parse(text)
    if not a < cfg.bound():
        raise UsageError(f"{O.show(a)} is not below the notation bound {cfg.notation_bound}")
    return a


def _nat(v: Nat) -> NatJson:
    return coding.nat_to_json(v)


# eval / compile

class EvalRequest(BaseModel):
    term: str
    config: RunConfig = Field(default_factory=RunConfig)


def handle_eval(req: EvalRequest) -> Response:
    o = eval_term(to_term(req.term), req.config.fuel)
    if isinstance(o, m.Defined):
        return Response(result={"defined": True, "value": _nat(o.value), "steps": o.steps},
                        text=coding.show_nat(o.value))
    return Response(result={"defined": False, "fuel": req.config.fuel},
                    text=f"undefined within fuel {req.config.fuel}")


class CompileRequest(BaseModel):
    term: str
    variables: List[str] = Field(default_factory=list)
    config: RunConfig = Field(default_factory=RunConfig)


def handle_compile(req: CompileRequest) -> Response:
    t = parse_term(req.term)
    for name in sorted(free_vars(t) - set(req.variables)):
        if name not in BUILTIN_TERMS:
            raise UsageError(f"free variable {name!r} is not abstracted")
        t = substitute(t, name, Elem(BUILTIN_TERMS[name]()))
    for v in reversed(req.variables):
        t = bracket_abstract(t, v)
    o = eval_term(t, req.config.fuel)
    res: Dict[str, Any] = {"term": show_term(t)}
    if isinstance(o, m.Defined):
        res["code"] = _nat(o.value)
    return Response(result=res, text=show_term(t) + (f"\n= {coding.show_nat(o.value)}" if isinstance(o, m.Defined) else ""))


# certificates

class PairRequest(BaseModel):
    s: TermInput
    t: TermInput
    alpha: str
    config: RunConfig = Field(default_factory=RunConfig)


class RefuteRequest(PairRequest):
    assert_equal: bool = False
    min_cut: int = Field(0, ge=0)


def _search(s, t, alpha: O.Ord, cfg: RunConfig, min_cut: int = 0):
    return H.refute_sim(s, t, alpha, depth_budget=cfg.depth, pool=cfg.pool_values(), fuel=cfg.fuel,
                        min_cut=min_cut)


def _cert_block(s, t, alpha: O.Ord, cert) -> Dict[str, Any]:
    if cert is None:
        return {"certificate": None, "verdict": None}
    return {"certificate": H.cert_to_json(cert), "verdict": H.check_cert(s, t, alpha, cert).to_json()}


def handle_refute(req: RefuteRequest) -> Response:
    cfg = req.config
    alpha = parse_ord(req.alpha, cfg)
    s, t = to_term(req.s), to_term(req.t)
    cert = _search(s, t, alpha, cfg, req.min_cut)
    res = {"alpha": O.show(alpha), **_cert_block(s, t, alpha, cert)}
    code = EXIT_REFUTED if cert is not None and req.assert_equal else EXIT_OK
    text = dumps(res) if cert is not None else f"no certificate found at {O.show(alpha)} within the search budget"
    return Response(exit_code=code, result=res, text=text)


class ProbeRequest(PairRequest):
    assert_equal: bool = False


def handle_probe(req: ProbeRequest) -> Response:
    cfg = req.config
    alpha = parse_ord(req.alpha, cfg)
    rep = H.probe_sim(to_term(req.s), to_term(req.t), alpha, samples=cfg.samples, fuel=cfg.fuel,
                      pool=cfg.pool_values(), seed=cfg.seed)
    res = {"alpha": O.show(alpha), "probe": rep.to_json()}
    code = EXIT_REFUTED if rep.counterexamples_found and req.assert_equal else EXIT_OK
    return Response(exit_code=code, result=res, text=dumps(res))


class CertVerifyRequest(PairRequest):
    certificate: Dict[str, Any]
    fuel_cap: int = Field(10**6, gt=0)


def handle_cert_verify(req: CertVerifyRequest) -> Response:
    alpha = parse_ord(req.alpha, req.config)
    try:
        cert = H.cert_from_json(req.certificate)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed certificate: {exc}") from None
    v = H.check_cert(to_term(req.s), to_term(req.t), alpha, cert, fuel_cap=req.fuel_cap)
    res = {"alpha": O.show(alpha), **v.to_json()}
    return Response(exit_code=EXIT_OK if v.ok else EXIT_CHECK_FAILED, result=res, text=dumps(res))


class WitnessRequest(BaseModel):
    alpha: str
    refute: bool = False
    probe: bool = False
    config: RunConfig = Field(default_factory=RunConfig)


def handle_witness(req: WitnessRequest) -> Response:
    cfg = req.config
    alpha = parse_ord(req.alpha, cfg)
    f, g = H.witness_pair(alpha)
    res: Dict[str, Any] = {"alpha": O.show(alpha), "f": _nat(f), "g": _nat(g)}
    if req.refute:
        res.update(_cert_block(f, g, alpha, _search(f, g, alpha, cfg)))
    if req.probe:
        up = O.succ(alpha)
        rep = H.probe_sim(f, g, up, samples=cfg.samples, fuel=cfg.fuel, pool=cfg.pool_values(), seed=cfg.seed)
        res["probe"] = {"alpha": O.show(up), **rep.to_json()}
    return Response(result=res, text=dumps({**res, "f": coding.show_nat(f), "g": coding.show_nat(g)}))


# trees

class TreeInput(BaseModel):
    nodes: List[List[int]]

    def tree(self) -> O.FiniteTree:
        try:
            return O.FiniteTree.closure(self.nodes)
        except ValueError as exc:
            raise UsageError(str(exc)) from None


class WfReduceRequest(BaseModel):
    tree: Optional[TreeInput] = None
    spine: bool = False
    steps: int = Field(6, ge=0)
    config: RunConfig = Field(default_factory=RunConfig)


def handle_wf_reduce(req: WfReduceRequest) -> Response:
    if (req.tree is None) == (not req.spine):
        raise UsageError("give exactly one of a tree or the spine")
    star = H.estar()
    width = req.config.width
    rows = []
    if req.spine:
        v = H.wf_reduction(H.zero_spine_decider())
        root = v
        for k in range(req.steps + 1):
            rows.append({"path": [0] * k, "in_tree": True, "is_estar": v == star})
            o = m.apply(v, 0, 10**6)
            if not isinstance(o, m.Defined):
                break
            v = o.value
    else:
        tree = req.tree.tree()
        root = H.wf_reduction(H.finite_tree_decider(tree))
        values = {(): root}
        for sigma in tree:
            rows.append({"path": list(sigma), "in_tree": True, "is_estar": values[sigma] == star})
            for x in range(width):
                o = m.apply(values[sigma], x, 10**6)
                child = sigma + (x,)
                if child in tree:
                    values[child] = o.value
                else:
                    rows.append({"path": list(child), "in_tree": False,
                                 "is_estar": isinstance(o, m.Defined) and o.value == star})
    res = {"index": _nat(root), "rows": rows}
    lines = [f"{'path':<16} {'in T':<5} value = e_*"]
    lines += [f"{str(tuple(r['path'])):<16} {str(r['in_tree']):<5} {r['is_estar']}" for r in rows]
    return Response(result=res, text="\n".join(lines))


class KbRankRequest(BaseModel):
    tree: Optional[TreeInput] = None
    s: Optional[TermInput] = None
    t: Optional[TermInput] = None
    config: RunConfig = Field(default_factory=RunConfig)


def handle_kb_rank(req: KbRankRequest) -> Response:
    if req.tree is not None:
        tree = req.tree.tree()
        total, ranks = O.kb_rank(tree)
        height = tree.height_rank()[()]
        rows = sorted(([list(s), r] for s, r in ranks.items()), key=lambda x: x[1])
        res = {"nodes": len(tree), "kb_order_type": total, "height": height, "ranks": rows}
        lines = [f"order type {total}, height {height}"] + [f"{r:>4}  {tuple(s)}" for s, r in rows]
        return Response(result=res, text="\n".join(lines))
    if req.s is None or req.t is None:
        raise UsageError("give a tree, or both s and t")
    cfg = req.config
    out = H.distinguishing_tree(to_term(req.s), to_term(req.t), depth=min(cfg.depth, 8), width=cfg.width,
                                fuel=cfg.fuel)
    res = {"complete": out["complete"], "tree": sorted(list(s) for s in out["tree"])}
    if out["complete"]:
        res.update(kb_order_type=out["kb_total"], bound=out["bound"])
    text = dumps(res)
    return Response(result=res, text=text)


# F and G

class FgRequest(BaseModel):
    max: str = "w^2"
    coeff: int = Field(2, gt=0, le=9)


def handle_fg(req: FgRequest) -> Response:
    top = O.parse(req.max)
    if not top < O.omega_pow(O.OMEGA):
        raise UsageError("fg tabulates notations below w^w only")
    lead = O.to_int(top.terms[0][0]) if top.terms else 0
    rows = []
    for a in O.enumerate_below(lead + 1, max(req.coeff, top.terms[0][1] if top.terms else 1)):
        if a <= top:
            rows.append({"alpha": O.show(a), "F": O.show(O.F(a)), "G": O.show(O.G(a)),
                         "one_plus_F": O.show(O.add(O.ONE, O.F(a)))})
    width = max(len(r["alpha"]) for r in rows) + 2
    lines = [f"{'alpha':<{width}}{'F':<{width}}{'G':<{width + 6}}1+F"]
    lines += [f"{r['alpha']:<{width}}{r['F']:<{width}}{r['G']:<{width + 6}}{r['one_plus_F']}" for r in rows]
    return Response(result={"rows": rows}, text="\n".join(lines))


# builders

BUILDERS = ("hard_pi2", "hard_sigma3", "hard_omega_k", "hard_omega_k_plus1", "defining_formula", "witness_pair")


class BuildRequest(BaseModel):
    target: str
    formula: Optional[str] = None
    z: int = Field(0, ge=0)
    ell: int = Field(1, ge=1)
    k: int = Field(1, ge=1, le=3)
    alpha: Optional[str] = None
    expand: int = Field(0, ge=0, le=3)
    config: RunConfig = Field(default_factory=RunConfig)


def _helper_names() -> Dict[str, Tuple[int, int]]:
    return {f"helper-{lvl}-z{z}": (lvl, z) for lvl in (1, 2, 3) for z in range(10)}


def instance_names() -> List[str]:
    return sorted(I.reduction_instances()) + sorted(_helper_names())


def _pair_result(name: str, f: Nat, g: Nat, **extra) -> Response:
    res = {"target": name, "f": _nat(f), "g": _nat(g), **extra}
    text = dumps({**res, "f": coding.show_nat(f), "g": coding.show_nat(g)})
    return Response(result=res, text=text)


def handle_build(req: BuildRequest) -> Response:
    name = req.target
    insts = I.reduction_instances()
    if name in insts:
        inst = insts[name]
        f, g = inst.pair()
        return _pair_result(name, f, g, truth=inst.truth, note=inst.note,
                            cert_levels=list(inst.cert_levels), no_cert_levels=list(inst.no_cert_levels),
                            clean_levels=list(inst.clean_levels), min_cut=inst.min_cut,
                            pool=[_nat(x) for x in inst.pool])
    helpers = _helper_names()
    if name in helpers:
        level, z = helpers[name]
        hi = I.helper_instances(level)[z]
        return _pair_result(name, hi.build(), H.estar(), truth=hi.truth, level=O.show(hi.target),
                            expect_cert=hi.expect_cert, min_cut=hi.min_cut, pool=[_nat(x) for x in hi.pool])
    if name == "witness_pair":
        alpha = parse_ord(req.alpha or "0", req.config)
        f, g = H.witness_pair(alpha)
        return _pair_result(name, f, g, alpha=O.show(alpha))
    if name == "defining_formula":
        phi = R.defining_formula(parse_ord(req.alpha or "1", req.config))
        res = {"target": name, "formula": R.formula_to_json(phi, expand=req.expand), "code": _nat(R.formula_code(phi))}
        return Response(result=res, text=dumps(res["formula"]))
    if name not in BUILDERS:
        raise UsageError(f"unknown build target {name!r}; builders: {', '.join(BUILDERS)};"
                         f" instances: {', '.join(instance_names())}")
    if not req.formula:
        raise UsageError(f"{name} needs a formula, e.g. 'A n E m . matrix=#code'")
    phi = R.parse_formula_fin(req.formula)
    if name == "hard_pi2":
        f, g = R.hard_pi2(phi, req.z, req.ell)
    elif name == "hard_sigma3":
        f, g = R.hard_sigma3(phi, req.z)
    elif name == "hard_omega_k":
        f, g = R.hard_omega_k(phi, req.z, req.k)
    else:
        f, g = R.hard_omega_k_plus1(phi, req.z, req.k)
    return _pair_result(name, f, g, formula=phi.to_json(), z=req.z)


# embeddings

class EmbedRequest(BaseModel):
    mode: str = "rel"  # rel | iterator | k2
    spec: Union[str, Dict[str, Any]] = "kernel"
    pairs: int = Field(200, gt=0)
    iterations: int = Field(25, ge=0)
    n: int = Field(64, gt=0, le=256)
    stages: int = Field(64, gt=0, le=256)
    triples: Optional[List[List[int]]] = None
    config: RunConfig = Field(default_factory=RunConfig)


def _spec(v) -> Tuple[str, E.EmbeddingSpec]:
    if isinstance(v, dict):
        spec = E.EmbeddingSpec.from_json(v)
        return "custom", spec
    specs = E.shipped_specs()
    if v not in specs:
        raise UsageError(f"unknown embedding spec {v!r}; shipped: {', '.join(sorted(specs))}")
    return v, specs[v]


def handle_embed(req: EmbedRequest) -> Response:
    cfg = req.config
    if req.mode == "iterator":
        it = E.iterator_index()
        rows = []
        for n in range(req.iterations + 1):
            o = E.iterate_power(it, n)
            r = m.apply(o.value, 0, 10**6) if isinstance(o, m.Defined) else o
            rows.append({"n": n, "value": _nat(r.value) if isinstance(r, m.Defined) else None})
        ok = all(r["value"] == r["n"] for r in rows)
        res = {"mode": "iterator", "index": _nat(it), "rows": rows, "ok": ok}
        text = "\n".join(f"e^{r['n']}.0 = {r['value']}" for r in rows)
        return Response(result=res, text=text)
    if req.mode == "rel":
        try:
            label, spec = _spec(req.spec)
            problems = spec.validate()
        except E.EmbeddingError as exc:
            raise UsageError(str(exc)) from None
        if problems:
            raise UsageError("; ".join(problems))
        F = E.embed_k1_rel(spec)
        sample = E.sample_defined_pairs(req.pairs, spec.source_table, fuel=cfg.fuel, seed=cfg.seed)
        rep = E.check_embedding(F, sample, cfg.fuel, spec.source_table, spec.target_table)
        res = {"mode": "rel", "spec": label, "simulator": _nat(F.simulator), "report": rep.to_json()}
        return Response(result=res, text=dumps({**res, "simulator": coding.show_nat(F.simulator)}))
    if req.mode == "k2":
        emb = K2.embed_k1_to_k2(req.n, req.stages)
        triples = [tuple(x) for x in req.triples] if req.triples else K2.defined_triples(emb)
        if any(len(x) != 3 for x in triples):
            raise UsageError("triples must be [a, b, c] lists")
        rep = K2.check_k1k2(emb, triples, seed=cfg.seed, divergent=K2.divergent_pairs(emb)[:50])
        res = {"mode": "k2", "n": req.n, "stages": req.stages, "report": rep.to_json(),
               "images": {str(a): K2.string_to_json(emb.f(a, req.stages).as_string()) for a in range(min(req.n, 4))}}
        return Response(result=res, text=dumps(res["report"]))
    raise UsageError(f"unknown embed mode {req.mode!r}: use rel, iterator or k2")


# selftest

class SelftestRequest(BaseModel):
    only: List[int] = Field(default_factory=list)


def handle_selftest(req: SelftestRequest) -> Response:
    from . import acceptance

    bad = [n for n in req.only if n not in acceptance.CRITERIA]
    if bad:
        raise UsageError(f"unknown criteria {bad}")
    results = acceptance.run_all(req.only or None, echo=None)
    lines = [r.line(timing=False) for r in results]
    failed = [r.number for r in results if not r.passed]
    lines.append(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return Response(exit_code=EXIT_CHECK_FAILED if failed else EXIT_OK,
                    result={"criteria": [r.to_json() for r in results], "failed": failed},
                    text="\n".join(lines))


# dispatch table shared by the CLI and the service

HANDLERS: Dict[str, Tuple[type, Callable[[Any], Response]]] = {
    "eval": (EvalRequest, handle_eval),
    "compile": (CompileRequest, handle_compile),
    "witness": (WitnessRequest, handle_witness),
    "refute": (RefuteRequest, handle_refute),
    "probe": (ProbeRequest, handle_probe),
    "cert-verify": (CertVerifyRequest, handle_cert_verify),
    "wf-reduce": (WfReduceRequest, handle_wf_reduce),
    "fg": (FgRequest, handle_fg),
    "kb-rank": (KbRankRequest, handle_kb_rank),
    "build": (BuildRequest, handle_build),
    "embed": (EmbedRequest, handle_embed),
    "selftest": (SelftestRequest, handle_selftest),
}

USER_ERRORS = (UsageError, ParseError, O.OrdinalError, R.ReductionError, E.EmbeddingError, K2.K2Error)


def dispatch(command: str, payload: Dict[str, Any]) -> Response:
    """Validate a payload for a command and run it; user errors become exit 1."""
    from pydantic import ValidationError

    if command not in HANDLERS:
        return Response(exit_code=EXIT_USAGE, text=f"error: unknown command {command!r}")
    model, fn = HANDLERS[command]
    try:
        return fn(model.model_validate(payload))
    except ValidationError as exc:
        msgs = "; ".join(f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors())
        return Response(exit_code=EXIT_USAGE, text=f"error: {msgs}")
    except USER_ERRORS as exc:
        return Response(exit_code=EXIT_USAGE, text=f"error: {exc}")
