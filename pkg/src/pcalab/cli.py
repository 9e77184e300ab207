"""`pca-lab`: a thin client over pcalab.api.

Every subcommand builds a request payload and runs it in-process, or posts it
to a running service with --server. Exit codes: 0 ok, 1 usage or parse error,
2 refutation found where absence was asserted, 3 a verification failed.
"""
from __future__ import annotations

import functools
import json
import sys
import urllib.error
import urllib.request
from typing import Any, Dict, Optional

import click

from . import api


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read JSON from {path}: {exc}") from None


def _term_arg(v: Optional[str]):
    """A term in surface syntax, or @file.json holding a code."""
    if v is not None and v.startswith("@"):
        data = _load_json(v[1:])
        return data["code"] if isinstance(data, dict) and "code" in data else data
    return v


def _remote(server: str, command: str, payload: Dict[str, Any]) -> api.Response:
    req = urllib.request.Request(server.rstrip("/") + f"/run/{command}", data=json.dumps(payload).encode(),
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as resp:
            return api.Response.model_validate(json.load(resp))
    except (urllib.error.URLError, OSError) as exc:
        raise click.ClickException(f"server unreachable: {exc}") from None


def _config(ctx: click.Context) -> Dict[str, Any]:
    obj = ctx.obj
    cfg = dict(_load_json(obj["config_file"])) if obj["config_file"] else {}
    for key in ("fuel", "depth", "width", "pool", "seed", "samples", "notation_bound"):
        if obj.get(key) is not None:
            cfg[key] = obj[key]
    return cfg


def _run(ctx: click.Context, command: str, payload: Dict[str, Any], with_config: bool = True) -> None:
    if with_config:
        payload = {**payload, "config": _config(ctx)}
    server = ctx.obj["server"]
    resp = _remote(server, command, payload) if server else api.dispatch(command, payload)
    if resp.text:
        stream = sys.stderr if resp.exit_code == api.EXIT_USAGE else sys.stdout
        click.echo(resp.text, file=stream)
    if ctx.obj["json_out"] and resp.exit_code != api.EXIT_USAGE:
        with open(ctx.obj["json_out"], "w", encoding="utf-8") as fh:
            fh.write(json.dumps(resp.result, sort_keys=True, indent=2) + "\n")
    ctx.exit(resp.exit_code)


SHARED_OPTIONS = [
    click.option("--fuel", type=click.IntRange(min=1), help="Step budget per application."),
    click.option("--depth", type=click.IntRange(min=1), help="Certificate search depth budget."),
    click.option("--width", type=click.IntRange(min=1), help="Branching width for trees."),
    click.option("--pool", help="Argument pool, e.g. '0..12' or '0,1,5,estar'."),
    click.option("--seed", type=int, help="Random seed."),
    click.option("--samples", type=click.IntRange(min=1), help="Probe sample count."),
    click.option("--notation-bound", help="Largest admissible ordinal notation (exclusive)."),
    click.option("--config", "config_file", type=click.Path(dir_okay=False),
                 help="JSON run configuration; flags override."),
    click.option("--json", "json_out", type=click.Path(dir_okay=False), help="Also write the JSON result here."),
    click.option("--server", help="Send the request to a running service instead of computing locally."),
]
SHARED_KEYS = ("fuel", "depth", "width", "pool", "seed", "samples", "notation_bound", "config_file",
               "json_out", "server")


def shared_options(fn):
    """Accept the shared flags after the subcommand too; they override the group's."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        if ctx.obj is None:
            ctx.obj = {k: None for k in SHARED_KEYS}
        for key in SHARED_KEYS:
            v = kwargs.pop(key, None)
            if v is not None:
                ctx.obj[key] = v
        return fn(*args, **kwargs)
    for deco in reversed(SHARED_OPTIONS):
        wrapper = deco(wrapper)
    return wrapper


class _Cli(click.Group):
    """Click exits 2 on usage errors; here 2 means a refutation was found."""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as exc:
            exc.exit_code = api.EXIT_USAGE
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as exc:
            exc.exit_code = api.EXIT_USAGE
            raise


@click.group(cls=_Cli, context_settings={"help_option_names": ["-h", "--help"]})
@shared_options
@click.pass_context
def main(ctx):
    """Workbench for the kernel machine, extensionality certificates and index builders."""


@main.command("eval")
@shared_options
@click.argument("term")
@click.pass_context
def eval_cmd(ctx, term):
    """Evaluate a closed term, e.g. "S K K #7"."""
    _run(ctx, "eval", {"term": term})


@main.command()
@shared_options
@click.argument("term")
@click.option("--var", "variables", multiple=True, help="Variable to abstract (outermost first).")
@click.pass_context
def compile(ctx, term, variables):
    """Bracket-abstract variables out of a term."""
    _run(ctx, "compile", {"term": term, "variables": list(variables)})


@main.command()
@shared_options
@click.option("--alpha", required=True, help="Ordinal literal, e.g. 'w^2 + 1'.")
@click.option("--refute", is_flag=True, help="Search and verify a certificate at alpha.")
@click.option("--probe", is_flag=True, help="Probe the pair at alpha+1.")
@click.pass_context
def witness(ctx, alpha, refute, probe):
    """Build the witness pair for alpha."""
    _run(ctx, "witness", {"alpha": alpha, "refute": refute, "probe": probe})


def _pair_payload(s, t, pair_file) -> Dict[str, Any]:
    if pair_file:
        data = _load_json(pair_file)
        if not isinstance(data, dict) or "f" not in data or "g" not in data:
            raise click.UsageError(f"{pair_file} has no 'f' and 'g' entries")
        return {"s": data["f"], "t": data["g"]}
    if s is None or t is None:
        raise click.UsageError("give S and T, or --pair FILE")
    return {"s": _term_arg(s), "t": _term_arg(t)}


pair_args = [
    click.argument("s", required=False),
    click.argument("t", required=False),
    click.option("--pair", "pair_file", type=click.Path(dir_okay=False), help="JSON with codes f and g (from build)."),
    click.option("--alpha", required=True, help="Ordinal literal."),
]


def _with_pair(fn):
    for deco in reversed(pair_args):
        fn = deco(fn)
    return fn


@main.command()
@shared_options
@_with_pair
@click.option("--assert-equal", is_flag=True, help="Exit 2 if a certificate is found.")
@click.option("--min-cut", type=click.IntRange(min=0), default=0, help="Smallest cofinal index at limits.")
@click.pass_context
def refute(ctx, s, t, pair_file, alpha, assert_equal, min_cut):
    """Search for a certificate that S and T differ at level alpha."""
    _run(ctx, "refute", {**_pair_payload(s, t, pair_file), "alpha": alpha,
                         "assert_equal": assert_equal, "min_cut": min_cut})


@main.command()
@shared_options
@_with_pair
@click.option("--assert-equal", is_flag=True, help="Exit 2 if a counterexample is sampled.")
@click.pass_context
def probe(ctx, s, t, pair_file, alpha, assert_equal):
    """Sample argument tuples for counterexamples at level alpha."""
    _run(ctx, "probe", {**_pair_payload(s, t, pair_file), "alpha": alpha, "assert_equal": assert_equal})


@main.command("cert-verify")
@shared_options
@_with_pair
@click.option("--cert", "cert_file", required=True, type=click.Path(dir_okay=False),
              help="Certificate JSON (a refute result or the bare certificate).")
@click.pass_context
def cert_verify(ctx, s, t, pair_file, alpha, cert_file):
    """Re-check a certificate; exit 3 if it fails."""
    data = _load_json(cert_file)
    cert = data.get("certificate", data) if isinstance(data, dict) else data
    if cert is None:
        raise click.UsageError(f"{cert_file} holds no certificate")
    _run(ctx, "cert-verify", {**_pair_payload(s, t, pair_file), "alpha": alpha, "certificate": cert})


def _tree_payload(tree_file):
    data = _load_json(tree_file)
    nodes = data.get("nodes") if isinstance(data, dict) else data
    if not isinstance(nodes, list):
        raise click.UsageError(f"{tree_file}: expected a list of strings or {{\"nodes\": [...]}}")
    return {"nodes": nodes}


@main.command("wf-reduce")
@shared_options
@click.argument("tree", required=False)
@click.option("--steps", type=click.IntRange(min=0), default=6, help="Spine steps to show.")
@click.pass_context
def wf_reduce(ctx, tree, steps):
    """Run the well-foundedness reduction on a tree JSON file, or on 'spine'."""
    if tree is None:
        raise click.UsageError("give a tree JSON file or 'spine'")
    if tree == "spine":
        _run(ctx, "wf-reduce", {"spine": True, "steps": steps})
    else:
        _run(ctx, "wf-reduce", {"tree": _tree_payload(tree)})


@main.command()
@shared_options
@click.option("--max", "top", default="w^2", show_default=True, help="Largest notation in the table.")
@click.option("--coeff", type=click.IntRange(1, 9), default=2, show_default=True, help="Largest coefficient.")
@click.pass_context
def fg(ctx, top, coeff):
    """Tabulate F, G and 1+F."""
    _run(ctx, "fg", {"max": top, "coeff": coeff}, with_config=False)


@main.command("kb-rank")
@shared_options
@click.argument("tree", required=False)
@click.option("--s", "s", help="First term (distinguishing tree mode).")
@click.option("--t", "t", help="Second term (distinguishing tree mode).")
@click.pass_context
def kb_rank(ctx, tree, s, t):
    """Kleene-Brouwer ranks of a tree JSON file, or the distinguishing tree of --s/--t."""
    if tree:
        _run(ctx, "kb-rank", {"tree": _tree_payload(tree)})
    else:
        _run(ctx, "kb-rank", {"s": _term_arg(s), "t": _term_arg(t)})


@main.command()
@shared_options
@click.argument("target", required=False)
@click.option("--list", "list_targets", is_flag=True, help="List builders and named instances.")
@click.option("--formula", help="Prenex formula, e.g. 'A n E m . matrix=#code'.")
@click.option("--z", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--ell", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--k", type=click.IntRange(1, 3), default=1, show_default=True)
@click.option("--alpha", help="Ordinal for witness_pair and defining_formula.")
@click.option("--expand", type=click.IntRange(0, 3), default=0, help="Formula JSON expansion depth.")
@click.pass_context
def build(ctx, target, list_targets, formula, z, ell, k, alpha, expand):
    """Build indices with a reduction builder or a named instance."""
    if list_targets or not target:
        click.echo("builders:  " + " ".join(api.BUILDERS))
        click.echo("instances: " + " ".join(api.instance_names()))
        ctx.exit(0)
    _run(ctx, "build", {"target": target, "formula": formula, "z": z, "ell": ell, "k": k,
                        "alpha": alpha, "expand": expand})


@main.command()
@shared_options
@click.option("--mode", type=click.Choice(["rel", "iterator", "k2"]), default="rel", show_default=True)
@click.option("--spec", default="kernel", show_default=True, help="Shipped spec name or a JSON file.")
@click.option("--pairs", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--iterations", type=click.IntRange(min=0), default=25, show_default=True)
@click.option("--n", type=click.IntRange(1, 256), default=64, show_default=True)
@click.option("--stages", type=click.IntRange(1, 256), default=64, show_default=True)
@click.option("--check", "triples_file", type=click.Path(dir_okay=False), help="JSON list of [a, b, c] triples (k2).")
@click.pass_context
def embed(ctx, mode, spec, pairs, iterations, n, stages, triples_file):
    """Check the relativized K1 embedding, the iterator index, or the K1-to-K2 embedding."""
    spec_v = _load_json(spec) if spec.endswith(".json") else spec
    payload = {"mode": mode, "spec": spec_v, "pairs": pairs, "iterations": iterations, "n": n, "stages": stages}
    if triples_file:
        payload["triples"] = _load_json(triples_file)
    _run(ctx, "embed", payload)


@main.command()
@shared_options
@click.option("--only", multiple=True, type=int, help="Run only these criteria.")
@click.pass_context
def selftest(ctx, only):
    """Run the acceptance suite; nonzero exit on any failure."""
    _run(ctx, "selftest", {"only": list(only)}, with_config=False)


if __name__ == "__main__":
    main()
