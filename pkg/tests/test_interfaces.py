import json
import socket
import threading
import time

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from pcalab import api
from pcalab.cli import main
from pcalab.service import create_app


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, list(args), catch_exceptions=False)


# CLI

def test_eval(runner):
    res = invoke(runner, "eval", "S K K #7")
    assert res.exit_code == 0 and res.output.strip() == "7"


def test_fg_table_has_omega_row(runner):
    res = invoke(runner, "fg", "--max", "w^2")
    assert res.exit_code == 0
    rows = [line.split() for line in res.output.splitlines()]
    assert ["w", "2", "w^2", "3"] in rows
    assert rows[-1] == ["w^2", "w", "w^3", "w"]


def test_witness_refute_and_probe(runner):
    res = invoke(runner, "witness", "--alpha", "w", "--refute", "--probe", "--samples", "100")
    out = json.loads(res.output)
    assert res.exit_code == 0
    assert out["verdict"]["verdict"] == "Holds" and out["certificate"]["kind"] == "Drop"
    assert out["probe"]["alpha"] == "w + 1" and out["probe"]["counterexamples_found"] == 0


def test_parse_error_exit_code_and_position(runner):
    res = invoke(runner, "eval", "K (#1")
    assert res.exit_code == api.EXIT_USAGE
    assert "position 5" in res.output


def test_bad_flag_value_is_usage_error(runner):
    assert invoke(runner, "eval", "--fuel", "0", "#1").exit_code == api.EXIT_USAGE
    assert invoke(runner, "eval", "#1", "--config", "/nonexistent/run.json").exit_code == api.EXIT_USAGE
    assert invoke(runner, "no-such-command").exit_code == api.EXIT_USAGE
    assert invoke(runner, "eval", "--pool", "1..x", "#1").exit_code == api.EXIT_USAGE


def test_pair_file_flow_and_exit_codes(runner, tmp_path):
    pair, cert = tmp_path / "pair.json", tmp_path / "cert.json"
    assert invoke(runner, "build", "witness_pair", "--alpha", "2", "--json", str(pair)).exit_code == 0
    assert set(json.loads(pair.read_text())) >= {"f", "g"}

    res = invoke(runner, "refute", "--pair", str(pair), "--alpha", "2", "--json", str(cert))
    assert res.exit_code == 0 and json.loads(cert.read_text())["certificate"] is not None
    assert invoke(runner, "refute", "--pair", str(pair), "--alpha", "2", "--assert-equal").exit_code == \
        api.EXIT_REFUTED
    assert invoke(runner, "probe", "--pair", str(pair), "--alpha", "2", "--assert-equal",
                  "--samples", "50").exit_code == api.EXIT_REFUTED
    assert invoke(runner, "probe", "--pair", str(pair), "--alpha", "3", "--assert-equal",
                  "--samples", "50").exit_code == 0

    ok = invoke(runner, "cert-verify", "--pair", str(pair), "--alpha", "2", "--cert", str(cert))
    assert ok.exit_code == 0 and json.loads(ok.output)["verdict"] == "Holds"
    bad = invoke(runner, "cert-verify", "--pair", str(pair), "--alpha", "3", "--cert", str(cert))
    assert bad.exit_code == api.EXIT_CHECK_FAILED and json.loads(bad.output)["verdict"] == "Fails"


def test_missing_pair_is_usage_error(runner):
    res = runner.invoke(main, ["refute", "--alpha", "1"])
    assert res.exit_code == api.EXIT_USAGE and "--pair" in res.output


def test_output_is_byte_identical(runner):
    args = ["probe", "K", "K #0", "--alpha", "1", "--samples", "40", "--seed", "9"]
    first = invoke(runner, *args).output
    assert first == invoke(runner, *args).output


def test_config_file_and_flag_override(runner, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"samples": 7, "seed": 3}))
    base = ["probe", "K #1", "K #2", "--alpha", "0", "--config", str(cfg)]
    assert json.loads(invoke(runner, *base).output)["probe"]["tuples_tried"] == 7
    assert json.loads(invoke(runner, *base, "--samples", "3").output)["probe"]["tuples_tried"] == 3
    # group-level flags work too
    res = runner.invoke(main, ["--samples", "4", *base[:5]])
    assert json.loads(res.output)["probe"]["tuples_tried"] == 4


def test_json_output_file(runner, tmp_path):
    out = tmp_path / "eval.json"
    res = invoke(runner, "eval", "K #3 #4", "--json", str(out))
    assert res.exit_code == 0
    data = json.loads(out.read_text())
    assert data == api.dispatch("eval", {"term": "K #3 #4"}).result


def test_build_list(runner):
    res = invoke(runner, "build", "--list")
    assert res.exit_code == 0
    assert all(name in res.output for name in api.BUILDERS)


# service

@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok" and "eval" in r.json()["commands"]


def test_service_matches_in_process_dispatch(client):
    payload = {"term": "S K K #7"}
    r = client.post("/run/eval", json=payload)
    assert r.status_code == 200
    assert r.json() == api.dispatch("eval", payload).model_dump()


def test_service_unknown_command(client):
    assert client.post("/run/nope", json={}).status_code == 404


def test_service_validation_error_is_usage(client):
    r = client.post("/run/probe", json={"s": "K", "t": "K", "alpha": "1", "config": {"samples": 0}})
    assert r.status_code == 200 and r.json()["exit_code"] == api.EXIT_USAGE
    r = client.post("/run/eval", json={"term": "K )"})
    assert r.json()["exit_code"] == api.EXIT_USAGE and "position 2" in r.json()["text"]


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_cli_against_live_server(runner):
    uvicorn = pytest.importorskip("uvicorn")
    port = _free_port()
    server = uvicorn.Server(uvicorn.Config(create_app(), host="127.0.0.1", port=port, log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    try:
        for _ in range(100):
            if server.started:
                break
            time.sleep(0.05)
        url = f"http://127.0.0.1:{port}"
        local = invoke(runner, "fg", "--max", "w*2")
        remote = invoke(runner, "fg", "--max", "w*2", "--server", url)
        assert remote.exit_code == 0 and remote.output == local.output
        bad = invoke(runner, "eval", "K (#1", "--server", url)
        assert bad.exit_code == api.EXIT_USAGE
    finally:
        server.should_exit = True
        thread.join(timeout=5)
