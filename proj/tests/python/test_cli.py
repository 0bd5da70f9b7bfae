import json
import os
import subprocess

import pytest

CLI = os.environ.get("AZLAB_CLI")
pytestmark = pytest.mark.skipif(not CLI, reason="AZLAB_CLI not set")

SMALL = ["--layers", "2", "--heads", "2", "--d-model", "8", "--d-ff", "16",
         "--max-seq-length", "24", "--doc-stride", "8", "--max-query-length", "6"]


def run(*args, cwd=None):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True, cwd=cwd)


def test_usage_errors_exit_2():
    for args in ([], ["frobnicate"], ["eval", "--no-such-flag"]):
        r = run(*args)
        assert r.returncode == 2, args
        assert "Usage" in r.stdout + r.stderr
    assert "unknown subcommand 'frobnicate'" in run("frobnicate").stderr


def test_runtime_errors_exit_1(tmp_path):
    r = run("eval", tmp_path / "missing.json", tmp_path / "p.json")
    assert r.returncode == 1
    assert r.stderr.startswith("azlab: error:")


def test_eval_prints_metrics_json(kv_files, tmp_path):
    _, dev = kv_files
    preds = tmp_path / "predictions.json"
    preds.write_text(json.dumps({f"d{i}": "v0" for i in range(6)}))
    r = run("eval", dev, preds)
    assert r.returncode == 0
    assert list(json.loads(r.stdout)) == ["exact", "f1", "total", "HasAns_exact", "HasAns_f1", "HasAns_total"]


def test_stats_and_visualize(fixtures, tmp_path):
    r = run("stats", fixtures / "table1.csv", fixtures / "table2.csv")
    assert r.returncode == 0
    assert r.stdout.splitlines()[-1] == "0.819,0.152,0.132,1.405,0.815"
    svg = tmp_path / "out.svg"
    assert run("visualize", fixtures / "table1.csv", "80.567", svg).returncode == 0
    assert "#08306B" in svg.read_text()


def test_train_decode_are_deterministic_and_read_config(kv_files, tmp_path):
    train, dev = kv_files
    outputs = []
    for rep in range(2):
        ckpt = tmp_path / f"m{rep}.azlb"
        r = run("train", "--train-file", train, "--out", ckpt, *SMALL, "--epochs", "1", "--batch-size", "4",
                "--learning-rate", "1e-3", "--seed", "5")
        assert r.returncode == 0, r.stderr
        preds = tmp_path / f"p{rep}.json"
        r = run("decode", "--checkpoint", ckpt, "--dev-file", dev, "--mask-layer", "1", "--mask-zone", "p2q",
                "--output", preds)
        assert r.returncode == 0, r.stderr
        outputs.append((ckpt.read_bytes(), preds.read_bytes()))
    assert outputs[0] == outputs[1]

    cfg = tmp_path / "run.ini"
    cfg.write_text(f"[decode]\ncheckpoint = {tmp_path / 'm0.azlb'}\ndev-file = {dev}\nsweep = true\n"
                   f"out-dir = {tmp_path / 'sweep'}\n")
    r = run("--config", cfg, "decode")
    assert r.returncode == 0, r.stderr
    names = sorted(p.name for p in (tmp_path / "sweep").glob("predictions_*.json"))
    assert len(names) == 10
    assert (tmp_path / "sweep" / "predictions_layer1_p2q.json").read_bytes() == outputs[0][1]

    r = run("collect", tmp_path / "sweep", tmp_path / "results.csv", "--dataset", dev)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "results.csv").read_text().startswith("layer,all,q2,q2p,p2q,p2\n1,")
