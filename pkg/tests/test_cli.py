"""End-to-end CLI smoke tests through subprocesses."""

import json
import subprocess
import sys

CLI = [sys.executable, "-m", "envforge.cli"]


def run_cli(*args, **kw):
    return subprocess.run([*CLI, *args], capture_output=True, text=True, timeout=300, **kw)


def test_version():
    proc = run_cli("--version")
    assert proc.returncode == 0
    assert "envforge 0.1.0" in proc.stdout


def test_rollout_writes_jsonl_and_summary(tmp_path):
    out = tmp_path / "t.jsonl"
    proc = run_cli(
        "rollout", "--env", "sokoban", "--policy", "sokoban_bfs",
        "--episodes", "4", "--seed", "3", "--out", str(out),
    )
    assert proc.returncode == 0, proc.stderr
    summary = json.loads(proc.stdout)
    assert summary["success_rate"] == 100.0
    assert len(out.read_text().splitlines()) == 4


def test_rollout_env_var_seed(tmp_path):
    out1, out2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    env = {"ENVFORGE_SEED": "9"}
    import os

    env_full = {**os.environ, **env}
    run_cli("rollout", "--env", "sokoban", "--episodes", "2", "--out", str(out1), env=env_full)
    run_cli("rollout", "--env", "sokoban", "--episodes", "2", "--seed", "9", "--out", str(out2))
    assert out1.read_bytes() == out2.read_bytes()


def test_metrics_reads_rollout_output(tmp_path):
    out = tmp_path / "t.jsonl"
    run_cli("rollout", "--env", "sokoban", "--policy", "sokoban_random",
            "--episodes", "6", "--seed", "1", "--out", str(out))
    proc = run_cli("metrics", "--in", str(out))
    data = json.loads(proc.stdout)
    assert data["episodes"] == 6
    assert data["t_max"] == 15
    assert 0 <= data["success_rate"] <= 100


def test_rank_cli(tmp_path):
    results = {
        "rows": [
            {"train": "alfworld", "evals": {"webshop": 30.5, "sokoban": 9.8, "sciworld": 10.0}},
            {"train": "webshop", "evals": {"alfworld": 17.0, "sokoban": 9.0, "sciworld": 13.8}},
            {"train": "sokoban", "evals": {"alfworld": 20.0, "webshop": 34.0, "sciworld": 13.0}},
            {"train": "sciworld", "evals": {"alfworld": 19.8, "webshop": 35.8, "sokoban": 12.0}},
        ]
    }
    path = tmp_path / "results.json"
    path.write_text(json.dumps(results))
    proc = run_cli("rank", "--in", str(path))
    data = json.loads(proc.stdout)
    assert data["sciworld"]["score"] == 3
    assert data["alfworld"]["score"] == 8
    assert "score" in proc.stderr  # aligned table on stderr


def test_augment_preview(tmp_path):
    proc = run_cli("augment-preview", "--env", "sokoban", "--seed", "7", "--epsilon", "50")
    data = json.loads(proc.stdout)
    assert data["after"] != data["before"]
    assert len(data["injected_spans"]) == 5
    stripped = data["after"].encode()
    out, cursor = [], 0
    for start, end in data["injected_spans"]:
        out.append(stripped[cursor:start])
        cursor = end
    out.append(stripped[cursor:])
    assert b"".join(out).decode() == data["before"]


def test_grpo_check(tmp_path):
    batch = {
        "returns": [10.0, 0.0],
        "logp_current": [[-1.0], [-2.0]],
        "logp_old": [[-1.0], [-2.0]],
        "logp_ref": [[-1.0], [-2.0]],
        "clip_range": 0.2,
        "beta": 0.01,
    }
    path = tmp_path / "batch.json"
    path.write_text(json.dumps(batch))
    proc = run_cli("grpo-check", "--in", str(path))
    data = json.loads(proc.stdout)
    assert data["advantages"] == [1.0, -1.0]
    assert data["kl"] == 0.0
    assert data["objective"] == 0.0


def test_catalog_export(tmp_path):
    out = tmp_path / "catalog.json"
    proc = run_cli("catalog", "--seed", "2", "--n-products", "12", "--out", str(out))
    assert proc.returncode == 0
    data = json.loads(out.read_text())
    assert len(data["products"]) == 12
    assert "task" in data["goal"]
