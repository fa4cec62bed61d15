"""Wire protocol: goldens, isolation, transports, error codes."""

import json
import subprocess
import sys
import threading
from pathlib import Path

import pytest

from envforge.core import trajectory_to_json_line
from envforge.rollout import PolicySpec, run_episode
from envforge.service import (
    LineClient,
    ProtocolError,
    ProtocolHandler,
    SessionManager,
    build_reset_request,
    build_step_request,
    serve_tcp,
)

GOLDENS = Path(__file__).parent / "goldens"


def _reset(handler, env="sokoban", seed=7, **kw):
    response = handler.handle(
        {"id": 1, "op": "reset", "env": env, "seed": seed, **kw}
    )
    assert response["ok"], response
    return response["payload"]


# --- basic ops -------------------------------------------------------------------


def test_spec_op():
    payload = ProtocolHandler().handle({"id": 9, "op": "spec"})["payload"]
    assert payload["envs"] == ["sokoban", "house", "shop"]
    assert payload["protocol"] == 1


def test_reset_deterministic_across_sessions():
    handler = ProtocolHandler()
    a = _reset(handler, seed=7)
    b = _reset(handler, seed=7)
    assert a["session"] != b["session"]
    assert a["observation"] == b["observation"]
    assert a["task"] == b["task"]
    assert a["admissible_actions"] == b["admissible_actions"]


def test_reset_with_augmentation_appends_lines():
    handler = ProtocolHandler()
    payload = _reset(handler, augment={"epsilon": 80, "prob": 1, "seed": 3})
    tail = payload["observation"].split("\n")
    assert len(tail) == 1 + 8  # entity list plus floor(80/10) appended lines
    assert all("unreachable" in line for line in tail[1:])


def test_unknown_env_is_bad_config():
    response = ProtocolHandler().handle({"id": 1, "op": "reset", "env": "chess", "seed": 0})
    assert not response["ok"]
    assert response["error"]["code"] == "BadConfig"
    assert response["id"] == 1


def test_malformed_json_gets_null_id():
    line = ProtocolHandler().handle_line("{nope")
    data = json.loads(line)
    assert data == {
        "id": None,
        "ok": False,
        "error": {"code": "BadRequest", "message": "malformed JSON"},
    }


def test_unknown_op_and_unknown_session():
    handler = ProtocolHandler()
    response = handler.handle({"id": 2, "op": "dance"})
    assert response["error"]["code"] == "BadRequest"
    response = handler.handle({"id": 3, "op": "step", "session": "s99", "response": "x"})
    assert response["error"]["code"] == "UnknownSession"


def test_step_rewards_and_termination():
    handler = ProtocolHandler()
    payload = _reset(handler, seed=7)
    sid = payload["session"]
    invalid = handler.handle(
        {"id": 2, "op": "step", "session": sid, "response": "just text"}
    )["payload"]
    assert invalid["invalid"] and invalid["reward"] == -0.1
    assert invalid["parsed_action"] is None

    from envforge.sokoban import parse_render, solve_bfs

    plan = solve_bfs(parse_render(payload["observation"]))
    rid = 3
    for action in plan:
        last = handler.handle(
            {
                "id": rid,
                "op": "step",
                "session": sid,
                "response": f"<think>p</think><action>{action}</action>",
            }
        )["payload"]
        rid += 1
    assert last["done"] and last["reward"] == 10
    after = handler.handle(
        {"id": rid, "op": "step", "session": sid, "response": "<think>x</think><action>up</action>"}
    )
    assert after["error"]["code"] == "SessionTerminated"


def test_close_and_session_cap():
    handler = ProtocolHandler(SessionManager(max_sessions=2))
    a = _reset(handler, seed=1)
    b = _reset(handler, seed=2)
    response = handler.handle({"id": 5, "op": "reset", "env": "sokoban", "seed": 3})
    assert response["error"]["code"] == "Busy"
    assert handler.handle({"id": 6, "op": "close", "session": a["session"]})["payload"] == {
        "closed": True
    }
    assert _reset(handler, seed=3)["session"] == "s3"
    handler.handle({"id": 7, "op": "close", "session": b["session"]})
    response = handler.handle({"id": 8, "op": "close", "session": b["session"]})
    assert response["error"]["code"] == "UnknownSession"


def test_ids_echo_including_strings():
    handler = ProtocolHandler()
    assert handler.handle({"id": "abc", "op": "spec"})["id"] == "abc"


def test_float_serialization_in_protocol():
    handler = ProtocolHandler()
    sid = _reset(handler, seed=7)["session"]
    line = handler.handle_line(
        json.dumps({"id": 2, "op": "step", "session": sid, "response": "x"})
    )
    assert '"reward":-0.1' in line


# --- golden transcripts -------------------------------------------------------------


@pytest.mark.parametrize("env", ["sokoban", "house", "shop"])
def test_golden_transcript_replays_in_process(env):
    requests = (GOLDENS / f"{env}.requests.ndjson").read_text().splitlines()
    expected = (GOLDENS / f"{env}.responses.ndjson").read_text().splitlines()
    handler = ProtocolHandler()
    got = [handler.handle_line(line) for line in requests]
    assert got == expected


@pytest.mark.parametrize("env", ["sokoban", "house", "shop"])
def test_golden_transcript_replays_through_stdio_subprocess(env):
    requests = (GOLDENS / f"{env}.requests.ndjson").read_bytes()
    expected = (GOLDENS / f"{env}.responses.ndjson").read_bytes()
    proc = subprocess.run(
        [sys.executable, "-m", "envforge.cli", "serve", "--transport", "stdio"],
        input=requests,
        capture_output=True,
        timeout=120,
    )
    assert proc.returncode == 0, proc.stderr.decode()
    assert proc.stdout == expected


def test_golden_scripts_declare_successful_episodes():
    for env in ("sokoban", "house", "shop"):
        script = json.loads((GOLDENS / f"{env}.script.json").read_text())
        responses = (GOLDENS / f"{env}.responses.ndjson").read_text().splitlines()
        payloads = [json.loads(r)["payload"] for r in responses]
        final_step = payloads[-2]  # last step payload before close
        assert final_step["done"] and final_step["reward"] == 10
        assert script["responses"][0] == "I will inspect the room first."


# --- isolation ------------------------------------------------------------------


def _run_serial(handler, env, seed, responses):
    payload = _reset(handler, env=env, seed=seed)
    sid = payload["session"]
    out = []
    for i, raw in enumerate(responses):
        out.append(
            handler.handle({"id": i, "op": "step", "session": sid, "response": raw})["payload"]
        )
    return out


def test_interleaved_sessions_match_serial():
    scripts = {}
    for k in range(16):
        env = ("sokoban", "house", "shop")[k % 3]
        traj = run_episode(env, seed=100 + k, policy_spec=PolicySpec("uniform_random"))
        scripts[k] = (env, 100 + k, [s.raw_response for s in traj.steps])

    serial_handler = ProtocolHandler()
    serial = {k: _run_serial(serial_handler, *scripts[k]) for k in scripts}

    inter_handler = ProtocolHandler()
    sids = {}
    for k, (env, seed, _) in scripts.items():
        sids[k] = _reset(inter_handler, env=env, seed=seed)["session"]
    cursors = {k: 0 for k in scripts}
    results = {k: [] for k in scripts}
    remaining = set(scripts)
    while remaining:
        for k in sorted(remaining):
            env, seed, responses = scripts[k]
            i = cursors[k]
            results[k].append(
                inter_handler.handle(
                    {"id": f"{k}:{i}", "op": "step", "session": sids[k], "response": responses[i]}
                )["payload"]
            )
            cursors[k] += 1
            if cursors[k] == len(responses):
                remaining.discard(k)
    assert results == serial


def test_recording_matches_in_process_rollout(tmp_path):
    record_path = tmp_path / "rec.jsonl"
    from envforge.service import jsonl_recorder

    handler = ProtocolHandler(SessionManager(recorder=jsonl_recorder(str(record_path))))
    trajs = []
    for seed in (5, 6):
        traj = run_episode("sokoban", seed=seed, policy_spec=PolicySpec("uniform_random"))
        trajs.append(traj)
        sid = _reset(handler, seed=seed)["session"]
        for i, step in enumerate(traj.steps):
            handler.handle(
                {"id": i, "op": "step", "session": sid, "response": step.raw_response}
            )
        handler.handle({"id": 99, "op": "close", "session": sid})
    expected = "".join(trajectory_to_json_line(t) + "\n" for t in trajs)
    assert record_path.read_text() == expected


# --- tcp transport -----------------------------------------------------------------


def test_tcp_round_trip_and_concurrency():
    server = serve_tcp("127.0.0.1", 0, ProtocolHandler())
    host, port = server.server_address
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        results = {}

        def drive(tag, seed):
            with LineClient(host, port) as client:
                assert client.spec()["protocol"] == 1
                payload = client.reset("sokoban", seed)
                sid = payload["session"]
                from envforge.sokoban import parse_render, solve_bfs

                plan = solve_bfs(parse_render(payload["observation"]))
                for action in plan:
                    last = client.step(sid, f"<think>t</think><action>{action}</action>")
                client.close_session(sid)
                results[tag] = last["done"] and last["reward"] == 10

        threads = [
            threading.Thread(target=drive, args=(i, 40 + i)) for i in range(4)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=60)
        assert results == {0: True, 1: True, 2: True, 3: True}

        with LineClient(host, port) as client:
            with pytest.raises(ProtocolError) as exc:
                client.reset("chess", 0)
            assert exc.value.code == "BadConfig"
    finally:
        server.shutdown()
        server.server_close()


def test_request_builders_field_order():
    assert list(build_reset_request(1, "sokoban", 7)) == ["id", "op", "env", "seed", "thinking"]
    assert list(
        build_reset_request(1, "sokoban", 7, augment={"epsilon": 80, "prob": 1, "seed": 3})
    ) == ["id", "op", "env", "seed", "augment", "thinking"]
    assert list(build_step_request(2, "s1", "x")) == ["id", "op", "session", "response"]
