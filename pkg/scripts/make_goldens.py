#!/usr/bin/env python3
"""Regenerate the golden protocol transcripts under tests/goldens/.

For each environment this freezes three files:

  <env>.script.json       episode script: env, seed, thinking, raw responses
  <env>.requests.ndjson   canonical request bytes a client must send
  <env>.responses.ndjson  response bytes the server must emit

The scripted episodes use deterministic policies (with one deliberately
invalid response at the start to pin the penalty path), so the transcripts
are stable across runs and platforms.
"""

from __future__ import annotations

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from envforge.core import EpisodeSession, dumps_canonical
from envforge.envs import default_config, make_adapter
from envforge.rollout import PolicySpec, make_policy
from envforge.service import (
    ProtocolHandler,
    build_close_request,
    build_reset_request,
    build_spec_request,
    build_step_request,
)

SCRIPTS = {
    "sokoban": {"seed": 7, "policy": "sokoban_bfs"},
    "house": {"seed": 3, "policy": "house_greedy"},
    "shop": {"seed": 5, "policy": "shop_greedy"},
}

INVALID_OPENER = "I will inspect the room first."


def scripted_responses(env: str, seed: int, policy_kind: str) -> list[str]:
    adapter = make_adapter(env)
    session = EpisodeSession(adapter, default_config(env), seed)
    session.reset()
    policy = make_policy(PolicySpec(policy_kind))
    policy.reset(adapter, seed)
    responses = [INVALID_OPENER]
    session.step(INVALID_OPENER)
    while not session.done:
        raw = policy.respond(session.current_observation)
        responses.append(raw)
        session.step(raw)
    assert session.trajectory().success, f"{env} scripted episode must succeed"
    return responses


def transcript_for(env: str, seed: int, responses: list[str]) -> tuple[list[str], list[str]]:
    handler = ProtocolHandler()
    requests = [build_spec_request(1), build_reset_request(2, env, seed, thinking=True)]
    rid = 3
    request_lines: list[str] = []
    response_lines: list[str] = []

    def send(request: dict) -> dict:
        line = dumps_canonical(request)
        request_lines.append(line)
        response_line = handler.handle_line(line)
        response_lines.append(response_line)
        return json.loads(response_line)

    send(requests[0])
    reset_response = send(requests[1])
    sid = reset_response["payload"]["session"]
    for raw in responses:
        send(build_step_request(rid, sid, raw))
        rid += 1
    send(build_close_request(rid, sid))
    return request_lines, response_lines


def main() -> int:
    out_dir = os.path.join(os.path.dirname(__file__), "..", "tests", "goldens")
    os.makedirs(out_dir, exist_ok=True)
    for env, cfg in SCRIPTS.items():
        responses = scripted_responses(env, cfg["seed"], cfg["policy"])
        request_lines, response_lines = transcript_for(env, cfg["seed"], responses)
        script = {
            "env": env,
            "seed": cfg["seed"],
            "thinking": True,
            "responses": responses,
        }
        with open(os.path.join(out_dir, f"{env}.script.json"), "w", newline="\n") as fh:
            json.dump(script, fh, indent=2)
            fh.write("\n")
        with open(os.path.join(out_dir, f"{env}.requests.ndjson"), "w", newline="\n") as fh:
            fh.write("\n".join(request_lines) + "\n")
        with open(os.path.join(out_dir, f"{env}.responses.ndjson"), "w", newline="\n") as fh:
            fh.write("\n".join(response_lines) + "\n")
        print(f"{env}: {len(responses)} steps, {len(request_lines)} requests")
    return 0


if __name__ == "__main__":
    sys.exit(main())
