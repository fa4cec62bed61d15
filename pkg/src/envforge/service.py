"""Proxy-client rollout server: reset/step over newline-delimited JSON.

One JSON object per line in each direction. Requests carry an ``id`` that
is echoed verbatim; responses are ``{"id", "ok", "payload"}`` on success
and ``{"id", "ok": false, "error": {"code", "message"}}`` on failure.
Responses for a session are emitted in request order; malformed JSON gets
an error response with a null id.

Sessions are server-global (shared across connections), identified by
opaque "s<counter>" strings, capped at ``max_sessions``. Requests within
one session serialize on a per-session lock; distinct sessions proceed
concurrently. All protocol numbers go through the canonical serializer,
so rewards appear exactly as 10, 0, or -0.1.
"""

from __future__ import annotations

import json
import socket
import socketserver
import sys
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import __version__
from .augment import AugmentSpec
from .core import (
    EpisodeConfig,
    EpisodeSession,
    SessionTerminated,
    Trajectory,
    dumps_canonical,
    trajectory_to_json_line,
)
from .envs import ENV_IDS, default_config, make_adapter

PROTOCOL_VERSION = 1
DEFAULT_MAX_SESSIONS = 1024


class ProtocolError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass
class _LiveSession:
    sid: str
    session: EpisodeSession
    lock: threading.Lock = field(default_factory=threading.Lock)
    recorded: bool = False


class SessionManager:
    """Thread-safe registry of live episode sessions."""

    def __init__(
        self,
        max_sessions: int = DEFAULT_MAX_SESSIONS,
        recorder: Optional[Callable[[Trajectory], None]] = None,
    ):
        self.max_sessions = max_sessions
        self.recorder = recorder
        self._lock = threading.Lock()
        self._sessions: dict[str, _LiveSession] = {}
        self._counter = 0

    def create(
        self,
        env: str,
        seed: int,
        config_overrides: Optional[dict] = None,
        augment: Optional[dict] = None,
        thinking: bool = True,
    ) -> tuple[str, EpisodeSession]:
        if env not in ENV_IDS:
            raise ProtocolError("BadConfig", f"unknown env {env!r}")
        try:
            config = _build_config(env, config_overrides, thinking)
            spec = None if augment is None else _build_augment(augment)
            adapter = make_adapter(env)
        except (ValueError, TypeError, KeyError) as exc:
            raise ProtocolError("BadConfig", str(exc))
        session = EpisodeSession(adapter, config, seed, spec)
        session.reset()
        with self._lock:
            if len(self._sessions) >= self.max_sessions:
                raise ProtocolError("Busy", "session limit reached")
            self._counter += 1
            sid = f"s{self._counter}"
            self._sessions[sid] = _LiveSession(sid=sid, session=session)
        return sid, session

    def get(self, sid: str) -> _LiveSession:
        with self._lock:
            live = self._sessions.get(sid)
        if live is None:
            raise ProtocolError("UnknownSession", f"no session {sid!r}")
        return live

    def close(self, sid: str) -> None:
        with self._lock:
            if sid not in self._sessions:
                raise ProtocolError("UnknownSession", f"no session {sid!r}")
            del self._sessions[sid]

    def record_if_finished(self, live: _LiveSession) -> None:
        if self.recorder is not None and live.session.done and not live.recorded:
            live.recorded = True
            self.recorder(live.session.trajectory())


def _build_config(env: str, overrides: Optional[dict], thinking: bool) -> EpisodeConfig:
    base = default_config(env, thinking_required=thinking)
    if not overrides:
        return base
    allowed = {
        "max_steps",
        "success_reward",
        "failure_reward",
        "invalid_penalty",
        "thinking_required",
    }
    unknown = set(overrides) - allowed
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    values = {
        "max_steps": base.max_steps,
        "success_reward": base.success_reward,
        "failure_reward": base.failure_reward,
        "invalid_penalty": base.invalid_penalty,
        "thinking_required": base.thinking_required,
    }
    values.update(overrides)
    return EpisodeConfig(**values)


def _build_augment(data: dict) -> AugmentSpec:
    return AugmentSpec(
        epsilon=float(data["epsilon"]),
        prob=float(data["prob"]),
        alpha=float(data.get("alpha", 0.5)),
        seed=int(data.get("seed", 0)),
    )


class ProtocolHandler:
    """Turns one request line into one response line."""

    def __init__(self, manager: Optional[SessionManager] = None):
        self.manager = manager if manager is not None else SessionManager()

    def handle_line(self, line: str) -> str:
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            return dumps_canonical(_error(None, "BadRequest", "malformed JSON"))
        return dumps_canonical(self.handle(request))

    def handle(self, request) -> dict:
        if not isinstance(request, dict):
            return _error(None, "BadRequest", "request must be a JSON object")
        rid = request.get("id")
        if not (rid is None or isinstance(rid, (int, str))):
            rid = None
        op = request.get("op")
        try:
            if op == "spec":
                payload = self._op_spec()
            elif op == "reset":
                payload = self._op_reset(request)
            elif op == "step":
                payload = self._op_step(request)
            elif op == "close":
                payload = self._op_close(request)
            else:
                raise ProtocolError("BadRequest", f"unknown op {op!r}")
        except ProtocolError as exc:
            return _error(rid, exc.code, exc.message)
        return {"id": rid, "ok": True, "payload": payload}

    def _op_spec(self) -> dict:
        return {
            "protocol": PROTOCOL_VERSION,
            "service": "envforge",
            "version": __version__,
            "envs": list(ENV_IDS),
        }

    def _op_reset(self, request: dict) -> dict:
        env = request.get("env")
        if not isinstance(env, str):
            raise ProtocolError("BadConfig", "reset needs an 'env' string")
        seed = request.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ProtocolError("BadConfig", "'seed' must be a non-negative integer")
        thinking = request.get("thinking", True)
        if not isinstance(thinking, bool):
            raise ProtocolError("BadConfig", "'thinking' must be a boolean")
        sid, session = self.manager.create(
            env=env,
            seed=seed,
            config_overrides=request.get("config"),
            augment=request.get("augment"),
            thinking=thinking,
        )
        obs = session.current_observation
        return {
            "session": sid,
            "task": obs.task,
            "observation": obs.text,
            "admissible_actions": obs.admissible_actions,
        }

    def _op_step(self, request: dict) -> dict:
        sid = request.get("session")
        if not isinstance(sid, str):
            raise ProtocolError("BadRequest", "step needs a 'session' string")
        raw = request.get("response")
        if not isinstance(raw, str):
            raise ProtocolError("BadRequest", "step needs a 'response' string")
        live = self.manager.get(sid)
        with live.lock:
            try:
                record = live.session.step(raw)
            except SessionTerminated as exc:
                raise ProtocolError("SessionTerminated", str(exc))
            obs = live.session.current_observation
            self.manager.record_if_finished(live)
        return {
            "observation": obs.text,
            "reward": record.reward,
            "done": record.done,
            "truncated": record.truncated,
            "parsed_action": record.parsed_action,
            "invalid": record.invalid,
            "admissible_actions": obs.admissible_actions,
        }

    def _op_close(self, request: dict) -> dict:
        sid = request.get("session")
        if not isinstance(sid, str):
            raise ProtocolError("BadRequest", "close needs a 'session' string")
        self.manager.close(sid)
        return {"closed": True}


def _error(rid, code: str, message: str) -> dict:
    return {"id": rid, "ok": False, "error": {"code": code, "message": message}}


# --- canonical request builders ---------------------------------------------
#
# Field order is part of the wire contract so that independently written
# clients can reproduce golden transcripts byte-for-byte.


def build_spec_request(rid) -> dict:
    return {"id": rid, "op": "spec"}


def build_reset_request(
    rid,
    env: str,
    seed: int,
    config: Optional[dict] = None,
    augment: Optional[dict] = None,
    thinking: bool = True,
) -> dict:
    request = {"id": rid, "op": "reset", "env": env, "seed": seed}
    if config is not None:
        request["config"] = config
    if augment is not None:
        request["augment"] = augment
    request["thinking"] = thinking
    return request


def build_step_request(rid, session: str, response: str) -> dict:
    return {"id": rid, "op": "step", "session": session, "response": response}


def build_close_request(rid, session: str) -> dict:
    return {"id": rid, "op": "close", "session": session}


# --- transports ---------------------------------------------------------------


def serve_stdio(handler: ProtocolHandler, stdin=None, stdout=None) -> None:
    """Serve requests from stdin until EOF, one response line per request."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        stdout.write(handler.handle_line(line))
        stdout.write("\n")
        stdout.flush()


class _TcpRequestHandler(socketserver.StreamRequestHandler):
    def handle(self):
        handler: ProtocolHandler = self.server.protocol_handler  # type: ignore[attr-defined]
        while True:
            line = self.rfile.readline()
            if not line:
                break
            text = line.decode("utf-8")
            if not text.strip():
                continue
            response = handler.handle_line(text)
            self.wfile.write(response.encode("utf-8") + b"\n")
            self.wfile.flush()


class TcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], handler: ProtocolHandler):
        super().__init__(address, _TcpRequestHandler)
        self.protocol_handler = handler


def serve_tcp(host: str, port: int, handler: ProtocolHandler) -> TcpServer:
    """Bind a threading TCP server; caller runs serve_forever()."""
    return TcpServer((host, port), handler)


class LineClient:
    """Minimal synchronous protocol client over TCP.

    Request ids auto-increment from 1. Raises :class:`ProtocolError` for
    error responses so callers see typed failures.
    """

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._reader = self._sock.makefile("r", encoding="utf-8", newline="\n")
        self._next_id = 1

    def close(self) -> None:
        try:
            self._reader.close()
        finally:
            self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def request(self, request: dict) -> dict:
        line = dumps_canonical(request)
        self._sock.sendall(line.encode("utf-8") + b"\n")
        response_line = self._reader.readline()
        if not response_line:
            raise ConnectionError("server closed the connection")
        response = json.loads(response_line)
        if not response.get("ok"):
            err = response.get("error") or {}
            raise ProtocolError(err.get("code", "Unknown"), err.get("message", ""))
        return response["payload"]

    def _take_id(self) -> int:
        rid = self._next_id
        self._next_id += 1
        return rid

    def spec(self) -> dict:
        return self.request(build_spec_request(self._take_id()))

    def reset(self, env: str, seed: int, config=None, augment=None, thinking: bool = True) -> dict:
        return self.request(
            build_reset_request(self._take_id(), env, seed, config, augment, thinking)
        )

    def step(self, session: str, response: str) -> dict:
        return self.request(build_step_request(self._take_id(), session, response))

    def close_session(self, session: str) -> dict:
        return self.request(build_close_request(self._take_id(), session))


def jsonl_recorder(path: str) -> Callable[[Trajectory], None]:
    """Recorder appending finished episodes to a JSONL file."""
    lock = threading.Lock()

    def record(traj: Trajectory) -> None:
        line = trajectory_to_json_line(traj)
        with lock:
            with open(path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(line + "\n")

    return record
