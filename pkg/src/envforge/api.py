"""HTTP front-end over the session manager.

Exposes the same reset/step/close operations as the line protocol for
clients that prefer REST, backed by the identical session machinery.
The newline-delimited transport remains the canonical wire format for
trainer integration; this app exists for long-running multi-client
deployments and ad-hoc inspection.
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .envs import ENV_IDS
from .service import PROTOCOL_VERSION, ProtocolError, SessionManager

_STATUS = {
    "BadRequest": 400,
    "BadConfig": 400,
    "UnknownSession": 404,
    "SessionTerminated": 409,
    "Busy": 503,
}


class AugmentModel(BaseModel):
    epsilon: float = Field(ge=0)
    prob: float = Field(ge=0, le=1)
    alpha: float = Field(default=0.5, ge=0, le=1)
    seed: int = 0


class ConfigModel(BaseModel):
    max_steps: Optional[int] = None
    success_reward: Optional[float] = None
    failure_reward: Optional[float] = None
    invalid_penalty: Optional[float] = None
    thinking_required: Optional[bool] = None


class ResetRequest(BaseModel):
    env: str
    seed: int = Field(default=0, ge=0)
    config: Optional[ConfigModel] = None
    augment: Optional[AugmentModel] = None
    thinking: bool = True


class ResetResponse(BaseModel):
    session: str
    task: str
    observation: str
    admissible_actions: list[str]


class StepRequest(BaseModel):
    response: str


class StepResponse(BaseModel):
    observation: str
    reward: float
    done: bool
    truncated: bool
    parsed_action: Optional[str]
    invalid: bool
    admissible_actions: list[str]


class CloseResponse(BaseModel):
    closed: bool


class SpecResponse(BaseModel):
    protocol: int
    service: str
    version: str
    envs: list[str]


def create_app(manager: Optional[SessionManager] = None) -> FastAPI:
    manager = manager if manager is not None else SessionManager()
    app = FastAPI(title="envforge", version=__version__)

    def fail(exc: ProtocolError):
        raise HTTPException(
            status_code=_STATUS.get(exc.code, 500),
            detail={"code": exc.code, "message": exc.message},
        )

    @app.get("/spec", response_model=SpecResponse)
    def spec():
        return SpecResponse(
            protocol=PROTOCOL_VERSION,
            service="envforge",
            version=__version__,
            envs=list(ENV_IDS),
        )

    @app.post("/sessions", response_model=ResetResponse)
    def reset(request: ResetRequest):
        overrides = (
            None
            if request.config is None
            else {k: v for k, v in request.config.model_dump().items() if v is not None}
        )
        augment = None if request.augment is None else request.augment.model_dump()
        try:
            sid, session = manager.create(
                env=request.env,
                seed=request.seed,
                config_overrides=overrides,
                augment=augment,
                thinking=request.thinking,
            )
        except ProtocolError as exc:
            fail(exc)
        obs = session.current_observation
        return ResetResponse(
            session=sid,
            task=obs.task,
            observation=obs.text,
            admissible_actions=obs.admissible_actions,
        )

    @app.post("/sessions/{sid}/step", response_model=StepResponse)
    def step(sid: str, request: StepRequest):
        from .core import SessionTerminated

        try:
            live = manager.get(sid)
            with live.lock:
                try:
                    record = live.session.step(request.response)
                except SessionTerminated as exc:
                    raise ProtocolError("SessionTerminated", str(exc))
                obs = live.session.current_observation
                manager.record_if_finished(live)
        except ProtocolError as exc:
            fail(exc)
        return StepResponse(
            observation=obs.text,
            reward=record.reward,
            done=record.done,
            truncated=record.truncated,
            parsed_action=record.parsed_action,
            invalid=record.invalid,
            admissible_actions=obs.admissible_actions,
        )

    @app.delete("/sessions/{sid}", response_model=CloseResponse)
    def close(sid: str):
        try:
            manager.close(sid)
        except ProtocolError as exc:
            fail(exc)
        return CloseResponse(closed=True)

    return app
