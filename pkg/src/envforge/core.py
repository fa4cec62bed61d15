"""Episode lifecycle shared by all simulators.

This module owns the pieces every environment has in common: the reward
contract, agent-response parsing, the step/trajectory records, and the
JSONL persistence format. Environments plug in through :class:`EnvAdapter`;
the :class:`EpisodeSession` state machine drives parse -> validate ->
transition -> reward for each turn.

Reward contract: +10 on reaching the goal, 0 on a failed terminal step or
truncation, and -0.1 for every invalid action (unparseable response or a
string outside the environment's accepted set). Invalid actions leave the
simulator state untouched but still consume one step of the budget, and
the logged action for them renders as "Still".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .augment import AugmentSpec, augment_observation, maybe_augment
from .rng import Rng, derive


class EnvforgeError(Exception):
    """Base class for package errors."""


class ParseFailure(EnvforgeError):
    """Agent response did not contain a usable action tag pair."""


class SessionTerminated(EnvforgeError):
    """Step attempted on an episode that already ended."""


@dataclass(frozen=True)
class EpisodeConfig:
    max_steps: int
    success_reward: float = 10.0
    failure_reward: float = 0.0
    invalid_penalty: float = -0.1
    thinking_required: bool = True

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not self.success_reward > self.failure_reward:
            raise ValueError("success_reward must exceed failure_reward")
        if self.invalid_penalty > 0:
            raise ValueError("invalid_penalty must be <= 0")


@dataclass
class Observation:
    """Rendered text shown to the agent for one step.

    ``injected_spans`` are half-open byte ranges of ``text`` holding
    augmentation content; deleting them recovers the clean rendering.
    """

    text: str
    admissible_actions: list[str]
    task: str
    injected_spans: list[tuple[int, int]] = field(default_factory=list)

    def stripped_text(self) -> str:
        """The pre-augmentation rendering (injected spans deleted)."""
        if not self.injected_spans:
            return self.text
        data = self.text.encode("utf-8")
        out = []
        cursor = 0
        for start, end in self.injected_spans:
            out.append(data[cursor:start])
            cursor = end
        out.append(data[cursor:])
        return b"".join(out).decode("utf-8")


@dataclass
class ParsedResponse:
    action: str
    thinking: Optional[str] = None


@dataclass
class StepRecord:
    t: int
    observation: Observation
    raw_response: str
    parsed_action: Optional[str]
    invalid: bool
    reward: float
    done: bool
    truncated: bool

    @property
    def trace_action(self) -> str:
        """Action as it appears in logs; invalidity renders as "Still"."""
        return "Still" if self.invalid else (self.parsed_action or "")


@dataclass
class Trajectory:
    env_id: str
    seed: int
    config: EpisodeConfig
    augment: Optional[AugmentSpec]
    steps: list[StepRecord]
    success: bool
    total_reward: float


_THINK_OPEN, _THINK_CLOSE = "<think>", "</think>"
_ACTION_OPEN, _ACTION_CLOSE = "<action>", "</action>"


def parse_agent_response(raw: str, thinking_required: bool) -> ParsedResponse:
    """Extract the first well-formed action tag pair from an agent response.

    Only the first ``<action>...</action>`` pair counts; trailing text is
    ignored. With ``thinking_required``, a complete ``<think>...</think>``
    pair must appear before the action pair and its content is returned
    verbatim. Raises :class:`ParseFailure` otherwise.
    """
    action_open = raw.find(_ACTION_OPEN)
    if action_open < 0:
        raise ParseFailure("no <action> tag")
    action_close = raw.find(_ACTION_CLOSE, action_open + len(_ACTION_OPEN))
    if action_close < 0:
        raise ParseFailure("unbalanced <action> tag")
    action = raw[action_open + len(_ACTION_OPEN) : action_close].strip()
    if not action:
        raise ParseFailure("empty action")

    thinking = None
    think_open = raw.find(_THINK_OPEN)
    if think_open >= 0:
        think_close = raw.find(_THINK_CLOSE, think_open + len(_THINK_OPEN))
        if think_close >= 0 and think_close < action_open:
            thinking = raw[think_open + len(_THINK_OPEN) : think_close]
    if thinking_required and thinking is None:
        raise ParseFailure("no <think> pair before the action")
    return ParsedResponse(action=action, thinking=thinking)


class EnvAdapter:
    """Interface each simulator exposes to the episode machinery.

    Implementations hold the ground-truth state for one episode. All
    methods must be deterministic given the reset seed and the applied
    action sequence.
    """

    env_id: str = ""

    def reset(self, seed: int) -> None:
        raise NotImplementedError

    def render(self) -> str:
        """Current observation body, before any augmentation."""
        raise NotImplementedError

    def task(self) -> str:
        raise NotImplementedError

    def admissible(self) -> list[str]:
        raise NotImplementedError

    def try_apply(self, action: str) -> bool:
        """Apply an action string; False if it is outside the accepted set."""
        raise NotImplementedError

    def is_terminal(self) -> bool:
        """Environment-declared episode end (goal reached or purchase made)."""
        raise NotImplementedError

    def is_success(self) -> bool:
        raise NotImplementedError

    def fingerprint(self):
        """Hashable snapshot of the ground-truth state."""
        raise NotImplementedError

    def augment_context(self) -> dict:
        """Environment-specific facts the augmenter needs (dims, names, ...)."""
        return {}


class EpisodeSession:
    """Single-owner episode state machine: reset once, step until done.

    Augmentation is decided once per episode by the trajectory coin and,
    when on, applied to every observation with a per-observation RNG
    substream; the simulator state, rewards, and termination are computed
    from the clean state regardless.
    """

    def __init__(
        self,
        adapter: EnvAdapter,
        config: EpisodeConfig,
        seed: int,
        augment_spec: Optional[AugmentSpec] = None,
    ):
        self.adapter = adapter
        self.config = config
        self.seed = seed
        self.augment_spec = augment_spec
        self.augment_on = False
        self._steps: list[StepRecord] = []
        self._t = 0
        self._obs_index = 0
        self._terminal = False
        self._truncated = False
        self._current_obs: Optional[Observation] = None

    def reset(self) -> Observation:
        self.adapter.reset(self.seed)
        spec = self.augment_spec
        if spec is not None:
            coin_rng = Rng(derive(spec.seed, "coin", self.seed))
            self.augment_on = maybe_augment(spec, coin_rng)
        self._steps = []
        self._t = 0
        self._obs_index = 0
        self._terminal = False
        self._truncated = False
        self._current_obs = self._build_observation()
        return self._current_obs

    @property
    def done(self) -> bool:
        return self._terminal or self._truncated

    @property
    def current_observation(self) -> Observation:
        if self._current_obs is None:
            raise EnvforgeError("session not reset")
        return self._current_obs

    @property
    def steps(self) -> list[StepRecord]:
        return self._steps

    def step(self, raw_response: str) -> StepRecord:
        """Parse an agent response and advance one step."""
        if self.done:
            raise SessionTerminated("episode already ended")
        try:
            parsed = parse_agent_response(raw_response, self.config.thinking_required)
        except ParseFailure:
            parsed = None
        return self.apply_action(parsed, raw_response)

    def apply_action(self, parsed: Optional[ParsedResponse], raw_response: str = "") -> StepRecord:
        """Advance one step with an already-parsed response (None = parse failure)."""
        if self.done:
            raise SessionTerminated("episode already ended")
        obs = self.current_observation
        invalid = parsed is None or not self.adapter.try_apply(parsed.action)
        self._t += 1
        done = (not invalid) and self.adapter.is_terminal()
        if done:
            reward = (
                self.config.success_reward
                if self.adapter.is_success()
                else self.config.failure_reward
            )
        elif invalid:
            reward = self.config.invalid_penalty
        else:
            reward = 0.0
        truncated = (not done) and self._t >= self.config.max_steps
        record = StepRecord(
            t=self._t,
            observation=obs,
            raw_response=raw_response,
            parsed_action=parsed.action if parsed is not None else None,
            invalid=invalid,
            reward=reward,
            done=done,
            truncated=truncated,
        )
        self._steps.append(record)
        self._terminal = done
        self._truncated = truncated
        self._current_obs = self._build_observation()
        return record

    def trajectory(self) -> Trajectory:
        last = self._steps[-1] if self._steps else None
        success = bool(
            last is not None and last.done and last.reward == self.config.success_reward
        )
        total = round(sum(s.reward for s in self._steps), 9)
        return Trajectory(
            env_id=self.adapter.env_id,
            seed=self.seed,
            config=self.config,
            augment=self.augment_spec,
            steps=list(self._steps),
            success=success,
            total_reward=total,
        )

    def _build_observation(self) -> Observation:
        body = self.adapter.render()
        if self.augment_on and self.augment_spec is not None:
            spec = self.augment_spec
            rng = Rng(derive(spec.seed, "obs", self.seed, self._obs_index))
            text, spans = augment_observation(
                self.adapter.env_id, self.adapter.augment_context(), body, spec, rng
            )
        else:
            text, spans = body, []
        self._obs_index += 1
        return Observation(
            text=text,
            admissible_actions=self.adapter.admissible(),
            task=self.adapter.task(),
            injected_spans=spans,
        )


# --- canonical JSON + trajectory persistence -------------------------------
#
# One JSON object per line per episode, UTF-8, LF endings. Numbers are
# canonicalized (round to 9 decimals, integral floats emitted as ints) so
# repeated serialization of the same trajectory is byte-identical.


def canonical_number(value: float):
    v = round(float(value), 9)
    iv = int(v)
    return iv if v == iv else v


def _jsonable(value):
    if isinstance(value, bool) or value is None or isinstance(value, (str, int)):
        return value
    if isinstance(value, float):
        return canonical_number(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    raise TypeError(f"not serializable: {type(value)!r}")


def dumps_canonical(obj) -> str:
    return json.dumps(_jsonable(obj), ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def config_to_dict(config: EpisodeConfig) -> dict:
    return {
        "max_steps": config.max_steps,
        "success_reward": config.success_reward,
        "failure_reward": config.failure_reward,
        "invalid_penalty": config.invalid_penalty,
        "thinking_required": config.thinking_required,
    }


def config_from_dict(data: dict) -> EpisodeConfig:
    return EpisodeConfig(
        max_steps=int(data["max_steps"]),
        success_reward=float(data["success_reward"]),
        failure_reward=float(data["failure_reward"]),
        invalid_penalty=float(data["invalid_penalty"]),
        thinking_required=bool(data["thinking_required"]),
    )


def trajectory_to_dict(traj: Trajectory) -> dict:
    aug = traj.augment
    return {
        "env": traj.env_id,
        "seed": traj.seed,
        "config": config_to_dict(traj.config),
        "augment": None
        if aug is None
        else {"epsilon": aug.epsilon, "prob": aug.prob, "alpha": aug.alpha, "seed": aug.seed},
        "success": traj.success,
        "total_reward": traj.total_reward,
        "steps": [
            {
                "t": s.t,
                "obs": s.observation.text,
                "action_raw": s.raw_response,
                "action": s.trace_action,
                "invalid": s.invalid,
                "reward": s.reward,
                "done": s.done,
                "truncated": s.truncated,
                "injected_spans": [list(span) for span in s.observation.injected_spans],
            }
            for s in traj.steps
        ],
    }


def trajectory_from_dict(data: dict) -> Trajectory:
    aug = data["augment"]
    spec = (
        None
        if aug is None
        else AugmentSpec(
            epsilon=float(aug["epsilon"]),
            prob=float(aug["prob"]),
            alpha=float(aug["alpha"]),
            seed=int(aug["seed"]),
        )
    )
    steps = []
    for s in data["steps"]:
        obs = Observation(
            text=s["obs"],
            admissible_actions=[],
            task="",
            injected_spans=[tuple(span) for span in s["injected_spans"]],
        )
        steps.append(
            StepRecord(
                t=int(s["t"]),
                observation=obs,
                raw_response=s["action_raw"],
                parsed_action=None if s["invalid"] else s["action"],
                invalid=bool(s["invalid"]),
                reward=float(s["reward"]),
                done=bool(s["done"]),
                truncated=bool(s["truncated"]),
            )
        )
    return Trajectory(
        env_id=data["env"],
        seed=int(data["seed"]),
        config=config_from_dict(data["config"]),
        augment=spec,
        steps=steps,
        success=bool(data["success"]),
        total_reward=float(data["total_reward"]),
    )


def trajectory_to_json_line(traj: Trajectory) -> str:
    return dumps_canonical(trajectory_to_dict(traj))


def write_trajectories(path: str, trajectories: list[Trajectory]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for traj in trajectories:
            fh.write(trajectory_to_json_line(traj))
            fh.write("\n")


def read_trajectories(path: str) -> list[Trajectory]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(trajectory_from_dict(json.loads(line)))
    return out
