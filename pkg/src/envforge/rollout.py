"""Episode runner binding environments, augmentation, and scripted policies.

Scripted policies stand in for LLM policies at desk scale: oracles that
read the ground-truth state (BFS planner, greedy solvers), random
baselines, and a render-parsing Sokoban planner that exercises the
text round-trip. The "remote" policy kind marks episodes driven from the
other side of the wire protocol and cannot run in-process.

Suite runs derive episode k's seed as derive(suite_seed, "episode", k)
masked to 53 bits, so any episode can be reproduced in isolation and
execution order never matters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import metrics
from .augment import AugmentSpec
from .core import (
    EnvAdapter,
    EnvforgeError,
    EpisodeConfig,
    EpisodeSession,
    Observation,
    Trajectory,
    write_trajectories,
)
from .envs import default_config, make_adapter
from .rng import JSON_SAFE_SEED_MASK, Rng, derive
from .sokoban import DIR_ORDER, parse_render, solve_bfs

POLICY_KINDS = (
    "sokoban_bfs",
    "sokoban_bfs_text",
    "sokoban_random",
    "house_greedy",
    "shop_greedy",
    "uniform_random",
    "remote",
)


class PolicyFailure(EnvforgeError):
    """A scripted policy could not produce a response."""


@dataclass(frozen=True)
class PolicySpec:
    kind: str
    emits_thinking: bool = True

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind: {self.kind}")


class Policy:
    """Scripted responder: bound to one episode at reset time."""

    def __init__(self, spec: PolicySpec):
        self.spec = spec

    def reset(self, adapter: EnvAdapter, episode_seed: int) -> None:
        pass

    def respond(self, obs: Observation) -> str:
        raise NotImplementedError

    def _wrap(self, action: str, thought: str) -> str:
        if self.spec.emits_thinking:
            return f"<think>{thought}</think><action>{action}</action>"
        return f"<action>{action}</action>"


class UniformRandomPolicy(Policy):
    """Uniform choice over the observation's admissible actions.

    Draws come from the stream derive(episode_seed, "policy"); the index
    is next_u64 modulo the list length. The wire-protocol client mirrors
    this exactly for cross-process parity runs.
    """

    THOUGHT = "picking a random admissible action"

    def reset(self, adapter, episode_seed):
        self.rng = Rng(derive(episode_seed, "policy"))

    def respond(self, obs):
        if not obs.admissible_actions:
            raise PolicyFailure("no admissible actions to choose from")
        action = obs.admissible_actions[self.rng.randrange(len(obs.admissible_actions))]
        return self._wrap(action, self.THOUGHT)


class SokobanRandomPolicy(Policy):
    def reset(self, adapter, episode_seed):
        self.rng = Rng(derive(episode_seed, "policy"))

    def respond(self, obs):
        action = DIR_ORDER[self.rng.randrange(len(DIR_ORDER))]
        return self._wrap(action, "trying a random direction")


class SokobanBfsPolicy(Policy):
    """Plans once on the ground-truth state and replays the shortest plan."""

    def reset(self, adapter, episode_seed):
        plan = solve_bfs(adapter.state)
        if plan is None:
            raise PolicyFailure("instance is unsolvable")
        self._plan = list(plan)
        self._next = 0

    def respond(self, obs):
        if self._next >= len(self._plan):
            raise PolicyFailure("plan exhausted without solving")
        action = self._plan[self._next]
        self._next += 1
        return self._wrap(action, "following the shortest plan")


class SokobanBfsTextPolicy(Policy):
    """Re-parses the rendered observation each step and replans from it."""

    def respond(self, obs):
        state = parse_render(obs.text)
        plan = solve_bfs(state)
        if not plan:
            raise PolicyFailure("no plan from the parsed observation")
        return self._wrap(plan[0], "planning from the parsed coordinates")


class HouseGreedyPolicy(Policy):
    def reset(self, adapter, episode_seed):
        self.adapter = adapter

    def respond(self, obs):
        from .house import plan_greedy_action

        action = plan_greedy_action(self.adapter.state)
        if action is None:
            raise PolicyFailure("greedy solver has no next action")
        return self._wrap(action, "fetching the task object")


class ShopGreedyPolicy(Policy):
    """Searches the canned query, pages until the known-good product shows,
    selects the required options, and buys."""

    def reset(self, adapter, episode_seed):
        from .shop import _product_qualifies

        self.adapter = adapter
        catalog = adapter.session.catalog
        for product in catalog.products:
            if _product_qualifies(product, catalog.goal):
                self.target = product
                return
        raise PolicyFailure("catalog holds no qualifying product")

    def respond(self, obs):
        session = self.adapter.session
        page = session.page
        catalog = session.catalog
        if page.kind == "search":
            return self._wrap(f"search[{catalog.query}]", "searching for the target attributes")
        if page.kind == "results":
            if self.target.asin in page.visible_asins:
                return self._wrap(
                    f"click[{self.target.asin.lower()}]", "opening the matching product"
                )
            return self._wrap("click[next >]", "target not on this page")
        for opt_name in sorted(catalog.goal.required_options):
            want = catalog.goal.required_options[opt_name]
            if page.selected_options.get(opt_name) != want:
                return self._wrap(f"click[{want}]", f"selecting {opt_name}")
        return self._wrap("click[buy now]", "all required options selected")


_POLICIES = {
    "uniform_random": UniformRandomPolicy,
    "sokoban_random": SokobanRandomPolicy,
    "sokoban_bfs": SokobanBfsPolicy,
    "sokoban_bfs_text": SokobanBfsTextPolicy,
    "house_greedy": HouseGreedyPolicy,
    "shop_greedy": ShopGreedyPolicy,
}


def make_policy(spec: PolicySpec) -> Policy:
    if spec.kind == "remote":
        raise PolicyFailure("remote policies run through the service protocol")
    return _POLICIES[spec.kind](spec)


def episode_seed(suite_seed: int, k: int) -> int:
    """Seed of the k-th episode in a suite; JSON-number safe."""
    return derive(suite_seed, "episode", k) & JSON_SAFE_SEED_MASK


def run_episode(
    env_id: str,
    seed: int,
    config: Optional[EpisodeConfig] = None,
    augment_spec: Optional[AugmentSpec] = None,
    policy_spec: PolicySpec = PolicySpec("uniform_random"),
    env_params: Optional[dict] = None,
) -> Trajectory:
    """Run one full episode with a scripted policy and return its trajectory."""
    adapter = make_adapter(env_id, **(env_params or {}))
    if config is None:
        config = default_config(env_id)
    session = EpisodeSession(adapter, config, seed, augment_spec)
    session.reset()
    policy = make_policy(policy_spec)
    policy.reset(adapter, seed)
    while not session.done:
        session.step(policy.respond(session.current_observation))
    return session.trajectory()


def run_suite(
    env_id: str,
    n_episodes: int,
    suite_seed: int,
    config: Optional[EpisodeConfig] = None,
    augment_spec: Optional[AugmentSpec] = None,
    policy_spec: PolicySpec = PolicySpec("uniform_random"),
    env_params: Optional[dict] = None,
) -> tuple[list[Trajectory], dict]:
    """Run a batch of episodes with derived per-episode seeds."""
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    if config is None:
        config = default_config(env_id)
    trajectories = [
        run_episode(
            env_id,
            episode_seed(suite_seed, k),
            config=config,
            augment_spec=augment_spec,
            policy_spec=policy_spec,
            env_params=env_params,
        )
        for k in range(n_episodes)
    ]
    summary = {
        "episodes": n_episodes,
        "success_rate": metrics.success_rate(trajectories),
        "avg_char_count": metrics.avg_char_count(trajectories),
        "avg_traj_length": metrics.avg_traj_length(trajectories, config.max_steps),
    }
    return trajectories, summary


def run_and_save(path: str, *args, **kwargs) -> dict:
    trajectories, summary = run_suite(*args, **kwargs)
    write_trajectories(path, trajectories)
    return summary
