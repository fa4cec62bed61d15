"""Registry mapping environment ids to adapters and default episode budgets."""

from __future__ import annotations

from .core import EnvAdapter, EpisodeConfig
from .house import HouseEnv
from .shop import ShopEnv
from .sokoban import SokobanEnv

ENV_IDS = ("sokoban", "house", "shop")

DEFAULT_MAX_STEPS = {"sokoban": 15, "house": 50, "shop": 15}

_FACTORIES = {"sokoban": SokobanEnv, "house": HouseEnv, "shop": ShopEnv}


def default_config(env_id: str, thinking_required: bool = True) -> EpisodeConfig:
    if env_id not in DEFAULT_MAX_STEPS:
        raise ValueError(f"unknown environment: {env_id}")
    return EpisodeConfig(
        max_steps=DEFAULT_MAX_STEPS[env_id],
        thinking_required=thinking_required,
    )


def make_adapter(env_id: str, **params) -> EnvAdapter:
    factory = _FACTORIES.get(env_id)
    if factory is None:
        raise ValueError(f"unknown environment: {env_id}")
    return factory(**params)
