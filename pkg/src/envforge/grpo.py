"""Group-relative advantage and clipped-surrogate arithmetic.

Operates on logged trajectories with externally supplied per-action
log-probabilities; no model execution happens here. Advantages normalize
episode returns against their own group's statistics (population standard
deviation), every action of a trajectory inherits its episode advantage,
and the objective averages the clipped importance-weighted terms per
trajectory before averaging across the group, minus a KL penalty computed
with the nonnegative per-action estimator exp(d) - d - 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import EnvforgeError

DEFAULT_STD_FLOOR = 1e-8


class GroupTooSmall(EnvforgeError):
    pass


class LengthMismatch(EnvforgeError):
    pass


@dataclass(frozen=True)
class GrpoConfig:
    clip_range: float
    kl_coeff: float = 0.0
    std_floor: float = DEFAULT_STD_FLOOR

    def __post_init__(self):
        if self.clip_range <= 0:
            raise ValueError("clip_range must be > 0")
        if self.kl_coeff < 0:
            raise ValueError("kl_coeff must be >= 0")
        if self.std_floor < 0:
            raise ValueError("std_floor must be >= 0")


@dataclass
class GroupBatch:
    """N trajectories for one task prompt with aligned log-prob lists."""

    returns: list[float]
    logp_current: list[list[float]]
    logp_old: list[list[float]]
    logp_ref: list[list[float]]
    trajectories: Optional[list] = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.returns)
        if n < 2:
            raise GroupTooSmall(f"group size {n} < 2")
        for name, lists in (
            ("logp_current", self.logp_current),
            ("logp_old", self.logp_old),
            ("logp_ref", self.logp_ref),
        ):
            if len(lists) != n:
                raise LengthMismatch(f"{name} has {len(lists)} trajectories, returns has {n}")
        for i in range(n):
            t = len(self.logp_current[i])
            if len(self.logp_old[i]) != t or len(self.logp_ref[i]) != t:
                raise LengthMismatch(f"trajectory {i}: log-prob lists are not aligned")


def group_advantages(returns: list[float], std_floor: float = DEFAULT_STD_FLOOR) -> list[float]:
    """(R_i - mean) / population std; all zeros when the std degenerates."""
    if len(returns) < 2:
        raise GroupTooSmall(f"group size {len(returns)} < 2")
    arr = np.asarray(returns, dtype=np.float64)
    std = float(arr.std())
    if std < std_floor:
        return [0.0] * len(returns)
    return ((arr - arr.mean()) / std).tolist()


def importance_ratios(logp_current: list[float], logp_old: list[float]) -> list[float]:
    """Per-action exp(logp_current - logp_old)."""
    if len(logp_current) != len(logp_old):
        raise LengthMismatch(f"{len(logp_current)} vs {len(logp_old)} actions")
    cur = np.asarray(logp_current, dtype=np.float64)
    old = np.asarray(logp_old, dtype=np.float64)
    return np.exp(cur - old).tolist()


def kl_estimate(logp_current: list[float], logp_ref: list[float]) -> list[float]:
    """Per-action exp(d) - d - 1 with d = logp_ref - logp_current; always >= 0."""
    if len(logp_current) != len(logp_ref):
        raise LengthMismatch(f"{len(logp_current)} vs {len(logp_ref)} actions")
    d = np.asarray(logp_ref, dtype=np.float64) - np.asarray(logp_current, dtype=np.float64)
    return (np.exp(d) - d - 1.0).tolist()


def clipped_surrogate(batch: GroupBatch, cfg: GrpoConfig) -> dict:
    """Clipped objective over one group.

    Per action: min(rho * A, clip(rho, 1-c, 1+c) * A) with the trajectory's
    group-normalized advantage A. Each trajectory contributes the mean of
    its action terms (equal episode weight regardless of length); the
    objective is the group mean of those minus kl_coeff times the KL
    estimate averaged over all actions.
    """
    advantages = group_advantages(batch.returns, cfg.std_floor)
    lo, hi = 1.0 - cfg.clip_range, 1.0 + cfg.clip_range
    per_action_terms: list[list[float]] = []
    traj_means = []
    kl_values: list[float] = []
    for i, adv in enumerate(advantages):
        ratios = np.exp(
            np.asarray(batch.logp_current[i], dtype=np.float64)
            - np.asarray(batch.logp_old[i], dtype=np.float64)
        )
        terms = np.minimum(ratios * adv, np.clip(ratios, lo, hi) * adv)
        per_action_terms.append(terms.tolist())
        traj_means.append(float(terms.mean()) if terms.size else 0.0)
        kl_values.extend(kl_estimate(batch.logp_current[i], batch.logp_ref[i]))
    kl = float(np.mean(kl_values)) if kl_values else 0.0
    objective = float(np.mean(traj_means)) - cfg.kl_coeff * kl
    return {
        "advantages": advantages,
        "per_action_terms": per_action_terms,
        "kl": kl,
        "objective": objective,
    }
