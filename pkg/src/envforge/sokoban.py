"""Single-box Sokoban on a bounded grid with coordinate-list rendering.

The state is a value type; all operations are pure functions of it. The
observation lists every entity as "<Kind> at (row, col)" in row-major
order over the grid, with (0, 0) the top-left corner. A cell holding both
the goal and the player emits the Goal mention then the Player mention;
the goal under the box is omitted (that state is solved and ends the
episode), which keeps the rendering injective over valid states.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, replace
from typing import Optional

from .core import EnvAdapter, EnvforgeError
from .rng import Rng, derive

Coord = tuple[int, int]

DIRECTIONS: dict[str, Coord] = {
    "up": (-1, 0),
    "down": (1, 0),
    "left": (0, -1),
    "right": (0, 1),
}
DIR_ORDER = ("up", "down", "left", "right")

GENERATION_ATTEMPTS = 10_000


class GenerationExhausted(EnvforgeError):
    """No solvable layout found within the rejection-sampling budget."""


@dataclass(frozen=True)
class SokobanState:
    height: int
    width: int
    walls: frozenset[Coord]
    player: Coord
    box: Coord
    goal: Coord
    steps_taken: int = 0


@dataclass(frozen=True)
class MoveResult:
    state: SokobanState
    moved: bool
    pushed: bool


def border_walls(height: int, width: int) -> frozenset[Coord]:
    return frozenset(
        (r, c)
        for r in range(height)
        for c in range(width)
        if r in (0, height - 1) or c in (0, width - 1)
    )


def validate(s: SokobanState) -> None:
    if not border_walls(s.height, s.width) <= s.walls:
        raise ValueError("border cells must all be walls")
    for name, cell in (("player", s.player), ("box", s.box), ("goal", s.goal)):
        if cell in s.walls:
            raise ValueError(f"{name} sits on a wall")
    if s.box == s.player:
        raise ValueError("box and player overlap")


def generate(
    seed: int,
    height: int = 6,
    width: int = 6,
    wall_density: float = 0.1,
    max_plan_length: Optional[int] = 15,
) -> SokobanState:
    """Rejection-sample solvable layouts, deterministic in the seed.

    Border walls plus Bernoulli interior walls at ``wall_density``; player,
    box, and goal land on distinct free cells. A sample is accepted when
    the BFS oracle finds a plan of length >= 1 and, when
    ``max_plan_length`` is set, at most that long — instances the oracle
    itself cannot finish inside the episode budget are rejected.
    """
    if not 0.0 <= wall_density < 1.0:
        raise ValueError("wall_density must be in [0, 1)")
    rng = Rng(derive(seed, "sokoban gen"))
    interior = [
        (r, c) for r in range(1, height - 1) for c in range(1, width - 1)
    ]
    border = border_walls(height, width)
    for _ in range(GENERATION_ATTEMPTS):
        walls = set(border)
        for cell in interior:
            if rng.uniform() < wall_density:
                walls.add(cell)
        free = [cell for cell in interior if cell not in walls]
        if len(free) < 3:
            continue
        player, box, goal = rng.sample(free, 3)
        state = SokobanState(
            height=height,
            width=width,
            walls=frozenset(walls),
            player=player,
            box=box,
            goal=goal,
        )
        plan = solve_bfs(state)
        if plan and (max_plan_length is None or len(plan) <= max_plan_length):
            return state
    raise GenerationExhausted(
        f"no solvable {height}x{width} layout in {GENERATION_ATTEMPTS} samples"
    )


def apply_move(s: SokobanState, direction: str) -> MoveResult:
    """One move attempt. Blocked moves are lawful no-ops: the state comes
    back unchanged with moved=False. Pushing happens iff the cell beyond
    the box is free; the box is never pulled."""
    dr, dc = DIRECTIONS[direction]
    target = (s.player[0] + dr, s.player[1] + dc)
    if target in s.walls:
        return MoveResult(s, moved=False, pushed=False)
    if target == s.box:
        beyond = (s.box[0] + dr, s.box[1] + dc)
        if beyond in s.walls:
            return MoveResult(s, moved=False, pushed=False)
        new = replace(s, player=target, box=beyond, steps_taken=s.steps_taken + 1)
        return MoveResult(new, moved=True, pushed=True)
    new = replace(s, player=target, steps_taken=s.steps_taken + 1)
    return MoveResult(new, moved=True, pushed=False)


def render(s: SokobanState) -> str:
    """Entity list in row-major order, mentions joined by single spaces."""
    mentions = []
    for r in range(s.height):
        for c in range(s.width):
            cell = (r, c)
            if cell in s.walls:
                mentions.append(f"Wall at ({r}, {c})")
            elif cell == s.box:
                mentions.append(f"Box at ({r}, {c})")
            elif cell == s.player:
                if cell == s.goal:
                    mentions.append(f"Goal at ({r}, {c})")
                mentions.append(f"Player at ({r}, {c})")
            elif cell == s.goal:
                mentions.append(f"Goal at ({r}, {c})")
    return " ".join(mentions)


_MENTION_RE = re.compile(r"(Wall|Goal|Box|Player) at \((\d+), (\d+)\)")


def parse_render(text: str) -> SokobanState:
    """Recover the state from a rendered entity list (augmentation lines,
    which never use the "at (r, c)" phrasing, are ignored)."""
    walls = set()
    player = box = goal = None
    for kind, r, c in _MENTION_RE.findall(text):
        cell = (int(r), int(c))
        if kind == "Wall":
            walls.add(cell)
        elif kind == "Player":
            player = cell
        elif kind == "Box":
            box = cell
        elif kind == "Goal":
            goal = cell
    if player is None or box is None or not walls:
        raise ValueError("rendering does not describe a full state")
    height = max(r for r, _ in walls) + 1
    width = max(c for _, c in walls) + 1
    if goal is None:
        goal = box
    return SokobanState(
        height=height,
        width=width,
        walls=frozenset(walls),
        player=player,
        box=box,
        goal=goal,
    )


def is_solved(s: SokobanState) -> bool:
    return s.box == s.goal


def is_corner_deadlocked(s: SokobanState) -> bool:
    """Box off-goal with walls on two orthogonally adjacent sides."""
    if s.box == s.goal:
        return False
    r, c = s.box
    up = (r - 1, c) in s.walls
    down = (r + 1, c) in s.walls
    left = (r, c - 1) in s.walls
    right = (r, c + 1) in s.walls
    return (up or down) and (left or right)


def solve_bfs(s: SokobanState) -> Optional[list[str]]:
    """Shortest plan to box==goal by BFS over (player, box) pairs, or None.

    Expanding directions in the fixed order up, down, left, right makes the
    returned plan the lexicographically-first among the shortest ones.
    """
    if is_solved(s):
        return []
    start = (s.player, s.box)
    seen = {start}
    queue = deque([(s, [])])
    while queue:
        state, path = queue.popleft()
        for direction in DIR_ORDER:
            result = apply_move(state, direction)
            if not result.moved:
                continue
            key = (result.state.player, result.state.box)
            if key in seen:
                continue
            seen.add(key)
            new_path = path + [direction]
            if is_solved(result.state):
                return new_path
            queue.append((result.state, new_path))
    return None


class SokobanEnv(EnvAdapter):
    """Episode adapter over the pure Sokoban functions."""

    env_id = "sokoban"

    def __init__(
        self,
        height: int = 6,
        width: int = 6,
        wall_density: float = 0.1,
        max_plan_length: Optional[int] = 15,
    ):
        self.height = height
        self.width = width
        self.wall_density = wall_density
        self.max_plan_length = max_plan_length
        self.state: Optional[SokobanState] = None

    def reset(self, seed: int) -> None:
        self.state = generate(
            seed, self.height, self.width, self.wall_density, self.max_plan_length
        )

    def render(self) -> str:
        return render(self.state)

    def task(self) -> str:
        return "Push the box onto the goal."

    def admissible(self) -> list[str]:
        return list(DIR_ORDER)

    def try_apply(self, action: str) -> bool:
        if action not in DIRECTIONS:
            return False
        self.state = apply_move(self.state, action).state
        return True

    def is_terminal(self) -> bool:
        return is_solved(self.state)

    def is_success(self) -> bool:
        return is_solved(self.state)

    def fingerprint(self):
        return (self.state.player, self.state.box)

    def augment_context(self) -> dict:
        return {"height": self.state.height, "width": self.state.width}
