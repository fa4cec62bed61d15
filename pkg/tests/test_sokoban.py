"""Sokoban mechanics, rendering, generation, and oracle agreement."""

from itertools import combinations, product

import pytest

from envforge.rng import Rng
from envforge.sokoban import (
    DIR_ORDER,
    GenerationExhausted,
    SokobanState,
    apply_move,
    border_walls,
    generate,
    is_corner_deadlocked,
    is_solved,
    parse_render,
    render,
    solve_bfs,
    validate,
)

# The worked movement example: pushing right from (2,3) with the box at
# (2,4) and (2,5) free moves both one cell.
PUSH_GRID = SokobanState(
    height=5,
    width=7,
    walls=border_walls(5, 7),
    player=(2, 3),
    box=(2, 4),
    goal=(1, 1),
)

APPENDIX_STATE = SokobanState(
    height=6,
    width=6,
    walls=frozenset(set(border_walls(6, 6)) | {(4, 1), (4, 2), (4, 4)}),
    player=(4, 3),
    box=(3, 3),
    goal=(2, 1),
)

APPENDIX_RENDER = (
    "Wall at (0, 0) Wall at (0, 1) Wall at (0, 2) Wall at (0, 3) Wall at (0, 4) "
    "Wall at (0, 5) Wall at (1, 0) Wall at (1, 5) Wall at (2, 0) Goal at (2, 1) "
    "Wall at (2, 5) Wall at (3, 0) Box at (3, 3) Wall at (3, 5) Wall at (4, 0) "
    "Wall at (4, 1) Wall at (4, 2) Player at (4, 3) Wall at (4, 4) Wall at (4, 5) "
    "Wall at (5, 0) Wall at (5, 1) Wall at (5, 2) Wall at (5, 3) Wall at (5, 4) "
    "Wall at (5, 5)"
)


def all_valid_states(size: int, interior_walls=True):
    """Every valid state on a size x size grid: border walls, optional
    interior wall subsets, distinct player/box/goal on free cells."""
    border = border_walls(size, size)
    interior = [(r, c) for r in range(1, size - 1) for c in range(1, size - 1)]
    wall_choices = [frozenset()]
    if interior_walls:
        wall_choices = [
            frozenset(combo)
            for n in range(len(interior) + 1)
            for combo in combinations(interior, n)
        ]
    for extra in wall_choices:
        walls = border | extra
        free = [c for c in interior if c not in extra]
        if len(free) < 3:
            continue
        for player, box, goal in product(free, free, free):
            if player == box or box == goal or player == goal:
                continue
            yield SokobanState(
                height=size, width=size, walls=walls, player=player, box=box, goal=goal
            )


# --- movement -------------------------------------------------------------------


def test_worked_push_example():
    result = apply_move(PUSH_GRID, "right")
    assert result.moved and result.pushed
    assert result.state.player == (2, 4)
    assert result.state.box == (2, 5)


def test_move_into_wall_leaves_state_unchanged():
    state = SokobanState(
        height=5, width=7, walls=border_walls(5, 7), player=(1, 1), box=(2, 2), goal=(3, 3)
    )
    result = apply_move(state, "up")
    assert not result.moved and not result.pushed
    assert result.state == state


def test_push_blocked_by_wall():
    walls = frozenset(set(border_walls(5, 7)) | {(3, 1)})
    state = SokobanState(
        height=5, width=7, walls=walls, player=(3, 3), box=(3, 2), goal=(1, 4)
    )
    result = apply_move(state, "left")  # beyond the box sits the wall at (3, 1)
    assert not result.moved and not result.pushed
    assert result.state == state


def test_never_pulls():
    result = apply_move(PUSH_GRID, "left")  # moving away from the box
    assert result.moved and not result.pushed
    assert result.state.box == PUSH_GRID.box


def test_move_conservation_and_push_geometry():
    rng = Rng(5)
    for seed in range(50):
        state = generate(seed)
        for _ in range(20):
            direction = DIR_ORDER[rng.randrange(4)]
            result = apply_move(state, direction)
            after = result.state
            assert (after.height, after.width) == (state.height, state.width)
            assert after.walls == state.walls
            assert after.goal == state.goal
            if result.pushed:
                dr, dc = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}[
                    direction
                ]
                assert after.box == (state.box[0] + dr, state.box[1] + dc)
                assert after.player == state.box
            state = after


# --- rendering ------------------------------------------------------------------


def test_appendix_render_golden():
    assert render(APPENDIX_STATE) == APPENDIX_RENDER


def test_border_only_render():
    state = SokobanState(
        height=3, width=3, walls=border_walls(3, 3), player=(1, 1), box=(1, 1), goal=(1, 1)
    )
    # 3x3 has a single interior cell; use a legal 4x4 instead for entities.
    state = SokobanState(
        height=4, width=4, walls=border_walls(4, 4), player=(1, 1), box=(1, 2), goal=(2, 1)
    )
    text = render(state)
    assert text.count("Wall at") == 12
    assert "Player at (1, 1)" in text and "Box at (1, 2)" in text and "Goal at (2, 1)" in text


def test_box_on_goal_renders_box_only():
    state = SokobanState(
        height=4, width=4, walls=border_walls(4, 4), player=(1, 1), box=(2, 2), goal=(2, 2)
    )
    text = render(state)
    assert "Box at (2, 2)" in text and "Goal at" not in text
    assert is_solved(state)


def test_player_on_goal_renders_both_mentions():
    state = SokobanState(
        height=4, width=4, walls=border_walls(4, 4), player=(1, 1), box=(2, 2), goal=(1, 1)
    )
    assert "Goal at (1, 1) Player at (1, 1)" in render(state)


def test_render_injective_on_all_4x4_states():
    seen = {}
    for state in all_valid_states(4):
        text = render(state)
        key = (state.walls, state.player, state.box, state.goal)
        if text in seen:
            assert seen[text] == key, f"collision: {seen[text]} vs {key}"
        seen[text] = key


def test_parse_render_identity_on_valid_states():
    for state in all_valid_states(4):
        back = parse_render(render(state))
        assert (back.walls, back.player, back.box) == (state.walls, state.player, state.box)
        if state.box != state.goal:
            assert back.goal == state.goal


# --- solved / deadlock ------------------------------------------------------------


def test_is_solved():
    assert is_solved(
        SokobanState(4, 4, border_walls(4, 4), player=(1, 1), box=(2, 2), goal=(2, 2))
    )


def test_side_wall_alone_is_not_deadlock():
    state = SokobanState(
        height=5, width=5, walls=border_walls(5, 5), player=(3, 3), box=(1, 2), goal=(3, 1)
    )
    # box against the top wall only: possibly solvable, not a corner
    assert not is_corner_deadlocked(state)


def test_corner_deadlock_implies_bfs_unsolvable_exhaustive_5x5():
    checked = deadlocked = 0
    for state in all_valid_states(5):
        checked += 1
        if is_corner_deadlocked(state):
            deadlocked += 1
            assert solve_bfs(state) is None, state
    assert checked > 10_000
    assert deadlocked > 0


# --- BFS oracle -------------------------------------------------------------------


def brute_force_shortest(state: SokobanState, cap: int):
    """Independent oracle: enumerate action sequences breadth-first by
    simulating apply_move, without sharing solve_bfs's search code."""
    from collections import deque

    frontier = deque([(state, 0)])
    seen = {(state.player, state.box)}
    while frontier:
        current, depth = frontier.popleft()
        if depth >= cap:
            continue
        for direction in DIR_ORDER:
            result = apply_move(current, direction)
            if not result.moved:
                continue
            key = (result.state.player, result.state.box)
            if key in seen:
                continue
            seen.add(key)
            if is_solved(result.state):
                return depth + 1
            frontier.append((result.state, depth + 1))
    return None


def test_solved_input_gives_empty_plan():
    state = SokobanState(4, 4, border_walls(4, 4), player=(1, 1), box=(2, 2), goal=(2, 2))
    assert solve_bfs(state) == []


def test_bfs_on_appendix_state_solves():
    plan = solve_bfs(APPENDIX_STATE)
    assert plan
    state = APPENDIX_STATE
    for action in plan:
        state = apply_move(state, action).state
    assert is_solved(state)


def test_bfs_plans_execute_and_are_optimal_small_grids():
    for seed in range(40):
        state = generate(seed, height=5, width=5, wall_density=0.15, max_plan_length=None)
        plan = solve_bfs(state)
        assert plan
        sim = state
        for i, action in enumerate(plan):
            sim = apply_move(sim, action).state
            solved = is_solved(sim)
            assert solved == (i == len(plan) - 1)
        assert brute_force_shortest(state, cap=len(plan)) == len(plan)


def test_bfs_tie_break_prefers_fixed_direction_order():
    # Player above-left of a symmetric choice: both "down,right,..." and
    # "right,down,..." reach the goal; BFS must return the up<down<left<right
    # lexicographically-first shortest plan.
    state = SokobanState(
        height=6, width=6, walls=border_walls(6, 6), player=(1, 1), box=(2, 2), goal=(4, 2)
    )
    plan = solve_bfs(state)
    brute = brute_force_shortest(state, cap=10)
    assert plan is not None and len(plan) == brute
    candidates = _all_shortest_plans(state, len(plan))
    assert plan == min(candidates, key=lambda p: [DIR_ORDER.index(a) for a in p])


def _all_shortest_plans(state, length):
    plans = []
    for seq in product(DIR_ORDER, repeat=length):
        sim = state
        ok = True
        for i, action in enumerate(seq):
            result = apply_move(sim, action)
            if not result.moved:
                ok = False
                break
            sim = result.state
            if is_solved(sim) and i < length - 1:
                ok = False
                break
        if ok and is_solved(sim):
            plans.append(list(seq))
    return plans


# --- generation -------------------------------------------------------------------


def test_generate_deterministic():
    assert generate(0) == generate(0)
    assert generate(0) != generate(1)


def test_generate_solvable_and_valid():
    for seed in range(25):
        state = generate(seed)
        validate(state)
        plan = solve_bfs(state)
        assert plan and 1 <= len(plan) <= 15


def test_generate_impossible_interior_exhausts():
    with pytest.raises(GenerationExhausted):
        generate(0, height=3, width=3)


def test_generate_rejects_bad_density():
    with pytest.raises(ValueError):
        generate(0, wall_density=1.0)
