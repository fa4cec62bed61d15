"""Deterministic household world: receptacles, portable objects, put tasks.

A single room holds numbered receptacles (some openable) and scattered
objects. The agent navigates with symbolic actions ("go to drawer 1",
"take knife 1 from countertop 2", ...) and completes a task of the form
"find a/two <type> and put it/them in <receptacle>". Carrying capacity is
one object, so two-object tasks need two trips.

Openable receptacles start closed and hide their contents until opened;
no take action for a hidden object ever appears in the admissible list.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

from .core import EnvAdapter, EnvforgeError
from .rng import Rng, derive

RECEPTACLE_TYPES: dict[str, bool] = {
    # type -> openable
    "cabinet": True,
    "coffeemachine": False,
    "countertop": False,
    "diningtable": False,
    "drawer": True,
    "fridge": True,
    "garbagecan": False,
    "microwave": True,
    "safe": True,
    "sinkbasin": False,
    "stoveburner": False,
    "toaster": False,
}

OBJECT_TYPES = (
    "apple", "bread", "cup", "egg", "fork", "knife",
    "lettuce", "mug", "plate", "potato", "spoon", "tomato",
)

GENERATION_RETRIES = 100


class InfeasibleTask(EnvforgeError):
    """Requested task cannot be satisfied by the sampled world."""


@dataclass
class Receptacle:
    name: str
    rtype: str
    openable: bool
    open: bool
    contents: list[str] = field(default_factory=list)

    @property
    def visible(self) -> bool:
        return not self.openable or self.open


@dataclass
class HouseObject:
    oid: str
    otype: str
    num: int
    location: str  # receptacle name or "inventory"


@dataclass
class TaskSpec:
    kind: str  # "put_one" | "put_two"
    object_type: str
    target_receptacle: str

    @property
    def needed(self) -> int:
        return 2 if self.kind == "put_two" else 1


@dataclass
class HouseState:
    receptacles: dict[str, Receptacle]
    objects: dict[str, HouseObject]
    agent_at: str
    inventory: list[str]
    task: TaskSpec
    completed: bool = False
    last_message: Optional[str] = None

    def placed_count(self) -> int:
        return sum(
            1
            for obj in self.objects.values()
            if obj.otype == self.task.object_type
            and obj.location == self.task.target_receptacle
        )


def _item_list(names: list[str]) -> str:
    items = [f"a {n}" for n in names]
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + ", and " + items[-1]


def scene_text(s: HouseState) -> str:
    order = sorted(s.receptacles.values(), key=lambda r: (r.rtype, -_num(r.name)))
    roster = _item_list([r.name for r in order])
    return (
        "You are in the middle of a room. "
        f"Looking quickly around you, you see {roster}."
    )


def _num(name: str) -> int:
    return int(name.rsplit(" ", 1)[1])


def _contents_text(r: Receptacle) -> str:
    prep = "In" if r.openable else "On"
    if not r.contents:
        return f"{prep} the {r.name}, you see nothing."
    return f"{prep} the {r.name}, you see {_item_list(r.contents)}."


def generate(
    seed: int,
    n_receptacles: int = 10,
    n_objects: int = 6,
    task_kind: Optional[str] = None,
) -> HouseState:
    """Sample a world and a not-yet-satisfied, satisfiable task.

    Deterministic in the seed. Raises :class:`InfeasibleTask` when the
    requested task kind cannot be met (e.g. put_two with a single object).
    """
    if n_receptacles < 2:
        raise ValueError("n_receptacles must be >= 2")
    if n_objects < 1:
        raise ValueError("n_objects must be >= 1")
    rng = Rng(derive(seed, "house gen"))
    type_names = sorted(RECEPTACLE_TYPES)

    counts: dict[str, int] = {}
    receptacles: dict[str, Receptacle] = {}
    for _ in range(n_receptacles):
        rtype = rng.choice(type_names)
        counts[rtype] = counts.get(rtype, 0) + 1
        name = f"{rtype} {counts[rtype]}"
        receptacles[name] = Receptacle(
            name=name,
            rtype=rtype,
            openable=RECEPTACLE_TYPES[rtype],
            open=False,
        )
    names = list(receptacles)

    obj_counts: dict[str, int] = {}
    objects: dict[str, HouseObject] = {}
    for _ in range(n_objects):
        otype = rng.choice(OBJECT_TYPES)
        obj_counts[otype] = obj_counts.get(otype, 0) + 1
        oid = f"{otype} {obj_counts[otype]}"
        home = rng.choice(names)
        objects[oid] = HouseObject(oid=oid, otype=otype, num=obj_counts[otype], location=home)
        receptacles[home].contents.append(oid)

    state = HouseState(
        receptacles=receptacles,
        objects=objects,
        agent_at="start",
        inventory=[],
        task=TaskSpec(kind="put_one", object_type="", target_receptacle=""),
    )

    for _ in range(GENERATION_RETRIES):
        if task_kind is None:
            pair_types = [t for t, c in obj_counts.items() if c >= 2]
            kind = "put_two" if pair_types and rng.randrange(2) == 0 else "put_one"
        else:
            kind = task_kind
        needed = 2 if kind == "put_two" else 1
        feasible = sorted(t for t, c in obj_counts.items() if c >= needed)
        if not feasible:
            if task_kind is not None:
                raise InfeasibleTask(f"{task_kind} needs {needed} objects of one type")
            continue
        otype = rng.choice(feasible)
        target = rng.choice(names)
        task = TaskSpec(kind=kind, object_type=otype, target_receptacle=target)
        state.task = task
        if state.placed_count() < needed:
            return state
    raise InfeasibleTask("no unsatisfied task found within retry budget")


def admissible(s: HouseState) -> list[str]:
    """Exact action enumeration for the current state, sorted, duplicate-free."""
    acts = {"inventory", "look"}
    for name in s.receptacles:
        acts.add(f"go to {name}")
    here = s.receptacles.get(s.agent_at)
    if here is not None:
        if here.openable:
            acts.add(f"close {here.name}" if here.open else f"open {here.name}")
        if not s.inventory and here.visible:
            for oid in here.contents:
                acts.add(f"take {oid} from {here.name}")
        if s.inventory:
            acts.add(f"put {s.inventory[0]} in/on {here.name}")
    return sorted(acts)


def step(s: HouseState, action: str) -> tuple[HouseState, bool]:
    """Apply an action; rejected actions return the original state unchanged."""
    if action not in set(admissible(s)):
        return s, False
    s = copy.deepcopy(s)
    if action == "look":
        s.last_message = None
    elif action == "inventory":
        if s.inventory:
            s.last_message = f"You are carrying: a {s.inventory[0]}."
        else:
            s.last_message = "You are not carrying anything."
    elif action.startswith("go to "):
        name = action[len("go to "):]
        s.agent_at = name
        r = s.receptacles[name]
        if r.openable and not r.open:
            s.last_message = f"You arrive at {name}. The {name} is closed."
        else:
            s.last_message = f"You arrive at {name}. {_contents_text(r)}"
    elif action.startswith("open "):
        r = s.receptacles[action[len("open "):]]
        r.open = True
        s.last_message = f"You open the {r.name}. {_contents_text(r)}"
    elif action.startswith("close "):
        r = s.receptacles[action[len("close "):]]
        r.open = False
        s.last_message = f"You close the {r.name}."
    elif action.startswith("take "):
        oid, rname = action[len("take "):].split(" from ")
        r = s.receptacles[rname]
        r.contents.remove(oid)
        s.inventory.append(oid)
        s.objects[oid].location = "inventory"
        s.last_message = f"You pick up the {oid} from the {rname}."
    elif action.startswith("put "):
        oid, rname = action[len("put "):].split(" in/on ")
        s.inventory.remove(oid)
        r = s.receptacles[rname]
        r.contents.append(oid)
        s.objects[oid].location = rname
        s.last_message = f"You put the {oid} in/on the {rname}."
        if s.placed_count() >= s.task.needed:
            s.completed = True
    return s, True


def task_text(task: TaskSpec) -> str:
    if task.kind == "put_two":
        return f"find two {task.object_type} and put them in {task.target_receptacle}"
    return f"find a {task.object_type} and put it in {task.target_receptacle}"


def render(s: HouseState) -> str:
    return s.last_message if s.last_message is not None else scene_text(s)


def plan_greedy_action(s: HouseState) -> Optional[str]:
    """Next action of the ground-truth greedy solver, or None when done.

    Fetches task objects one at a time: walk to the holder, open it if the
    contents are hidden, take, walk to the target, put.
    """
    if s.completed:
        return None
    task = s.task
    held = [oid for oid in s.inventory if s.objects[oid].otype == task.object_type]
    if held:
        if s.agent_at != task.target_receptacle:
            return f"go to {task.target_receptacle}"
        return f"put {held[0]} in/on {task.target_receptacle}"
    candidates = sorted(
        obj.oid
        for obj in s.objects.values()
        if obj.otype == task.object_type
        and obj.location not in ("inventory", task.target_receptacle)
    )
    if not candidates:
        return None
    oid = candidates[0]
    holder = s.objects[oid].location
    if s.agent_at != holder:
        return f"go to {holder}"
    r = s.receptacles[holder]
    if not r.visible:
        return f"open {holder}"
    return f"take {oid} from {holder}"


class HouseEnv(EnvAdapter):
    """Episode adapter over the household world."""

    env_id = "house"

    def __init__(
        self,
        n_receptacles: int = 10,
        n_objects: int = 6,
        task_kind: Optional[str] = None,
    ):
        self.n_receptacles = n_receptacles
        self.n_objects = n_objects
        self.task_kind = task_kind
        self.state: Optional[HouseState] = None

    def reset(self, seed: int) -> None:
        self.state = generate(seed, self.n_receptacles, self.n_objects, self.task_kind)

    def render(self) -> str:
        return render(self.state)

    def task(self) -> str:
        return task_text(self.state.task)

    def admissible(self) -> list[str]:
        return admissible(self.state)

    def try_apply(self, action: str) -> bool:
        new_state, accepted = step(self.state, action)
        if accepted:
            self.state = new_state
        return accepted

    def is_terminal(self) -> bool:
        return self.state.completed

    def is_success(self) -> bool:
        return self.state.completed

    def fingerprint(self):
        s = self.state
        return (
            s.agent_at,
            tuple(sorted((o.oid, o.location) for o in s.objects.values())),
            tuple(sorted((r.name, r.open) for r in s.receptacles.values())),
            tuple(s.inventory),
            s.completed,
        )

    def augment_context(self) -> dict:
        return {
            "scene_objects": [
                (obj.otype, obj.num) for obj in self.state.objects.values()
            ]
        }
