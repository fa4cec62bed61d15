"""Environment characterization and cross-domain evaluation arithmetic.

Success rates are carried as percentages with one-decimal precision, the
way result tables report them; rank ties therefore compare tenths as
integers, so a difference of exactly the tie threshold never reads as a
tie due to float representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import EnvforgeError, Trajectory


class EmptyInput(EnvforgeError):
    pass


class ZeroBaseline(EnvforgeError):
    pass


class KeyMismatch(EnvforgeError):
    pass


class InsufficientEntries(EnvforgeError):
    pass


def avg_char_count(trajectories: list[Trajectory]) -> float:
    """Mean byte length of the pre-augmentation observation text over all
    steps of all trajectories."""
    lengths = [
        len(step.observation.stripped_text().encode("utf-8"))
        for traj in trajectories
        for step in traj.steps
    ]
    if not lengths:
        raise EmptyInput("no observations")
    return sum(lengths) / len(lengths)


def avg_traj_length(trajectories: list[Trajectory], t_max: int) -> float:
    """Mean trajectory length with failed episodes charged the full budget."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    if not trajectories:
        raise EmptyInput("no trajectories")
    total = sum(len(t.steps) if t.success else t_max for t in trajectories)
    return total / len(trajectories)


def success_rate(trajectories: list[Trajectory]) -> float:
    if not trajectories:
        raise EmptyInput("no trajectories")
    return 100.0 * sum(1 for t in trajectories if t.success) / len(trajectories)


def id_delta(final_rate: float, base_rate: float) -> float:
    """In-domain change in percentage points relative to the base model."""
    return final_rate - base_rate


def rel_change(after_rate: float, before_rate: float) -> float:
    """Percentage change of a success rate relative to the initial policy."""
    if before_rate == 0:
        raise ZeroBaseline("initial rate is zero")
    return 100.0 * (after_rate - before_rate) / before_rate


def ood_change(baseline: dict[str, float], augmented: dict[str, float]) -> float:
    """Relative change of summed OOD success rates, in percent."""
    if set(baseline) != set(augmented):
        raise KeyMismatch(f"{sorted(baseline)} vs {sorted(augmented)}")
    base_sum = sum(baseline.values())
    if base_sum == 0:
        raise ZeroBaseline("baseline rates sum to zero")
    diff = sum(augmented[k] - baseline[k] for k in baseline)
    return 100.0 * diff / base_sum


@dataclass
class ResultMatrix:
    """Success rates indexed by (training domain, evaluation domain).

    A cell with identical row and column domain is in-domain and excluded
    from every OOD aggregate.
    """

    rows: list[str] = field(default_factory=list)
    cols: list[str] = field(default_factory=list)
    cells: dict[tuple[str, str], float] = field(default_factory=dict)

    @classmethod
    def from_rows(cls, rows: list[dict]) -> "ResultMatrix":
        """Build from [{"train": str, "evals": {domain: rate}}, ...]."""
        matrix = cls()
        for row in rows:
            train = row["train"]
            if train in matrix.rows:
                raise ValueError(f"duplicate training domain {train!r}")
            matrix.rows.append(train)
            for domain, rate in row["evals"].items():
                if domain not in matrix.cols:
                    matrix.cols.append(domain)
                matrix.cells[(train, domain)] = float(rate)
        return matrix

    def is_id(self, train: str, domain: str) -> bool:
        return train == domain


def _tenths(rate: float) -> int:
    return round(rate * 10)


def ood_ranking(matrix: ResultMatrix, tie_threshold: float = 0.5) -> dict:
    """Per-evaluation-domain ranks plus their sum per training domain.

    Ranks are dense and ties chain: walking the column sorted by rate
    descending, an entry closer than the threshold to the previous entry
    inherits its rank, otherwise it takes the previous rank plus one.
    Lower total score means stronger cross-domain robustness.
    """
    thr = _tenths(tie_threshold)
    ranks: dict[str, dict[str, int]] = {train: {} for train in matrix.rows}
    for col in matrix.cols:
        entries = [
            (train, matrix.cells[(train, col)])
            for train in matrix.rows
            if not matrix.is_id(train, col) and (train, col) in matrix.cells
        ]
        if len(entries) < 2:
            raise InsufficientEntries(f"evaluation domain {col!r} has {len(entries)} OOD entries")
        order = {train: i for i, train in enumerate(matrix.rows)}
        entries.sort(key=lambda e: (-_tenths(e[1]), order[e[0]]))
        prev_tenths = None
        rank = 0
        for train, rate in entries:
            tenths = _tenths(rate)
            if prev_tenths is None or prev_tenths - tenths >= thr:
                rank += 1
            ranks[train][col] = rank
            prev_tenths = tenths
    return {
        train: {"ranks": dict(cols), "score": sum(cols.values())}
        for train, cols in ranks.items()
    }
