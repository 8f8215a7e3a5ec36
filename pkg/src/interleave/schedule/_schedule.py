from enum import unique
from typing import Dict, Tuple, Iterator, Optional, Sequence
from dataclasses import field, dataclass

from interleave._constants._enum import ModeEnum

__all__ = [
    "SchedulePolicy",
    "StageId",
    "Schedule",
    "build_interleaved",
    "build_blocked",
    "build_schedule",
    "predecessor",
    "check_order",
]


@unique
class SchedulePolicy(ModeEnum):
    INTERLEAVED = "interleaved"
    BLOCKED = "blocked"


@dataclass(frozen=True, order=True)
class StageId:
    """One ``(round, learner)`` slot of a schedule, both 1-based."""

    round: int
    learner: int

    def __post_init__(self) -> None:
        if self.round < 1 or self.learner < 1:
            raise ValueError(f"Expected round and learner to be positive, found `{(self.round, self.learner)}`.")

    def __str__(self) -> str:
        return f"{self.round}.{self.learner}"


@dataclass(frozen=True)
class Schedule:
    """Ordered sequence of stages. The predecessor of a stage is the stage right before it."""

    stages: Tuple[StageId, ...]
    policy: SchedulePolicy
    n_learners: int
    n_rounds: int
    _position: Dict[StageId, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "policy", SchedulePolicy(self.policy))
        position = {s: i for i, s in enumerate(self.stages)}
        if len(position) != len(self.stages):
            raise ValueError("Schedule contains duplicate stages.")
        object.__setattr__(self, "_position", position)

    def __len__(self) -> int:
        return len(self.stages)

    def __iter__(self) -> Iterator[StageId]:
        return iter(self.stages)

    def __getitem__(self, i: int) -> StageId:
        return self.stages[i]

    def __contains__(self, stage: object) -> bool:
        return stage in self._position

    def index(self, stage: StageId) -> int:
        """0-based position of ``stage``."""
        try:
            return self._position[stage]
        except KeyError:
            raise KeyError(f"Stage `{stage}` is not part of the schedule.") from None

    @property
    def task_order(self) -> Tuple[int, ...]:
        """Learners in order of their first appearance."""
        seen: Dict[int, None] = {}
        for s in self.stages:
            seen.setdefault(s.learner, None)
        return tuple(seen)

    def render(self) -> str:
        """Space separated ``m.k`` tokens."""
        return " ".join(str(s) for s in self.stages)


def check_order(n_learners: int, task_order: Optional[Sequence[int]]) -> Tuple[int, ...]:
    """Validate ``task_order`` as a permutation of ``1..K``, `None` means the identity."""
    if n_learners < 1:
        raise ValueError(f"Expected at least `1` learner, found `{n_learners}`.")
    if task_order is None:
        return tuple(range(1, n_learners + 1))
    order = tuple(int(k) for k in task_order)
    if sorted(order) != list(range(1, n_learners + 1)):
        raise ValueError(f"Expected task order to be a permutation of `1..{n_learners}`, found `{order}`.")
    return order


def _check_rounds(n_rounds: int) -> None:
    if n_rounds < 1:
        raise ValueError(f"Expected at least `1` round, found `{n_rounds}`.")


def build_interleaved(n_learners: int, n_rounds: int, task_order: Optional[Sequence[int]] = None) -> Schedule:
    """Cycle through all learners once per round.

    Parameters
    ----------
    n_learners
        Number of learners ``K``.
    n_rounds
        Number of rounds ``M``.
    task_order
        Permutation of ``1..K``. If `None`, use ``1..K``.

    Returns
    -------
    Schedule of length ``K * M`` whose position ``(m - 1) * K + i`` holds stage ``(m, task_order[i])``.
    """
    order = check_order(n_learners, task_order)
    _check_rounds(n_rounds)
    stages = tuple(StageId(m, k) for m in range(1, n_rounds + 1) for k in order)
    return Schedule(stages, SchedulePolicy.INTERLEAVED, n_learners, n_rounds)


def build_blocked(n_learners: int, n_rounds: int, task_order: Optional[Sequence[int]] = None) -> Schedule:
    """Run all rounds of a learner before moving to the next one."""
    order = check_order(n_learners, task_order)
    _check_rounds(n_rounds)
    stages = tuple(StageId(m, k) for k in order for m in range(1, n_rounds + 1))
    return Schedule(stages, SchedulePolicy.BLOCKED, n_learners, n_rounds)


def build_schedule(
    policy: SchedulePolicy, n_learners: int, n_rounds: int, task_order: Optional[Sequence[int]] = None
) -> Schedule:
    builder = build_blocked if SchedulePolicy(policy) == SchedulePolicy.BLOCKED else build_interleaved
    return builder(n_learners, n_rounds, task_order)


def predecessor(stage: StageId, schedule: Schedule) -> Optional[StageId]:
    """Stage right before ``stage``, `None` for the first stage.

    Raises
    ------
    KeyError
        If ``stage`` is not part of ``schedule``.
    """
    i = schedule.index(stage)
    return None if i == 0 else schedule[i - 1]
