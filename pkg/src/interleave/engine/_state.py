from typing import Any, Tuple, Optional, NamedTuple
from dataclasses import dataclass

from interleave.autodiff import Tensor, GradMap, ParamSet
from interleave.schedule import StageId

__all__ = ["DivergenceError", "LearnerState", "StepResult", "StageTrace"]


class DivergenceError(RuntimeError):
    """Raised when a run produces a non-finite loss or gradient.

    Parameters
    ----------
    message
        Error message.
    stage
        Offending stage, `None` for the architecture step.
    iteration
        Outer iteration, `None` if unknown.
    """

    def __init__(self, message: str, stage: Optional[StageId] = None, iteration: Optional[int] = None):
        super().__init__(message)
        self.stage = stage
        self.iteration = iteration

    def __reduce__(self) -> Tuple[Any, ...]:
        return self.__class__, (self.args[0], self.stage, self.iteration)

    def __str__(self) -> str:
        where = "architecture step" if self.stage is None else f"stage `{self.stage}`"
        when = "" if self.iteration is None else f" of outer iteration `{self.iteration}`"
        return f"{self.args[0]} ({where}{when})"


@dataclass(frozen=True)
class LearnerState:
    """Encoder and head weights of one learner at one stage."""

    #: encoder weights
    weights: ParamSet
    #: head weights
    head: ParamSet
    stage: StageId


class StepResult(NamedTuple):
    """Outcome of a one-step update."""

    #: updated parameters
    params: ParamSet
    #: training loss the step descended on
    loss: Tensor
    #: gradients used for the step
    grads: GradMap


@dataclass(frozen=True, repr=False)
class StageTrace:
    """Recorded one-step update of a single stage."""

    stage: StageId
    #: 0-based position in the schedule
    position: int
    #: leaves the update started from
    state: LearnerState
    #: encoder update
    update: StepResult
    #: head update, only in the final round
    head_update: Optional[StepResult]
    #: proximal reference, the predecessor's updated encoder
    reference: Optional[ParamSet]
    predecessor: Optional["StageTrace"]
    #: first and one-past-last tape node of this stage
    nodes: Tuple[int, int]
    #: unweighted training loss of the stage
    train_loss: float
    #: squared distance to the proximal reference before the update
    proximal: Optional[float] = None

    @property
    def updated(self) -> ParamSet:
        return self.update.params

    @property
    def updated_head(self) -> Optional[ParamSet]:
        return None if self.head_update is None else self.head_update.params

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}[stage={self.stage}, position={self.position}, nodes={self.nodes}]"
