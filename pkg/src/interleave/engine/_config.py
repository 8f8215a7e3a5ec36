from enum import unique
from typing import Tuple, Optional, Sequence

from pydantic import Field, BaseModel, ConfigDict, field_validator, model_validator

from interleave._constants._enum import ModeEnum
from interleave.schedule._schedule import check_order

__all__ = ["HypergradMode", "EngineConfig"]


@unique
class HypergradMode(ModeEnum):
    FIRST_ORDER = "first_order"
    UNROLLED = "unrolled"


class EngineConfig(BaseModel):
    """Hyper-parameters of a run.

    The defaults use a proximal strength of `100` and `2` rounds. The inner step size is chosen so that the proximal
    pull ``2 * eta * lam`` stays below `1`.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", use_enum_values=False)

    #: proximal tradeoff, `0` disables the coupling between stages
    lam: float = Field(default=100.0, ge=0.0)
    #: inner step size of the weight and head updates
    eta: float = Field(default=0.004, gt=0.0)
    #: architecture step size
    eta_arch: float = Field(default=0.5, gt=0.0)
    #: number of learners, `None` infers it from the tasks
    n_learners: Optional[int] = Field(default=None, ge=1)
    #: number of rounds
    rounds: int = Field(default=2, ge=1)
    #: number of architecture updates
    outer_iters: int = Field(default=50, ge=0)
    hypergrad_mode: HypergradMode = HypergradMode.UNROLLED
    #: minibatch size of every stage
    batch_size: int = Field(default=64, ge=1)
    seed: int = Field(default=0, ge=0)
    #: permutation of ``1..K``, `None` orders tasks by decreasing class count
    task_order: Optional[Tuple[int, ...]] = None
    #: validation loss weight of every task except the first one of the task order
    mtl_alpha: float = Field(default=1.0, ge=0.0)
    #: training loss weight of every task except the first one of the task order
    mtl_beta: float = Field(default=1.0, ge=0.0)
    #: explicit per-task training weights, indexed by task, overriding `mtl_beta`
    mtl_train_weights: Optional[Tuple[float, ...]] = None
    #: explicit per-task validation weights, indexed by task, overriding `mtl_alpha`
    mtl_val_weights: Optional[Tuple[float, ...]] = None
    #: keep the weights of the previous outer iteration instead of re-drawing them
    warm_start: bool = False
    #: stop early when the architecture gradient norm falls below this value
    grad_tol: float = Field(default=1e-6, ge=0.0)

    @field_validator("hypergrad_mode", mode="before")
    @classmethod
    def _parse_mode(cls, v: object) -> HypergradMode:
        return HypergradMode(v)

    @field_validator("mtl_train_weights", "mtl_val_weights")
    @classmethod
    def _check_weights(cls, v: Optional[Tuple[float, ...]]) -> Optional[Tuple[float, ...]]:
        if v is not None and any(w < 0 for w in v):
            raise ValueError(f"Expected task weights to be non-negative, found `{v}`.")
        return v

    @model_validator(mode="after")
    def _check_consistency(self) -> "EngineConfig":
        if self.task_order is not None:
            n = len(self.task_order) if self.n_learners is None else self.n_learners
            check_order(n, self.task_order)
        for name in ("mtl_train_weights", "mtl_val_weights"):
            w = getattr(self, name)
            if w is not None and self.n_learners is not None and len(w) != self.n_learners:
                raise ValueError(f"Expected `{name}` to have `{self.n_learners}` entries, found `{len(w)}`.")
        return self

    def resolve(self, n_classes: Sequence[int]) -> "EngineConfig":
        """Fill in the number of learners and the task order from the tasks' class counts.

        Parameters
        ----------
        n_classes
            Class count of every task, in task index order.

        Returns
        -------
        Copy with :attr:`n_learners` and :attr:`task_order` set.
        """
        k = len(n_classes)
        if self.n_learners is not None and self.n_learners != k:
            raise ValueError(f"Expected `{self.n_learners}` tasks, found `{k}`.")
        order = self.task_order
        if order is None:
            # stable sort keeps the task index order on ties
            order = tuple(sorted(range(1, k + 1), key=lambda i: -n_classes[i - 1]))
        order = check_order(k, order)
        return self.model_copy(update={"n_learners": k, "task_order": order})

    def task_weights(self, kind: str) -> Tuple[float, ...]:
        """Per-task loss weights of the joint baseline, indexed by task.

        Parameters
        ----------
        kind
            Either `train` or `val`.
        """
        if kind not in ("train", "val"):
            raise ValueError(f"Invalid option `{kind}`. Valid options are: `['train', 'val']`.")
        if self.n_learners is None or self.task_order is None:
            raise RuntimeError("Tasks are not resolved, call `resolve` first.")
        explicit = self.mtl_train_weights if kind == "train" else self.mtl_val_weights
        if explicit is not None:
            if len(explicit) != self.n_learners:
                raise ValueError(f"Expected `{self.n_learners}` {kind} weights, found `{len(explicit)}`.")
            return tuple(float(w) for w in explicit)
        other = self.mtl_beta if kind == "train" else self.mtl_alpha
        weights = [float(other)] * self.n_learners
        weights[self.task_order[0] - 1] = 1.0
        return tuple(weights)
