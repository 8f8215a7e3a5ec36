from typing import Any, Dict, List, Tuple, Mapping, Callable, Optional
from dataclasses import dataclass

import numpy as np

from interleave._constants._constants import SCHEMA_VERSION, Method
from interleave.engine._config import EngineConfig
from interleave.supernet._arch import ArchParams, Architecture
from interleave.supernet._cell import CellSpec

__all__ = ["StageRecord", "IterationRecord", "RunReport"]


@dataclass(frozen=True)
class StageRecord:
    """Metrics of a single stage of an outer iteration."""

    iteration: int
    #: 1-based position in the schedule
    stage: int
    learner: int
    round: int
    train_loss: float
    #: validation loss of the learner in this iteration
    val_loss: float
    #: squared distance to the proximal reference, `None` without a predecessor
    proximal: Optional[float] = None


@dataclass(frozen=True)
class IterationRecord:
    """Metrics of one outer iteration."""

    iteration: int
    stages: Tuple[StageRecord, ...]
    #: unweighted validation loss of every learner, keyed by learner
    val_losses: Mapping[int, float]
    #: weighted validation objective
    objective: float
    arch_grad_norm: float
    #: mixture logits after the architecture step
    alpha: Mapping[str, Tuple[float, ...]]

    @property
    def mean_val_loss(self) -> float:
        return float(np.mean(list(self.val_losses.values())))


@dataclass(frozen=True, repr=False)
class RunReport:
    """Result of a run."""

    method: Method
    config: EngineConfig
    #: schedule rendered as ``m.k`` tokens
    schedule: str
    #: validation losses at the initial architecture, keyed by learner
    initial_val_losses: Mapping[int, float]
    iterations: Tuple[IterationRecord, ...]
    #: validation losses at the final architecture, keyed by learner
    final_val_losses: Mapping[int, float]
    #: mixed cell the search ran on
    cell: CellSpec
    #: final architecture logits
    arch: ArchParams
    #: cell retaining the strongest operation of every edge
    discretized: CellSpec
    #: whether the architecture gradient norm fell below the tolerance
    stopped_early: bool
    #: seconds spent, never serialized
    wall_time: float

    @property
    def n_iterations(self) -> int:
        return len(self.iterations)

    @property
    def final_mean_val_loss(self) -> float:
        return float(np.mean(list(self.final_val_losses.values())))

    @property
    def architecture(self) -> Architecture:
        return Architecture.from_arch(self.arch, self.cell)

    def alpha_trajectory(self, edge: str) -> np.ndarray:
        """Logits of ``edge`` after every iteration, of shape ``[n_iterations, n_ops]``."""
        n_ops = self.cell.edge(edge).n_ops
        if not self.iterations:
            return np.zeros((0, n_ops))
        return np.array([it.alpha[edge] for it in self.iterations])

    def metrics_records(self) -> List[Dict[str, Any]]:
        """One record per stage and iteration, with a stable field order."""
        return [
            {
                "schema_version": SCHEMA_VERSION,
                "iter": s.iteration,
                "stage": s.stage,
                "learner": s.learner,
                "round": s.round,
                "train_loss": s.train_loss,
                "val_loss": s.val_loss,
                "arch_grad_norm": it.arch_grad_norm,
            }
            for it in self.iterations
            for s in it.stages
        ]

    def to_dict(self) -> Dict[str, Any]:
        """Serializable content, without :attr:`wall_time`."""
        return {
            "schema_version": SCHEMA_VERSION,
            "method": str(self.method),
            "config": self.config.model_dump(mode="json"),
            "schedule": self.schedule,
            "initial_val_losses": {str(k): v for k, v in self.initial_val_losses.items()},
            "final_val_losses": {str(k): v for k, v in self.final_val_losses.items()},
            "stopped_early": self.stopped_early,
            "iterations": [
                {
                    "iter": it.iteration,
                    "objective": it.objective,
                    "arch_grad_norm": it.arch_grad_norm,
                    "val_losses": {str(k): v for k, v in it.val_losses.items()},
                    "alpha": {k: list(v) for k, v in it.alpha.items()},
                    "stages": [
                        {
                            "stage": s.stage,
                            "learner": s.learner,
                            "round": s.round,
                            "train_loss": s.train_loss,
                            "proximal": s.proximal,
                        }
                        for s in it.stages
                    ],
                }
                for it in self.iterations
            ],
            "cell": self.cell.to_dict(),
            "alpha": {k: v.data.tolist() for k, v in self.arch.items()},
            "discretized": [str(e.ops[0]) for e in self.discretized.edges],
        }

    def _format_params(self, fmt: Callable[[Any], str]) -> str:
        params = {
            "method": self.method,
            "iterations": self.n_iterations,
            "final_mean_val_loss": round(self.final_mean_val_loss, 4),
        }
        return ", ".join(f"{name}={fmt(val)}" for name, val in params.items())

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}[{self._format_params(repr)}]"

    def __str__(self) -> str:
        return f"{self.__class__.__name__}[{self._format_params(str)}]"
