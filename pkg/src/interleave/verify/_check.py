from typing import Any, Dict, Tuple, Callable, Optional, Sequence
from dataclasses import dataclass

import yaml

import numpy as np

from interleave._logging import logger
from interleave._docs._docs import d
from interleave.autodiff import Tape, Tensor, GradMap, ParamSet, backward
from interleave.engine import EngineConfig, HypergradMode, make_runner
from interleave.data._dataset import TaskData
from interleave.verify._finite_diff import finite_diff_gradient
from interleave.supernet._arch import ArchParams
from interleave.supernet._cell import CellSpec
from interleave._constants._constants import Method

__all__ = ["ReplayError", "CheckReport", "relative_error", "compare_gradients", "gradient_check", "hypergrad_check"]


class ReplayError(RuntimeError):
    """Raised when repeated evaluations of a pipeline do not agree bit-wise."""


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    """Element-wise ``|a - b| / max(floor, |a| + |b|)``."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"Expected arrays of identical shape, found `{a.shape}` and `{b.shape}`.")
    return np.abs(a - b) / np.maximum(floor, np.abs(a) + np.abs(b))


@dataclass(frozen=True, repr=False)
class CheckReport:
    """Agreement between an analytic and a numeric gradient."""

    #: maximum relative error of every parameter
    max_error: Dict[str, float]
    #: mean relative error of every parameter
    mean_error: Dict[str, float]
    tolerance: float
    #: what was checked, e.g. `gradient` or `hypergradient`
    kind: str = "gradient"
    eps: Optional[float] = None

    def __post_init__(self) -> None:
        if set(self.max_error) != set(self.mean_error):
            raise ValueError("Maximum and mean errors must cover the same parameters.")
        if any(v < 0 for v in self.max_error.values()) or any(v < 0 for v in self.mean_error.values()):
            raise ValueError("Relative errors must be non-negative.")

    @property
    def worst(self) -> float:
        return max(self.max_error.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "tolerance": self.tolerance,
            "eps": self.eps,
            "max_relative_error": self.worst,
            "parameters": {
                k: {"max_relative_error": self.max_error[k], "mean_relative_error": self.mean_error[k]}
                for k in sorted(self.max_error)
            },
        }

    def to_text(self) -> str:
        """Structured text summary."""
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}[kind={self.kind!r}, worst={self.worst:.3e}, passed={self.passed}]"


def compare_gradients(
    analytic: GradMap,
    numeric: GradMap,
    *,
    tol: float,
    floor: float = 1e-8,
    kind: str = "gradient",
    eps: Optional[float] = None,
) -> CheckReport:
    """Summarize the relative error of ``analytic`` against ``numeric`` per parameter."""
    analytic.check_compatible(numeric)
    max_err, mean_err = {}, {}
    for k in analytic:
        err = relative_error(analytic[k].data, numeric[k].data, floor=floor)
        max_err[k] = float(err.max()) if err.size else 0.0
        mean_err[k] = float(err.mean()) if err.size else 0.0
    return CheckReport(max_error=max_err, mean_error=mean_err, tolerance=tol, kind=kind, eps=eps)


def gradient_check(
    loss_fn: Callable[[ParamSet], Tensor],
    params: ParamSet,
    *,
    eps: float = 1e-5,
    tol: float = 1e-4,
    floor: float = 1e-8,
) -> CheckReport:
    """Compare reverse-mode gradients of ``loss_fn`` with central finite differences.

    Parameters
    ----------
    loss_fn
        Builds a scalar loss from a parameter set, using registered primitives.
    params
        Point to differentiate at.
    eps
        Perturbation size of the finite differences.
    tol
        Maximum allowed relative error.
    floor
        Lower bound of the relative error's denominator.

    Returns
    -------
    The per-parameter comparison.
    """
    with Tape() as tape:
        leaves = tape.watch(params)
        root = loss_fn(leaves)
    analytic = backward(tape, root, leaves).dense(leaves)

    def value(p: ParamSet) -> float:
        with Tape():
            return loss_fn(p).item()

    numeric = finite_diff_gradient(value, params, eps=eps)
    return compare_gradients(analytic, numeric, tol=tol, floor=floor, eps=eps)


def _bits(grads: GradMap) -> Tuple[bytes, ...]:
    return tuple(v.data.tobytes() for v in grads.values())


@d.dedent
def hypergrad_check(
    config: EngineConfig,
    tasks: Sequence[TaskData],
    cell: CellSpec,
    *,
    eps: float = 1e-4,
    tol: float = 1e-3,
    method: Method = Method.IL,
    arch: Optional[ArchParams] = None,
    iteration: int = 0,
    floor: float = 1e-8,
) -> CheckReport:
    """Compare the unrolled architecture gradient with finite differences of the whole inner problem.

    Every perturbed evaluation reruns the stage chain with the random streams of ``iteration``, so initial
    weights and minibatches are frozen.

    Parameters
    ----------
    %(config)s
    %(tasks)s
    %(cell)s
    eps
        Perturbation size of the finite differences.
    tol
        Maximum allowed relative error.
    method
        Which inner problem to differentiate.
    arch
        Architecture to check at. If `None`, use a uniform mixture.
    iteration
        Outer iteration whose random streams are used.
    floor
        Lower bound of the relative error's denominator.

    Returns
    -------
    The per-edge comparison.

    Raises
    ------
    ReplayError
        If two evaluations at the same architecture differ.
    """
    config = config.model_copy(update={"hypergrad_mode": HypergradMode.UNROLLED})
    runner = make_runner(method, config, tasks, cell, arch=arch)
    point = runner.arch

    first = runner.objective(point, iteration)
    second = runner.objective(point, iteration)
    assert first.grads is not None and second.grads is not None
    if first.value != second.value or _bits(first.grads) != _bits(second.grads):
        raise ReplayError("Repeated evaluations of the inner problem differ, the pipeline is not replayable.")

    def value(a: ParamSet) -> float:
        return runner.objective(ArchParams(a), iteration, with_grad=False).value

    numeric = finite_diff_gradient(value, point, eps=eps)
    report = compare_gradients(first.grads, numeric, tol=tol, floor=floor, kind="hypergradient", eps=eps)
    logger.info(f"Hypergradient check of `{Method(method)}`: worst relative error `{report.worst:.3e}`.")
    return report
