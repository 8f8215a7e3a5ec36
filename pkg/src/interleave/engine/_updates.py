from typing import Dict, Optional

from interleave._docs._docs import d
from interleave.autodiff import Tape, Tensor, ParamSet, add, sub, scale, backward, sq_l2_dist
from interleave.data._dataset import Dataset
from interleave.supernet._ops import task_loss
from interleave.engine._state import StepResult, LearnerState
from interleave.engine._utils import guard_stage
from interleave.supernet._arch import ArchParams
from interleave.supernet._cell import CellSpec

__all__ = ["proximal_term", "stage_update_first", "stage_update", "head_update"]


def proximal_term(weights: ParamSet, reference: ParamSet) -> Tensor:
    """Squared Euclidean distance between two encoders, summed over all parameters.

    Raises
    ------
    ValueError
        If names or shapes differ.
    """
    weights.check_compatible(reference)
    res: Optional[Tensor] = None
    for name in weights:
        term = sq_l2_dist(weights[name], reference[name])
        res = term if res is None else add(res, term)
    if res is None:
        raise ValueError("Unable to compute the proximal term of an empty parameter set.")
    return res


def _loss(ls: LearnerState, arch: Optional[ArchParams], batch: Dataset, cell: CellSpec) -> Tensor:
    return task_loss(cell, arch, ls.weights, ls.head, batch)


@guard_stage
@d.dedent
def stage_update_first(
    ls: LearnerState,
    arch: Optional[ArchParams],
    batch: Dataset,
    cell: CellSpec,
    *,
    tape: Tape,
    eta: float,
    create_graph: bool = True,
    loss: Optional[Tensor] = None,
) -> StepResult:
    """One gradient step on the encoder of the first stage, ``W - eta * grad_W L``.

    Parameters
    ----------
    ls
        Leaves of the stage.
    %(arch)s
    %(batch)s
    %(cell)s
    %(tape)s
    %(eta)s
    %(create_graph)s
    loss
        Precomputed training loss of ``ls`` on ``batch``. If `None`, it is computed.

    Returns
    -------
    %(step_result)s
    """
    if loss is None:
        with tape:
            loss = _loss(ls, arch, batch, cell)
    grads = backward(tape, loss, ls.weights, create_graph=create_graph).dense(ls.weights)
    with tape:
        updated = ls.weights.map(lambda k, w: sub(w, scale(grads[k], eta)))
    return StepResult(updated, loss, grads)


@guard_stage
@d.dedent
def stage_update(
    ls: LearnerState,
    arch: Optional[ArchParams],
    reference: ParamSet,
    batch: Dataset,
    cell: CellSpec,
    *,
    tape: Tape,
    lam: float,
    eta: float,
    create_graph: bool = True,
    loss: Optional[Tensor] = None,
) -> StepResult:
    """One proximal gradient step, ``W - eta * grad_W L - 2 * eta * lam * (W - reference)``.

    Parameters
    ----------
    ls
        Leaves of the stage.
    %(arch)s
    reference
        Updated encoder of the predecessor stage.
    %(batch)s
    %(cell)s
    %(tape)s
    %(lam)s
    %(eta)s
    %(create_graph)s
    loss
        Precomputed training loss of ``ls`` on ``batch``. If `None`, it is computed.

    Returns
    -------
    %(step_result)s
    """
    ls.weights.check_compatible(reference)
    if loss is None:
        with tape:
            loss = _loss(ls, arch, batch, cell)
    grads = backward(tape, loss, ls.weights, create_graph=create_graph).dense(ls.weights)
    pull = 2.0 * eta * lam
    updated: Dict[str, Tensor] = {}
    with tape:
        for k, w in ls.weights.items():
            step = sub(w, scale(grads[k], eta))
            if lam != 0.0:
                step = sub(step, scale(sub(w, reference[k]), pull))
            updated[k] = step
    return StepResult(ParamSet(updated), loss, grads)


@guard_stage
@d.dedent
def head_update(
    ls: LearnerState,
    arch: Optional[ArchParams],
    batch: Dataset,
    cell: CellSpec,
    *,
    tape: Tape,
    eta: float,
    rounds: int,
    create_graph: bool = True,
    loss: Optional[Tensor] = None,
) -> StepResult:
    """One gradient step on the head, only allowed in the final round.

    Parameters
    ----------
    ls
        Leaves of the stage.
    %(arch)s
    %(batch)s
    %(cell)s
    %(tape)s
    %(eta)s
    %(rounds)s
    %(create_graph)s
    loss
        Precomputed training loss of ``ls`` on ``batch``. If `None`, it is computed.

    Returns
    -------
    %(step_result)s

    Raises
    ------
    ValueError
        If the stage is not in round ``rounds``.
    """
    if ls.stage.round != rounds:
        raise ValueError(f"Head updates are only applied in round `{rounds}`, found stage `{ls.stage}`.")
    if loss is None:
        with tape:
            loss = _loss(ls, arch, batch, cell)
    grads = backward(tape, loss, ls.head, create_graph=create_graph).dense(ls.head)
    with tape:
        updated = ls.head.map(lambda k, h: sub(h, scale(grads[k], eta)))
    return StepResult(updated, loss, grads)
