from typing import Dict, Tuple, Mapping, Optional, Sequence, NamedTuple

from interleave._logging import logger
from interleave._docs._docs import d
from interleave.autodiff import Tape, Tensor, GradMap, NonFiniteError, add, scale, detach, backward
from interleave.data._dataset import Dataset
from interleave.supernet._ops import task_loss
from interleave.engine._state import StageTrace, DivergenceError
from interleave.engine._config import HypergradMode
from interleave.supernet._arch import ArchParams
from interleave.supernet._cell import CellSpec

__all__ = ["ArchUpdate", "final_traces", "validation_objective", "arch_update"]


class ArchUpdate(NamedTuple):
    """Outcome of an architecture step."""

    #: updated architecture, as constants
    arch: ArchParams
    #: gradient of the validation objective
    grads: GradMap
    grad_norm: float
    #: unweighted validation loss of every learner, keyed by learner
    val_losses: Dict[int, float]
    #: weighted validation objective
    objective: float


def final_traces(traces: Sequence[StageTrace], learners: Sequence[int], rounds: int) -> Dict[int, StageTrace]:
    """Final-round trace of every learner.

    Raises
    ------
    ValueError
        If the chain does not cover ``len(learners) * rounds`` stages or a final-round head update is missing.
    """
    expected = len(learners) * rounds
    if len(traces) != expected:
        raise ValueError(f"Expected a trace chain of `{expected}` stages, found `{len(traces)}`.")
    stages = {t.stage for t in traces}
    res = {}
    for k in learners:
        for m in range(1, rounds + 1):
            if not any(s.round == m and s.learner == k for s in stages):
                raise ValueError(f"Trace chain is missing stage `{m}.{k}`.")
        trace = next(t for t in traces if t.stage.learner == k and t.stage.round == rounds)
        if trace.head_update is None:
            raise ValueError(f"Trace of stage `{trace.stage}` is missing the head update.")
        res[k] = trace
    return res


def validation_objective(
    tape: Tape,
    arch: ArchParams,
    finals: Mapping[int, StageTrace],
    val_sets: Mapping[int, Dataset],
    cell: CellSpec,
    *,
    mode: HypergradMode,
    weights: Optional[Mapping[int, float]] = None,
) -> Tuple[Tensor, Dict[int, float]]:
    """Weighted sum of the learners' validation losses at their final-round weights.

    In `first_order` mode the updated weights and heads are detached, so only the direct dependence of the
    validation loss on ``arch`` remains.

    Returns
    -------
    The objective, recorded on ``tape``, and the unweighted loss of every learner.
    """
    mode = HypergradMode(mode)
    objective: Optional[Tensor] = None
    losses: Dict[int, float] = {}
    with tape:
        for k, trace in finals.items():
            w_bar, h_bar = trace.updated, trace.updated_head
            assert h_bar is not None
            if mode == HypergradMode.FIRST_ORDER:
                w_bar = w_bar.map(lambda _, t: detach(t))
                h_bar = h_bar.map(lambda _, t: detach(t))
            loss = task_loss(cell, arch, w_bar, h_bar, val_sets[k])
            losses[k] = loss.item()
            term = loss if weights is None else scale(loss, weights[k])
            objective = term if objective is None else add(objective, term)
    if objective is None:
        raise ValueError("Unable to compute a validation objective without learners.")
    return objective, losses


@d.dedent
def arch_update(
    tape: Tape,
    arch: ArchParams,
    traces: Sequence[StageTrace],
    val_sets: Mapping[int, Dataset],
    cell: CellSpec,
    *,
    rounds: int,
    eta_arch: float,
    mode: HypergradMode = HypergradMode.UNROLLED,
    weights: Optional[Mapping[int, float]] = None,
) -> ArchUpdate:
    """Hypergradient step on the architecture.

    Parameters
    ----------
    %(tape)s
    arch
        Architecture leaves on ``tape`` the trace chain was computed with.
    traces
        Trace of every stage, in schedule order.
    val_sets
        Validation set of every learner, keyed by learner.
    %(cell)s
    %(rounds)s
    eta_arch
        Architecture step size.
    mode
        In `unrolled` mode, the gradient flows through the whole chain of updates. In `first_order` mode, the
        updated weights and heads are treated as constants.
    weights
        Per-learner weight of the validation losses. If `None`, the losses are summed.

    Returns
    -------
    :class:`interleave.engine.ArchUpdate` with the new architecture and the gradient that was used.

    Raises
    ------
    ValueError
        If the trace chain is incomplete.
    DivergenceError
        If the objective or its gradient is not finite.
    """
    learners = sorted({t.stage.learner for t in traces})
    finals = final_traces(traces, learners, rounds)
    try:
        objective, losses = validation_objective(tape, arch, finals, val_sets, cell, mode=mode, weights=weights)
        grads = backward(tape, objective, arch).dense(arch)
        new = arch.step(grads, eta_arch)
    except NonFiniteError as e:
        raise DivergenceError(f"Non-finite value in the architecture step: {e}", stage=None) from e
    norm = grads.norm()
    logger.debug(f"Architecture gradient norm `{norm:.6g}` over `{len(tape)}` recorded nodes.")
    return ArchUpdate(arch=new, grads=grads, grad_norm=norm, val_losses=losses, objective=objective.item())
