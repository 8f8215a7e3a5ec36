from abc import ABC, abstractmethod
from time import perf_counter
from typing import Dict, List, Tuple, Optional, Sequence, NamedTuple

import numpy as np

from interleave._logging import logger
from interleave._docs._docs import d
from interleave.autodiff import Tape, GradMap, ParamSet, NonFiniteError, scale, backward
from interleave.schedule import StageId, Schedule, SchedulePolicy, predecessor, build_schedule
from interleave.data._dataset import Dataset, TaskData
from interleave.supernet._ops import task_loss, init_head, init_encoder
from interleave.engine._state import StageTrace, LearnerState, DivergenceError
from interleave.engine._config import EngineConfig, HypergradMode
from interleave.engine._output import RunReport, StageRecord, IterationRecord
from interleave.supernet._arch import ArchParams, discretize
from interleave.supernet._cell import CellSpec
from interleave.engine._updates import head_update, stage_update, proximal_term, stage_update_first
from interleave.engine._hypergrad import ArchUpdate, arch_update, final_traces, validation_objective
from interleave._constants._constants import Method

__all__ = [
    "BaseRunner",
    "InterleavedRunner",
    "BlockedRunner",
    "MultiTaskRunner",
    "Pipeline",
    "Objective",
    "make_runner",
    "run_il",
    "run_blocked",
    "run_mtl",
]

# independent random streams per stage
_INIT_WEIGHTS, _INIT_HEAD, _BATCH = 0, 1, 2


class Pipeline(NamedTuple):
    """Recorded inner problem of one outer iteration."""

    tape: Tape
    #: architecture leaves on :attr:`tape`
    arch: ArchParams
    #: trace of every stage, in schedule order
    traces: Tuple[StageTrace, ...]


class Objective(NamedTuple):
    """Validation objective of the inner problem at a fixed architecture."""

    value: float
    #: gradient with respect to the architecture, `None` if not requested
    grads: Optional[GradMap]
    #: unweighted validation loss of every learner
    val_losses: Dict[int, float]


class BaseRunner(ABC):
    """Outer loop shared by the interleaved, blocked and joint methods.

    Every outer iteration records the inner one-step problem on a fresh :class:`interleave.autodiff.Tape` and
    takes one hypergradient step on the architecture.

    Parameters
    ----------
    %(config)s
    %(tasks)s
    %(cell)s
    arch
        Initial architecture. If `None`, use a uniform mixture on every edge.
    """

    def __init__(
        self,
        config: EngineConfig,
        tasks: Sequence[TaskData],
        cell: CellSpec,
        arch: Optional[ArchParams] = None,
    ):
        if not tasks:
            raise ValueError("Expected at least `1` task.")
        ids = [t.task_id for t in tasks]
        if ids != list(range(1, len(tasks) + 1)):
            raise ValueError(f"Expected task ids to be `1..{len(tasks)}` in order, found `{ids}`.")
        for t in tasks:
            if t.spec.n_features != cell.input_width:
                raise ValueError(
                    f"Expected task `{t.task_id}` to have `{cell.input_width}` features, found `{t.spec.n_features}`."
                )
        self._config = config.resolve([t.n_classes for t in tasks])
        self._tasks = {t.task_id: t for t in tasks}
        self._cell = cell
        arch = ArchParams.zeros(cell) if arch is None else arch.detach()
        arch.check_cell(cell)
        self._arch = arch
        self._warm: Dict[StageId, Tuple[ParamSet, ParamSet]] = {}

        pull = 2.0 * self._config.eta * self._config.lam
        if pull > 1.0 and self.method != Method.MTL and len(tasks) * self.rounds > 1:
            logger.warning(
                f"Proximal pull `2 * eta * lam = {pull:.4g}` exceeds `1`, "
                "the updates overshoot the predecessor's weights and may diverge."
            )

    @property
    @abstractmethod
    def method(self) -> Method:
        pass

    @property
    @abstractmethod
    def rounds(self) -> int:
        """Number of rounds the inner problem unrolls."""

    @abstractmethod
    def _inner(self, tape: Tape, arch: ArchParams, iteration: int, create_graph: bool) -> List[StageTrace]:
        pass

    def _val_weights(self) -> Optional[Dict[int, float]]:
        return None

    @property
    def config(self) -> EngineConfig:
        return self._config

    @property
    def cell(self) -> CellSpec:
        return self._cell

    @property
    def arch(self) -> ArchParams:
        """Initial architecture."""
        return self._arch

    @property
    def task_order(self) -> Tuple[int, ...]:
        assert self._config.task_order is not None
        return self._config.task_order

    @property
    def val_sets(self) -> Dict[int, Dataset]:
        return {k: t.val for k, t in self._tasks.items()}

    def _rng(self, iteration: int, stream: int, round: int, position: int) -> np.random.Generator:
        # keyed by position in the task order, so identical tasks are exchangeable
        return np.random.default_rng([self._config.seed, iteration, stream, round, position])

    def _leaves(self, tape: Tape, iteration: int, stage: StageId, position: int) -> LearnerState:
        if stage in self._warm:
            weights, head = self._warm[stage]
        else:
            task = self._tasks[stage.learner]
            weights = init_encoder(self._cell, self._rng(iteration, _INIT_WEIGHTS, stage.round, position))
            head = init_head(
                self._cell.output_width, task.n_classes, self._rng(iteration, _INIT_HEAD, stage.round, position)
            )
        return LearnerState(tape.watch(weights), tape.watch(head), stage)

    def _batch(self, iteration: int, stage: StageId, position: int) -> Dataset:
        rng = self._rng(iteration, _BATCH, stage.round, position)
        return self._tasks[stage.learner].train.sample_batch(self._config.batch_size, rng)

    def pipeline(self, arch: ArchParams, iteration: int = 0, *, create_graph: bool = True) -> Pipeline:
        """Record the inner problem of outer iteration ``iteration`` at architecture ``arch``.

        Parameters
        ----------
        arch
            Architecture the inner problem is solved at.
        iteration
            Outer iteration, selects the random streams of initialization and minibatches.
        %(create_graph)s

        Returns
        -------
        The tape, the architecture leaves and the stage traces.
        """
        arch.check_cell(self._cell)
        tape = Tape()
        leaves = tape.watch(arch)
        try:
            traces = self._inner(tape, leaves, iteration, create_graph)
        except NonFiniteError as e:
            raise DivergenceError(f"Non-finite value in the inner problem: {e}", iteration=iteration) from e
        return Pipeline(tape, leaves, tuple(traces))

    def objective(
        self,
        arch: ArchParams,
        iteration: int = 0,
        *,
        mode: Optional[HypergradMode] = None,
        with_grad: bool = True,
    ) -> Objective:
        """Evaluate the validation objective of outer iteration ``iteration`` at ``arch``.

        Parameters
        ----------
        arch
            Architecture to evaluate at.
        iteration
            Outer iteration, selects the random streams.
        mode
            Hypergradient mode. If `None`, use the configured one.
        with_grad
            Whether to also compute the gradient with respect to ``arch``.

        Returns
        -------
        The objective value, its gradient and the per-learner validation losses.
        """
        mode = self._config.hypergrad_mode if mode is None else HypergradMode(mode)
        unrolled = with_grad and mode == HypergradMode.UNROLLED
        pipe = self.pipeline(arch, iteration, create_graph=unrolled)
        finals = final_traces(pipe.traces, sorted(self._tasks), self.rounds)
        try:
            value, losses = validation_objective(
                pipe.tape,
                pipe.arch,
                finals,
                self.val_sets,
                self._cell,
                mode=mode if with_grad else HypergradMode.FIRST_ORDER,
                weights=self._val_weights(),
            )
            grads = backward(pipe.tape, value, pipe.arch).dense(pipe.arch) if with_grad else None
        except NonFiniteError as e:
            raise DivergenceError(f"Non-finite validation objective: {e}", iteration=iteration) from e
        return Objective(value.item(), grads, losses)

    def step(self, arch: ArchParams, iteration: int) -> Tuple[ArchUpdate, Tuple[StageTrace, ...]]:
        """One outer iteration: record the inner problem and take an architecture step."""
        unrolled = self._config.hypergrad_mode == HypergradMode.UNROLLED
        pipe = self.pipeline(arch, iteration, create_graph=unrolled)
        update = arch_update(
            pipe.tape,
            pipe.arch,
            pipe.traces,
            self.val_sets,
            self._cell,
            rounds=self.rounds,
            eta_arch=self._config.eta_arch,
            mode=self._config.hypergrad_mode,
            weights=self._val_weights(),
        )
        return update, pipe.traces

    def _record(self, iteration: int, update: ArchUpdate, traces: Sequence[StageTrace]) -> IterationRecord:
        stages = tuple(
            StageRecord(
                iteration=iteration,
                stage=t.position + 1,
                learner=t.stage.learner,
                round=t.stage.round,
                train_loss=t.train_loss,
                val_loss=update.val_losses[t.stage.learner],
                proximal=t.proximal,
            )
            for t in traces
        )
        alpha = {k: tuple(float(x) for x in v.data) for k, v in update.arch.items()}
        return IterationRecord(
            iteration=iteration,
            stages=stages,
            val_losses=dict(update.val_losses),
            objective=update.objective,
            arch_grad_norm=update.grad_norm,
            alpha=alpha,
        )

    def _remember(self, traces: Sequence[StageTrace]) -> None:
        for t in traces:
            head = t.state.head if t.updated_head is None else t.updated_head
            self._warm[t.stage] = (t.updated.detach(), head.detach())

    def run(self) -> RunReport:
        """Run :attr:`EngineConfig.outer_iters` outer iterations.

        Returns
        -------
        :class:`interleave.engine.RunReport` with one record per outer iteration.

        Raises
        ------
        DivergenceError
            If a loss or gradient becomes non-finite.
        """
        start = perf_counter()
        self._warm.clear()
        arch, records, stopped = self._arch, [], False
        initial: Optional[Dict[int, float]] = None
        schedule = self.schedule()
        logger.info(f"Running `{self.method}` for `{self._config.outer_iters}` iterations, schedule `{schedule}`.")
        for it in range(self._config.outer_iters):
            try:
                update, traces = self.step(arch, it)
            except DivergenceError as e:
                e.iteration = it
                raise
            if initial is None:
                initial = dict(update.val_losses)
            records.append(self._record(it, update, traces))
            if self._config.warm_start:
                self._remember(traces)
            arch = update.arch
            logger.info(
                f"Iteration `{it}`: validation objective `{update.objective:.6f}`, "
                f"architecture gradient norm `{update.grad_norm:.3e}`."
            )
            if update.grad_norm < self._config.grad_tol:
                logger.info(f"Stopping early, gradient norm `{update.grad_norm:.3e}` < `{self._config.grad_tol}`.")
                stopped = True
                break

        final = self.objective(arch, len(records), with_grad=False).val_losses
        wall_time = perf_counter() - start
        logger.info(f"Finished `{self.method}` in `{wall_time:.2f}s`.")
        return RunReport(
            method=self.method,
            config=self._config,
            schedule=schedule,
            initial_val_losses=final if initial is None else initial,
            iterations=tuple(records),
            final_val_losses=final,
            cell=self._cell,
            arch=arch,
            discretized=discretize(arch, self._cell),
            stopped_early=stopped,
            wall_time=wall_time,
        )

    @abstractmethod
    def schedule(self) -> str:
        """Stage order rendered as ``m.k`` tokens."""

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}[n_learners={len(self._tasks)}, rounds={self.rounds}]"


class InterleavedRunner(BaseRunner):
    """Learners take turns, one stage per learner and round, each stage pulled towards its predecessor."""

    policy = SchedulePolicy.INTERLEAVED

    @property
    def method(self) -> Method:
        return Method.IL

    @property
    def rounds(self) -> int:
        return self._config.rounds

    def _schedule(self) -> Schedule:
        return build_schedule(self.policy, len(self._tasks), self._config.rounds, self.task_order)

    def schedule(self) -> str:
        return self._schedule().render()

    def _inner(self, tape: Tape, arch: ArchParams, iteration: int, create_graph: bool) -> List[StageTrace]:
        cfg = self._config
        sched = self._schedule()
        traces: Dict[StageId, StageTrace] = {}
        for i, stage in enumerate(sched):
            position = self.task_order.index(stage.learner)
            ls = self._leaves(tape, iteration, stage, position)
            batch = self._batch(iteration, stage, position)
            start = len(tape)
            prev_stage = predecessor(stage, sched)
            prev = None if prev_stage is None else traces[prev_stage]
            proximal = None
            if prev is None:
                update = stage_update_first(
                    ls, arch, batch, self._cell, tape=tape, eta=cfg.eta, create_graph=create_graph
                )
            else:
                with tape:
                    proximal = proximal_term(ls.weights, prev.updated).item()
                update = stage_update(
                    ls,
                    arch,
                    prev.updated,
                    batch,
                    self._cell,
                    tape=tape,
                    lam=cfg.lam,
                    eta=cfg.eta,
                    create_graph=create_graph,
                )
            head = None
            if stage.round == cfg.rounds:
                head = head_update(
                    ls,
                    arch,
                    batch,
                    self._cell,
                    tape=tape,
                    eta=cfg.eta,
                    rounds=cfg.rounds,
                    create_graph=create_graph,
                    loss=update.loss,
                )
            trace = StageTrace(
                stage=stage,
                position=i,
                state=ls,
                update=update,
                head_update=head,
                reference=None if prev is None else prev.updated,
                predecessor=prev,
                nodes=(start, len(tape)),
                train_loss=update.loss.item(),
                proximal=proximal,
            )
            logger.debug(f"Stage `{stage}`: training loss `{trace.train_loss:.6f}`, nodes `{trace.nodes}`.")
            traces[stage] = trace
        return list(traces.values())


class BlockedRunner(InterleavedRunner):
    """All rounds of a learner run before the next learner starts, chained by the same proximal pull."""

    policy = SchedulePolicy.BLOCKED

    @property
    def method(self) -> Method:
        return Method.BLOCKED


class MultiTaskRunner(BaseRunner):
    """Every learner takes a single step on its share of the jointly weighted training loss."""

    @property
    def method(self) -> Method:
        return Method.MTL

    @property
    def rounds(self) -> int:
        return 1

    def schedule(self) -> str:
        return " ".join(f"1.{k}" for k in self.task_order)

    def _val_weights(self) -> Optional[Dict[int, float]]:
        w = self._config.task_weights("val")
        return {k: w[k - 1] for k in self._tasks}

    def _inner(self, tape: Tape, arch: ArchParams, iteration: int, create_graph: bool) -> List[StageTrace]:
        cfg = self._config
        weights = self._config.task_weights("train")
        traces = []
        for position, k in enumerate(self.task_order):
            stage = StageId(1, k)
            ls = self._leaves(tape, iteration, stage, position)
            batch = self._batch(iteration, stage, position)
            start = len(tape)
            with tape:
                loss = task_loss(self._cell, arch, ls.weights, ls.head, batch)
                # only this learner's term of the joint loss depends on its weights
                weighted = scale(loss, weights[k - 1])
            update = stage_update_first(
                ls, arch, batch, self._cell, tape=tape, eta=cfg.eta, create_graph=create_graph, loss=weighted
            )
            head = head_update(
                ls, arch, batch, self._cell, tape=tape, eta=cfg.eta, rounds=1, create_graph=create_graph, loss=weighted
            )
            traces.append(
                StageTrace(
                    stage=stage,
                    position=position,
                    state=ls,
                    update=update,
                    head_update=head,
                    reference=None,
                    predecessor=None,
                    nodes=(start, len(tape)),
                    train_loss=loss.item(),
                )
            )
            logger.debug(f"Learner `{k}`: training loss `{loss.item():.6f}`, weight `{weights[k - 1]}`.")
        return traces


_RUNNERS = {Method.IL: InterleavedRunner, Method.BLOCKED: BlockedRunner, Method.MTL: MultiTaskRunner}


def make_runner(
    method: Method, config: EngineConfig, tasks: Sequence[TaskData], cell: CellSpec, arch: Optional[ArchParams] = None
) -> BaseRunner:
    """Instantiate the runner of ``method``."""
    return _RUNNERS[Method(method)](config, tasks, cell, arch=arch)


@d.dedent
def run_il(
    config: EngineConfig, tasks: Sequence[TaskData], cell: CellSpec, arch: Optional[ArchParams] = None
) -> RunReport:
    """Search an architecture with interleaved learners.

    Parameters
    ----------
    %(config)s
    %(tasks)s
    %(cell)s
    arch
        Initial architecture. If `None`, use a uniform mixture on every edge.

    Returns
    -------
    :class:`interleave.engine.RunReport` of the run.
    """
    return InterleavedRunner(config, tasks, cell, arch=arch).run()


@d.dedent
def run_blocked(
    config: EngineConfig, tasks: Sequence[TaskData], cell: CellSpec, arch: Optional[ArchParams] = None
) -> RunReport:
    """Search an architecture with learners trained one after the other.

    Parameters
    ----------
    %(config)s
    %(tasks)s
    %(cell)s
    arch
        Initial architecture. If `None`, use a uniform mixture on every edge.

    Returns
    -------
    :class:`interleave.engine.RunReport` of the run.
    """
    return BlockedRunner(config, tasks, cell, arch=arch).run()


@d.dedent
def run_mtl(
    config: EngineConfig, tasks: Sequence[TaskData], cell: CellSpec, arch: Optional[ArchParams] = None
) -> RunReport:
    """Search an architecture with jointly trained learners.

    Parameters
    ----------
    %(config)s
    %(tasks)s
    %(cell)s
    arch
        Initial architecture. If `None`, use a uniform mixture on every edge.

    Returns
    -------
    :class:`interleave.engine.RunReport` of the run.
    """
    return MultiTaskRunner(config, tasks, cell, arch=arch).run()
