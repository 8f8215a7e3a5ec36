from typing import List
from functools import reduce

import pytest

import numpy as np

from interleave.data import TaskData
from interleave.engine import EngineConfig, HypergradMode, InterleavedRunner, run_il, arch_update, final_traces
from interleave.verify import hypergrad_check
from interleave.autodiff import Tape, ParamSet, add, backward
from interleave.supernet import OpKind, CellSpec, ArchParams, task_loss
from interleave._constants._constants import Method
from tests._utils import HYPERGRAD_TOL, make_tasks


class TestUnrolledHypergradient:
    @pytest.mark.fast()
    @pytest.mark.parametrize("n_classes", [(3,), (2, 3)])
    @pytest.mark.parametrize("rounds", [1, 2])
    @pytest.mark.parametrize(("lam", "eta"), [(0.0, 0.05), (100.0, 0.004)])
    def test_against_finite_differences(
        self, n_classes: tuple, rounds: int, lam: float, eta: float, cell: CellSpec, config: EngineConfig
    ):
        cfg = config.model_copy(update={"lam": lam, "eta": eta, "rounds": rounds})
        report = hypergrad_check(cfg, make_tasks(n_classes=n_classes), cell, eps=1e-4, tol=HYPERGRAD_TOL)

        assert report.kind == "hypergradient"
        assert report.passed, report.to_text()

    @pytest.mark.fast()
    def test_random_architecture(self, tasks: List[TaskData], cell: CellSpec, config: EngineConfig, random_arch):
        report = hypergrad_check(config, tasks, cell, arch=random_arch, iteration=3, tol=HYPERGRAD_TOL)

        assert report.passed, report.to_text()

    @pytest.mark.fast()
    @pytest.mark.parametrize("method", [Method.BLOCKED, Method.MTL])
    def test_baselines(self, method: Method, tasks: List[TaskData], cell: CellSpec, config: EngineConfig):
        report = hypergrad_check(config, tasks, cell, method=method, tol=HYPERGRAD_TOL)

        assert report.passed, report.to_text()

    @pytest.mark.fast()
    def test_covers_every_edge(self, tasks: List[TaskData], cell: CellSpec, config: EngineConfig):
        report = hypergrad_check(config, tasks, cell)

        assert sorted(report.max_error) == sorted(e.key for e in cell.edges)


class TestObjective:
    @pytest.mark.fast()
    def test_modes_share_value(self, tasks: List[TaskData], cell: CellSpec, config: EngineConfig, random_arch):
        runner = InterleavedRunner(config, tasks, cell)
        unrolled = runner.objective(random_arch, mode=HypergradMode.UNROLLED)
        first = runner.objective(random_arch, mode=HypergradMode.FIRST_ORDER)

        assert unrolled.value == first.value
        assert unrolled.val_losses == first.val_losses
        assert not np.allclose(unrolled.grads.flatten(), first.grads.flatten())

    @pytest.mark.fast()
    def test_without_grad(self, tasks: List[TaskData], cell: CellSpec, config: EngineConfig):
        runner = InterleavedRunner(config, tasks, cell)
        res = runner.objective(runner.arch, with_grad=False)

        assert res.grads is None
        assert res.value == pytest.approx(sum(res.val_losses.values()))

    @pytest.mark.fast()
    def test_edge_gradients_sum_to_zero(self, tasks: List[TaskData], cell: CellSpec, config: EngineConfig):
        runner = InterleavedRunner(config, tasks, cell)
        res = runner.objective(runner.arch)

        # softmax is shift invariant, so the gradient of every edge sums to zero
        for v in res.grads.values():
            assert abs(v.data.sum()) < 1e-10

    @pytest.mark.fast()
    def test_replayable(self, tasks: List[TaskData], cell: CellSpec, config: EngineConfig, random_arch):
        runner = InterleavedRunner(config, tasks, cell)
        a = runner.objective(random_arch, 1)
        b = runner.objective(random_arch, 1)
        c = runner.objective(random_arch, 2)

        assert a.value == b.value
        assert a.grads.flatten().tobytes() == b.grads.flatten().tobytes()
        assert a.value != c.value


class TestArchUpdate:
    @pytest.mark.fast()
    def test_step(self, tasks: List[TaskData], cell: CellSpec, config: EngineConfig):
        runner = InterleavedRunner(config, tasks, cell)
        pipe = runner.pipeline(runner.arch)
        update = arch_update(
            pipe.tape, pipe.arch, pipe.traces, runner.val_sets, cell, rounds=config.rounds, eta_arch=0.5
        )

        np.testing.assert_allclose(
            update.arch.flatten(), runner.arch.flatten() - 0.5 * update.grads.flatten(), rtol=0, atol=1e-15
        )
        assert update.grad_norm == pytest.approx(np.linalg.norm(update.grads.flatten()))
        assert all(v.is_constant for v in update.arch.values())
        assert isinstance(update.arch, ArchParams)

    @pytest.fixture()
    def zero_arch(self, cell: CellSpec) -> ArchParams:
        # saturated softmax on `zero`, every other operation gets an exact `0` weight
        return ArchParams({e.key: [1e6 if op == OpKind.ZERO else -1e6 for op in e.ops] for e in cell.edges})

    @pytest.mark.fast()
    def test_loss_independent_of_arch(
        self, zero_arch: ArchParams, tasks: List[TaskData], cell: CellSpec, config: EngineConfig
    ):
        runner = InterleavedRunner(config, tasks, cell, arch=zero_arch)
        pipe = runner.pipeline(runner.arch)
        update = arch_update(
            pipe.tape, pipe.arch, pipe.traces, runner.val_sets, cell, rounds=config.rounds, eta_arch=0.5
        )

        assert update.grad_norm == 0.0
        np.testing.assert_array_equal(update.arch.flatten(), zero_arch.flatten())

    @pytest.mark.fast()
    def test_loss_independent_of_arch_stops(
        self, zero_arch: ArchParams, tasks: List[TaskData], cell: CellSpec, config: EngineConfig
    ):
        report = run_il(config.model_copy(update={"outer_iters": 5}), tasks, cell, arch=zero_arch)

        assert report.stopped_early
        assert report.n_iterations == 1
        np.testing.assert_array_equal(report.arch.flatten(), zero_arch.flatten())

    @pytest.mark.fast()
    def test_first_order_matches_detached_objective(
        self, tasks: List[TaskData], cell: CellSpec, config: EngineConfig, random_arch: ArchParams
    ):
        runner = InterleavedRunner(config, tasks, cell)
        pipe = runner.pipeline(random_arch, create_graph=False)
        update = arch_update(
            pipe.tape,
            pipe.arch,
            pipe.traces,
            runner.val_sets,
            cell,
            rounds=config.rounds,
            eta_arch=0.5,
            mode=HypergradMode.FIRST_ORDER,
        )

        # second pass on a fresh tape, the updated weights and heads enter as plain arrays
        finals = final_traces(pipe.traces, [1, 2], config.rounds)
        with Tape() as tape:
            leaves = tape.watch(random_arch)
            losses = [
                task_loss(
                    cell,
                    leaves,
                    ParamSet(t.updated.to_numpy()),
                    ParamSet(t.updated_head.to_numpy()),
                    runner.val_sets[k],
                )
                for k, t in finals.items()
            ]
            objective = reduce(add, losses)
        expected = backward(tape, objective, leaves).dense(leaves)

        assert update.objective == pytest.approx(objective.item(), rel=1e-14)
        np.testing.assert_allclose(update.grads.flatten(), expected.flatten(), rtol=0, atol=1e-12)


class TestFinalTraces:
    @pytest.fixture()
    def traces(self, tasks: List[TaskData], cell: CellSpec, config: EngineConfig):
        runner = InterleavedRunner(config, tasks, cell)
        return runner.pipeline(runner.arch).traces

    @pytest.mark.fast()
    def test_final_round(self, traces):
        finals = final_traces(traces, [1, 2], 2)

        assert {k: str(t.stage) for k, t in finals.items()} == {1: "2.1", 2: "2.2"}

    @pytest.mark.fast()
    def test_wrong_length(self, traces):
        with pytest.raises(ValueError, match="`6` stages"):
            final_traces(traces, [1, 2], 3)

    @pytest.mark.fast()
    def test_missing_stage(self, traces):
        with pytest.raises(ValueError, match="missing stage `1.3`"):
            final_traces(traces, [1, 3], 2)

    @pytest.mark.fast()
    def test_missing_head(self, traces):
        with pytest.raises(ValueError, match="missing the head update"):
            final_traces(traces[:2], [1, 2], 1)
