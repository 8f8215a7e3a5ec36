from typing import List

from pytest_mock import MockerFixture
import pytest

import numpy as np

from interleave.data import TaskData
from interleave.engine import EngineConfig, InterleavedRunner
from interleave.verify import ReplayError, CheckReport, _check, gradient_check, relative_error, hypergrad_check
from interleave.autodiff import ParamSet, mul, tanh, total, matmul, constant
from interleave.supernet import CellSpec, task_loss, init_head, init_encoder
from tests._utils import GRAD_TOL, HYPERGRAD_TOL


class TestRelativeError:
    @pytest.mark.fast()
    def test_values(self):
        res = relative_error(np.array([1.0, 0.0, 2.0]), np.array([1.0, 0.0, 1.0]))

        np.testing.assert_allclose(res, [0.0, 0.0, 1 / 3])

    @pytest.mark.fast()
    def test_floor(self):
        assert relative_error(np.array([1e-9]), np.array([0.0]), floor=1e-6)[0] == pytest.approx(1e-3)

    @pytest.mark.fast()
    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="identical shape"):
            relative_error(np.zeros(2), np.zeros(3))


class TestCheckReport:
    @pytest.mark.fast()
    def test_passed(self):
        report = CheckReport(max_error={"a": 1e-5, "b": 2e-4}, mean_error={"a": 1e-6, "b": 1e-5}, tolerance=1e-4)

        assert report.worst == 2e-4
        assert not report.passed
        assert CheckReport(max_error={}, mean_error={}, tolerance=0.0).passed

    @pytest.mark.fast()
    def test_to_text(self):
        report = CheckReport(
            max_error={"b": 1e-5, "a": 0.0}, mean_error={"b": 1e-6, "a": 0.0}, tolerance=1e-4, eps=1e-5
        )
        text = report.to_text()

        assert text.startswith("kind: gradient\npassed: true\n")
        assert text.index("  a:") < text.index("  b:")
        assert "max_relative_error: 1.0e-05" in text

    @pytest.mark.fast()
    def test_invalid(self):
        with pytest.raises(ValueError, match="same parameters"):
            CheckReport(max_error={"a": 0.0}, mean_error={}, tolerance=1.0)
        with pytest.raises(ValueError, match="non-negative"):
            CheckReport(max_error={"a": -1.0}, mean_error={"a": 0.0}, tolerance=1.0)


class TestGradientCheck:
    @pytest.mark.fast()
    def test_passes(self, rng: np.random.Generator):
        x = constant(rng.normal(size=(5, 3)))
        report = gradient_check(lambda p: total(tanh(matmul(x, p["w"]))), ParamSet({"w": rng.normal(size=(3, 2))}))

        assert report.passed, report.to_text()
        assert report.eps == 1e-5

    @pytest.mark.fast()
    def test_detects_wrong_gradient(self, rng: np.random.Generator):
        params = ParamSet({"w": rng.normal(size=(3,))})

        # the second factor is a constant, so reverse mode misses half of the gradient
        report = gradient_check(lambda p: total(mul(p["w"], constant(p["w"].data))), params)

        assert not report.passed
        assert report.worst == pytest.approx(1 / 3)

    @pytest.mark.fast()
    @pytest.mark.parametrize("seed", range(3))
    def test_supernet_loss(self, seed: int, cell: CellSpec, tasks: List[TaskData], random_arch):
        rng = np.random.default_rng(seed)
        weights = init_encoder(cell, rng)
        head = init_head(cell.output_width, tasks[1].n_classes, rng)
        names = list(weights)

        def loss(p: ParamSet):
            w = ParamSet({k: p[k] for k in names})
            h = ParamSet({k: p[k] for k in p if k not in names})
            return task_loss(cell, random_arch, w, h, tasks[1].train)

        report = gradient_check(loss, ParamSet({**weights, **head}), tol=GRAD_TOL)
        assert report.passed, report.to_text()


class TestHypergradCheck:
    @pytest.mark.fast()
    def test_replay_error(self, mocker, tasks: List[TaskData], cell: CellSpec, config: EngineConfig):
        original = InterleavedRunner.objective
        shifts = iter([0, 1])

        def shifted(runner, arch, iteration=0, **kwargs):
            return original(runner, arch, iteration + next(shifts), **kwargs)

        mocker.patch.object(InterleavedRunner, "objective", autospec=True, side_effect=shifted)
        with pytest.raises(ReplayError, match="not replayable"):
            hypergrad_check(config, tasks, cell)

    @pytest.mark.fast()
    def test_default_floor(self, mocker: MockerFixture, tasks: List[TaskData], cell: CellSpec, config: EngineConfig):
        spy = mocker.spy(_check, "compare_gradients")
        report = hypergrad_check(config, tasks, cell, tol=HYPERGRAD_TOL)

        assert spy.call_args.kwargs["floor"] == 1e-8
        assert report.passed, report.to_text()
