from pydantic import ValidationError
import pytest

from interleave.engine import EngineConfig, HypergradMode


class TestEngineConfig:
    @pytest.mark.fast()
    def test_defaults(self):
        cfg = EngineConfig()

        assert cfg.lam == 100.0
        assert cfg.eta == 0.004
        assert cfg.eta_arch == 0.5
        assert cfg.rounds == 2
        assert cfg.outer_iters == 50
        assert cfg.batch_size == 64
        assert cfg.hypergrad_mode == HypergradMode.UNROLLED
        assert not cfg.warm_start
        assert 2 * cfg.eta * cfg.lam < 1

    @pytest.mark.fast()
    def test_mode_from_string(self):
        assert EngineConfig(hypergrad_mode="first_order").hypergrad_mode == HypergradMode.FIRST_ORDER

    @pytest.mark.fast()
    @pytest.mark.parametrize(
        "kwargs",
        [{"lam": -1.0}, {"eta": 0.0}, {"rounds": 0}, {"batch_size": 0}, {"outer_iters": -1}, {"foo": 1}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            EngineConfig(**kwargs)

    @pytest.mark.fast()
    def test_invalid_mode(self):
        with pytest.raises(ValidationError, match="Invalid option"):
            EngineConfig(hypergrad_mode="second_order")

    @pytest.mark.fast()
    def test_invalid_order(self):
        with pytest.raises(ValidationError, match="permutation"):
            EngineConfig(task_order=(1, 1))

    @pytest.mark.fast()
    def test_negative_weights(self):
        with pytest.raises(ValidationError, match="non-negative"):
            EngineConfig(mtl_train_weights=(1.0, -1.0))

    @pytest.mark.fast()
    def test_frozen(self):
        with pytest.raises(ValidationError):
            EngineConfig().lam = 1.0


class TestResolve:
    @pytest.mark.fast()
    def test_class_count_descending(self):
        cfg = EngineConfig().resolve([2, 5, 3])

        assert cfg.n_learners == 3
        assert cfg.task_order == (2, 3, 1)

    @pytest.mark.fast()
    def test_ties_keep_index_order(self):
        assert EngineConfig().resolve([3, 5, 3]).task_order == (2, 1, 3)

    @pytest.mark.fast()
    def test_explicit_order(self):
        assert EngineConfig(task_order=(1, 2)).resolve([2, 5]).task_order == (1, 2)

    @pytest.mark.fast()
    def test_wrong_order_length(self):
        with pytest.raises(ValueError, match="permutation"):
            EngineConfig(task_order=(1, 2)).resolve([2, 5, 3])

    @pytest.mark.fast()
    def test_learner_mismatch(self):
        with pytest.raises(ValueError, match="Expected `3` tasks"):
            EngineConfig(n_learners=3).resolve([2, 5])


class TestTaskWeights:
    @pytest.mark.fast()
    def test_leading_task_has_unit_weight(self):
        cfg = EngineConfig(mtl_alpha=0.5, mtl_beta=0.25).resolve([2, 5, 3])

        assert cfg.task_weights("train") == (0.25, 1.0, 0.25)
        assert cfg.task_weights("val") == (0.5, 1.0, 0.5)

    @pytest.mark.fast()
    def test_explicit(self):
        cfg = EngineConfig(mtl_train_weights=(0.1, 0.9)).resolve([2, 5])

        assert cfg.task_weights("train") == (0.1, 0.9)
        assert cfg.task_weights("val") == (1.0, 1.0)

    @pytest.mark.fast()
    def test_explicit_wrong_length(self):
        cfg = EngineConfig(mtl_val_weights=(1.0,)).resolve([2, 5])

        with pytest.raises(ValueError, match="`2` val weights"):
            cfg.task_weights("val")

    @pytest.mark.fast()
    def test_unresolved(self):
        with pytest.raises(RuntimeError, match="resolve"):
            EngineConfig().task_weights("train")

    @pytest.mark.fast()
    def test_invalid_kind(self):
        with pytest.raises(ValueError, match="Invalid option"):
            EngineConfig().resolve([2]).task_weights("test")
