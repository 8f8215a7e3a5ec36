import pytest

import numpy as np

from interleave.data import Split, Dataset, TaskData, TaskSpec


class TestDataset:
    @pytest.mark.fast()
    def test_read_only(self):
        ds = Dataset(np.zeros((3, 2)), np.array([0, 1, 0]))

        assert ds.features.dtype == np.float64
        assert ds.labels.dtype == np.int64
        with pytest.raises(ValueError, match="read-only"):
            ds.features[0, 0] = 1.0

    @pytest.mark.fast()
    def test_label_shape(self):
        with pytest.raises(ValueError, match="labels to have shape"):
            Dataset(np.zeros((3, 2)), np.array([0, 1]))

    @pytest.mark.fast()
    def test_float_labels(self):
        with pytest.raises(TypeError, match="integers"):
            Dataset(np.zeros((2, 2)), np.array([0.0, 1.0]))

    @pytest.mark.fast()
    def test_non_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            Dataset(np.array([[np.nan, 1.0]]), np.array([0]))

    @pytest.mark.fast()
    def test_sample_batch(self, rng: np.random.Generator):
        ds = Dataset(np.arange(20.0).reshape(10, 2), np.arange(10) % 2)
        batch = ds.sample_batch(4, rng)

        assert batch.n_samples == 4
        assert len(set(batch.features[:, 0])) == 4
        assert ds.sample_batch(50, rng) is ds

    @pytest.mark.fast()
    def test_sample_batch_seeded(self):
        ds = Dataset(np.arange(40.0).reshape(20, 2), np.arange(20) % 2)
        a = ds.sample_batch(5, np.random.default_rng([1, 2]))
        b = ds.sample_batch(5, np.random.default_rng([1, 2]))

        np.testing.assert_array_equal(a.features, b.features)

    @pytest.mark.fast()
    def test_sample_empty(self, rng: np.random.Generator):
        with pytest.raises(ValueError, match="empty `val` split"):
            Dataset(np.zeros((0, 2)), np.zeros(0, dtype=np.int64), Split.VAL).sample_batch(2, rng)

    @pytest.mark.fast()
    def test_concat(self):
        a = Dataset(np.zeros((2, 2)), np.array([0, 1]))
        b = Dataset(np.ones((3, 2)), np.array([1, 1, 0]), Split.VAL)
        c = Dataset.concat([a, b])

        assert c.n_samples == 5
        assert c.split == Split.TRAIN
        np.testing.assert_array_equal(c.labels, [0, 1, 1, 1, 0])


class TestTaskData:
    def _ds(self, n: int, d: int = 2, c: int = 2, split: Split = Split.TRAIN) -> Dataset:
        return Dataset(np.zeros((n, d)), np.arange(n) % c, split)

    @pytest.mark.fast()
    def test_spec(self):
        with pytest.raises(ValueError, match="at least `2` classes"):
            TaskSpec(task_id=1, n_classes=1, n_features=2)
        with pytest.raises(ValueError, match="positive"):
            TaskSpec(task_id=0, n_classes=2, n_features=2)

    @pytest.mark.fast()
    def test_feature_mismatch(self):
        spec = TaskSpec(1, 2, 3)
        with pytest.raises(ValueError, match="`3` features"):
            TaskData(spec, self._ds(4), self._ds(2, split=Split.VAL), self._ds(2, split=Split.TEST))

    @pytest.mark.fast()
    def test_label_range(self):
        spec = TaskSpec(1, 2, 2)
        with pytest.raises(ValueError, match=r"in `\[0, 2\)`"):
            TaskData(spec, self._ds(4, c=3), self._ds(2), self._ds(2))

    @pytest.mark.fast()
    def test_empty_validation(self):
        spec = TaskSpec(1, 2, 2)
        with pytest.raises(ValueError, match="non-empty train and validation"):
            TaskData(spec, self._ds(4), self._ds(0), self._ds(2))

    @pytest.mark.fast()
    def test_split(self):
        task = TaskData(TaskSpec(2, 2, 2, name="b"), self._ds(4), self._ds(3), self._ds(1))

        assert task.task_id == 2
        assert task.sizes == (4, 3, 1)
        assert task.split("val") is task.val
