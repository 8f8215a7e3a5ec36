from enum import unique
from typing import Tuple, Optional, Sequence
from dataclasses import dataclass

import numpy as np

from interleave._types import IntArray, ArrayLike
from interleave._constants._enum import ModeEnum

__all__ = ["Split", "TaskSpec", "Dataset", "TaskData"]


@unique
class Split(ModeEnum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass(frozen=True)
class TaskSpec:
    """Description of a classification task."""

    #: 1-based task index
    task_id: int
    #: number of classes
    n_classes: int
    #: input dimension
    n_features: int
    #: human readable name
    name: Optional[str] = None

    def __post_init__(self) -> None:
        if self.task_id < 1:
            raise ValueError(f"Expected `task_id` to be positive, found `{self.task_id}`.")
        if self.n_classes < 2:
            raise ValueError(f"Expected at least `2` classes, found `{self.n_classes}`.")
        if self.n_features < 1:
            raise ValueError(f"Expected at least `1` feature, found `{self.n_features}`.")


@dataclass(frozen=True, repr=False)
class Dataset:
    """Labelled samples of a single split."""

    #: features of shape ``[n, d]``
    features: ArrayLike
    #: integer labels of shape ``[n]``
    labels: IntArray
    #: which split the samples belong to
    split: Split = Split.TRAIN

    def __post_init__(self) -> None:
        x = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels)
        if x.ndim != 2:
            raise ValueError(f"Expected features to be 2-dimensional, found `{x.ndim}` dimensions.")
        if y.shape != (x.shape[0],):
            raise ValueError(f"Expected labels to have shape `{(x.shape[0],)}`, found `{y.shape}`.")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            raise TypeError(f"Expected labels to be integers, found `{y.dtype}`.")
        if not np.all(np.isfinite(x)):
            raise ValueError("Features contain non-finite values.")
        y = y.astype(np.int64)
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "split", Split(self.split))

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def __len__(self) -> int:
        return self.n_samples

    def take(self, idx: Sequence[int]) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.split)

    def sample_batch(self, batch_size: int, rng: np.random.Generator) -> "Dataset":
        """Draw ``batch_size`` samples without replacement, or all samples if there are fewer."""
        if self.n_samples == 0:
            raise ValueError(f"Unable to sample from an empty `{self.split}` split.")
        if batch_size >= self.n_samples:
            return self
        return self.take(rng.choice(self.n_samples, size=batch_size, replace=False))

    @classmethod
    def concat(cls, datasets: Sequence["Dataset"], split: Split = Split.TRAIN) -> "Dataset":
        return cls(
            np.concatenate([d.features for d in datasets], axis=0),
            np.concatenate([d.labels for d in datasets], axis=0),
            split,
        )

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}[split={self.split!s}, n={self.n_samples}, d={self.n_features}]"


@dataclass(frozen=True, repr=True)
class TaskData:
    """A task together with its splits."""

    spec: TaskSpec
    train: Dataset
    val: Dataset
    test: Dataset

    def __post_init__(self) -> None:
        for ds in (self.train, self.val, self.test):
            if ds.n_samples and ds.n_features != self.spec.n_features:
                raise ValueError(
                    f"Expected `{ds.split}` split of task `{self.spec.task_id}` to have "
                    f"`{self.spec.n_features}` features, found `{ds.n_features}`."
                )
            if ds.n_samples and (ds.labels.min() < 0 or ds.labels.max() >= self.spec.n_classes):
                raise ValueError(
                    f"Expected labels of task `{self.spec.task_id}` to be in `[0, {self.spec.n_classes})`, "
                    f"found `[{ds.labels.min()}, {ds.labels.max()}]`."
                )
        if self.train.n_samples == 0 or self.val.n_samples == 0:
            raise ValueError(f"Task `{self.spec.task_id}` needs non-empty train and validation splits.")

    @property
    def task_id(self) -> int:
        return self.spec.task_id

    @property
    def n_classes(self) -> int:
        return self.spec.n_classes

    def split(self, which: Split) -> Dataset:
        return {Split.TRAIN: self.train, Split.VAL: self.val, Split.TEST: self.test}[Split(which)]

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return self.train.n_samples, self.val.n_samples, self.test.n_samples
