from typing import List, Tuple
from dataclasses import dataclass

from pydantic import Field, BaseModel, ConfigDict, model_validator

import numpy as np

from interleave._types import ArrayLike
from interleave.data._dataset import Split, Dataset, TaskData, TaskSpec

__all__ = ["SyntheticFamilyConfig", "GroundTruth", "gen_synthetic_family", "ground_truth"]


class SyntheticFamilyConfig(BaseModel):
    """Family of related classification tasks sharing a ground-truth encoder."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_features: int = Field(default=16, gt=0)
    hidden: int = Field(default=16, gt=0)
    relatedness: float = Field(default=0.8, ge=0.0, le=1.0)
    label_noise: float = Field(default=0.05, ge=0.0, lt=0.5)
    n_classes: Tuple[int, ...] = (2, 5)
    n_train: int = Field(default=512, gt=0)
    n_val: int = Field(default=256, gt=0)
    n_test: int = Field(default=256, gt=0)
    seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _check_classes(self) -> "SyntheticFamilyConfig":
        if not self.n_classes:
            raise ValueError("Expected at least `1` task.")
        if any(c < 2 for c in self.n_classes):
            raise ValueError(f"Expected every task to have at least `2` classes, found `{self.n_classes}`.")
        return self

    @property
    def n_tasks(self) -> int:
        return len(self.n_classes)


@dataclass(frozen=True)
class GroundTruth:
    """Ground-truth encoders of a family, for inspection."""

    #: shared encoder of shape ``[d, h]``
    shared: ArrayLike
    #: independent per-task encoders before mixing
    private: Tuple[ArrayLike, ...]
    #: mixed per-task encoders
    encoders: Tuple[ArrayLike, ...]
    #: per-task linear heads of shape ``[h, C_k]``
    heads: Tuple[ArrayLike, ...]


def _draw_ground_truth(cfg: SyntheticFamilyConfig) -> Tuple[GroundTruth, List[np.random.Generator]]:
    # one stream for the shared encoder, one per task
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_tasks + 1)
    rngs = [np.random.default_rng(s) for s in children]
    scale = 1.0 / np.sqrt(cfg.n_features)
    shared = rngs[0].normal(scale=scale, size=(cfg.n_features, cfg.hidden))
    private = tuple(rng.normal(scale=scale, size=(cfg.n_features, cfg.hidden)) for rng in rngs[1:])
    rho = cfg.relatedness
    if rho == 1.0:
        encoders = tuple(shared.copy() for _ in private)
    else:
        encoders = tuple(rho * shared + (1.0 - rho) * p for p in private)
    heads = tuple(
        rng.normal(scale=1.0 / np.sqrt(cfg.hidden), size=(cfg.hidden, c)) for rng, c in zip(rngs[1:], cfg.n_classes)
    )
    return GroundTruth(shared=shared, private=private, encoders=encoders, heads=heads), rngs[1:]


def ground_truth(cfg: SyntheticFamilyConfig) -> GroundTruth:
    """Draw the shared and per-task ground-truth encoders and heads of ``cfg``."""
    return _draw_ground_truth(cfg)[0]


def gen_synthetic_family(cfg: SyntheticFamilyConfig) -> List[TaskData]:
    """Generate the tasks of a synthetic family.

    Task ``k`` labels standard normal features with ``argmax(tanh(x @ G_k) @ V_k)``, where ``G_k`` mixes the shared
    encoder with a private one according to :attr:`SyntheticFamilyConfig.relatedness` and ``V_k`` is a random linear
    head. Each label is replaced by a uniformly drawn different class with probability
    :attr:`SyntheticFamilyConfig.label_noise`.

    Parameters
    ----------
    cfg
        Family configuration.

    Returns
    -------
    One :class:`interleave.data.TaskData` per entry of :attr:`SyntheticFamilyConfig.n_classes`, with disjoint
    train, validation and test splits taken in that order from a single draw.
    """
    # task streams continue after the private encoder and head draws
    truth, rngs = _draw_ground_truth(cfg)
    n = cfg.n_train + cfg.n_val + cfg.n_test
    tasks = []
    for k, (rng, enc, head, n_classes) in enumerate(zip(rngs, truth.encoders, truth.heads, cfg.n_classes), start=1):
        x = rng.standard_normal(size=(n, cfg.n_features))
        labels = np.argmax(np.tanh(x @ enc) @ head, axis=1)

        flip = rng.random(n) < cfg.label_noise
        # shift by 1..C-1 is a uniform draw over the other classes
        shift = rng.integers(1, n_classes, size=n)
        labels = np.where(flip, (labels + shift) % n_classes, labels).astype(np.int64)

        bounds = np.cumsum([0, cfg.n_train, cfg.n_val, cfg.n_test])
        splits = [
            Dataset(x[lo:hi], labels[lo:hi], split)
            for lo, hi, split in zip(bounds[:-1], bounds[1:], (Split.TRAIN, Split.VAL, Split.TEST))
        ]
        spec = TaskSpec(task_id=k, n_classes=n_classes, n_features=cfg.n_features, name=f"synthetic_{k}")
        tasks.append(TaskData(spec, *splits))
    return tasks
