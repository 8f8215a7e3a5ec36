from typing import List

import pytest

import numpy as np

from interleave.data import TaskData
from interleave.engine import EngineConfig
from interleave.supernet import CellSpec, ArchParams
from tests._utils import make_tasks, small_cell, identical_tasks

try:
    import jax

    jax.config.update("jax_enable_x64", True)
except ImportError:
    pass


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


@pytest.fixture()
def cell() -> CellSpec:
    return small_cell()


@pytest.fixture()
def tasks() -> List[TaskData]:
    return make_tasks(n_classes=(2, 3))


@pytest.fixture()
def single_task() -> List[TaskData]:
    return make_tasks(n_classes=(3,))


@pytest.fixture()
def twin_tasks() -> List[TaskData]:
    return identical_tasks(2)


@pytest.fixture()
def config() -> EngineConfig:
    return EngineConfig(lam=1.0, eta=0.05, eta_arch=0.5, rounds=2, outer_iters=2, batch_size=8, seed=0)


@pytest.fixture()
def random_arch(cell: CellSpec, rng: np.random.Generator) -> ArchParams:
    return ArchParams.zeros(cell).map(lambda _, v: rng.normal(size=v.shape))


@pytest.fixture()
def arch(cell: CellSpec) -> ArchParams:
    return ArchParams.zeros(cell)
