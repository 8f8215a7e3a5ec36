from typing import List

import pandas as pd
import pytest

from interleave.data import TaskData
from interleave.engine import RunReport, EngineConfig, run_il
from interleave.supernet import CellSpec


@pytest.fixture()
def sweep_summary() -> pd.DataFrame:
    return pd.DataFrame(
        {
            "value": [0.0, 1.0, 10.0],
            "mean_val_loss": [0.9, 0.7, 0.8],
            "std_val_loss": [0.1, 0.05, 0.02],
            "mean_test_error": [0.4, 0.3, 0.35],
            "std_test_error": [0.02, 0.01, 0.03],
        }
    )


@pytest.fixture()
def report(config: EngineConfig, tasks: List[TaskData], cell: CellSpec) -> RunReport:
    return run_il(config, tasks, cell)
