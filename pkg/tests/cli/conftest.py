from typing import Any, Dict
from pathlib import Path

import pytest
import yaml

from interleave.cli import ExperimentConfig


@pytest.fixture()
def experiment_dict(tmp_path: Path) -> Dict[str, Any]:
    return {
        "method": "il",
        "engine": {"lam": 1.0, "eta": 0.05, "rounds": 2, "outer_iters": 2, "batch_size": 16},
        "cell": {"n_nodes": 3, "width": 4, "ops": ["zero", "identity", "linear", "linear_tanh"]},
        "data": {
            "synthetic": {"n_features": 4, "hidden": 4, "n_classes": [2, 3], "n_train": 32, "n_val": 16, "n_test": 16}
        },
        "sweep": {"lambda_values": [0.0, 1.0], "rounds_values": [1, 2]},
        "gradcheck": {"n_instances": 1},
        "evaluation": {"steps": 5},
        "seeds": [0, 1],
        "output_dir": str(tmp_path / "out"),
    }


@pytest.fixture()
def experiment_file(tmp_path: Path, experiment_dict: Dict[str, Any]) -> Path:
    path = tmp_path / "experiment.yaml"
    path.write_text(yaml.safe_dump(experiment_dict))
    return path


@pytest.fixture()
def experiment(experiment_dict: Dict[str, Any]) -> ExperimentConfig:
    return ExperimentConfig.from_dict(experiment_dict)
