from interleave.cli._main import main, build_parser
from interleave.cli._config import (
    CellConfig,
    DataConfig,
    FileSource,
    ConfigError,
    SweepConfig,
    GradcheckConfig,
    EvaluationConfig,
    ExperimentConfig,
)
from interleave.cli._commands import cmd_run, cmd_sweep, cmd_compare, cmd_gradcheck, cmd_discretize
