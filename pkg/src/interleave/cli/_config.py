from typing import Any, Dict, List, Tuple, Union, Mapping, Optional
from pathlib import Path
import os

from pydantic import Field, BaseModel, ConfigDict, ValidationError, field_validator, model_validator
import yaml

from interleave._logging import logger
from interleave.data import TaskData, TaskSpec, SyntheticFamilyConfig, load_delimited, gen_synthetic_family
from interleave.engine import EngineConfig
from interleave.supernet import OpKind, CellSpec, SMOOTH_OPS, DEFAULT_OPS
from interleave._constants._constants import ENV_OUT_DIR, ENV_THREADS, Method

__all__ = [
    "ConfigError",
    "CellConfig",
    "FileSource",
    "DataConfig",
    "SweepConfig",
    "GradcheckConfig",
    "EvaluationConfig",
    "ExperimentConfig",
]


class ConfigError(ValueError):
    """Raised when an experiment configuration cannot be read or is invalid."""


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class CellConfig(_Section):
    """Dense search cell."""

    n_nodes: int = Field(default=4, ge=2)
    width: int = Field(default=16, ge=1)
    ops: Tuple[OpKind, ...] = DEFAULT_OPS

    @field_validator("ops", mode="before")
    @classmethod
    def _parse_ops(cls, v: Any) -> Tuple[OpKind, ...]:
        return tuple(OpKind(op) for op in v)

    def build(self, in_width: int) -> CellSpec:
        return CellSpec.dense(n_nodes=self.n_nodes, width=self.width, in_width=in_width, ops=self.ops)


class FileSource(_Section):
    """A delimited text file holding one task."""

    path: Path
    n_classes: int = Field(ge=2)
    fractions: Tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = Field(default=0, ge=0)


class DataConfig(_Section):
    """Task source, either a synthetic family or a list of files."""

    synthetic: Optional[SyntheticFamilyConfig] = None
    files: Optional[Tuple[FileSource, ...]] = None

    @model_validator(mode="before")
    @classmethod
    def _default_source(cls, data: Any) -> Any:
        if isinstance(data, Mapping) and data.get("synthetic") is None and data.get("files") is None:
            return {**data, "synthetic": {}}
        return data

    @model_validator(mode="after")
    def _one_source(self) -> "DataConfig":
        if (self.synthetic is None) == (self.files is None):
            raise ValueError("Expected exactly one of `synthetic` or `files`.")
        if self.files is not None and not self.files:
            raise ValueError("Expected at least `1` file.")
        return self

    def load(self) -> List[TaskData]:
        """Generate or read the tasks, numbered in order from `1`."""
        if self.synthetic is not None:
            return gen_synthetic_family(self.synthetic)
        assert self.files is not None
        tasks = []
        for k, src in enumerate(self.files, start=1):
            train, val, test = load_delimited(src.path, src.n_classes, fractions=src.fractions, seed=src.seed)
            spec = TaskSpec(task_id=k, n_classes=src.n_classes, n_features=train.n_features, name=src.path.stem)
            tasks.append(TaskData(spec, train, val, test))
        return tasks


class SweepConfig(_Section):
    """Values of every sweep axis."""

    lambda_values: Tuple[float, ...] = (0.0, 1.0, 10.0, 100.0, 1000.0)
    rounds_values: Tuple[int, ...] = (1, 2, 3)
    #: task orders, `None` uses every permutation
    orders: Optional[Tuple[Tuple[int, ...], ...]] = None
    #: also render a figure of the summary
    plot: bool = False

    @field_validator("lambda_values", "rounds_values")
    @classmethod
    def _non_empty(cls, v: Tuple[Any, ...]) -> Tuple[Any, ...]:
        if not v:
            raise ValueError("Expected at least `1` value.")
        return v


class GradcheckConfig(CellConfig):
    """Instance and tolerances of the gradient checks."""

    n_nodes: int = Field(default=3, ge=2)
    width: int = Field(default=4, ge=1)
    ops: Tuple[OpKind, ...] = SMOOTH_OPS
    eps_weights: float = Field(default=1e-5, gt=0)
    eps_arch: float = Field(default=1e-4, gt=0)
    tol_weights: float = Field(default=1e-4, gt=0)
    tol_arch: float = Field(default=1e-3, gt=0)
    #: number of random architectures the weight gradient is checked at
    n_instances: int = Field(default=3, ge=1)


class EvaluationConfig(_Section):
    """Retraining of the discretized architecture."""

    enabled: bool = True
    steps: int = Field(default=100, ge=0)
    eta: float = Field(default=0.1, gt=0)


class ExperimentConfig(_Section):
    """Experiment configuration read from a YAML file.

    Every section is optional. ``output_dir`` and ``threads`` can be overridden by the environment variables
    ``INTERLEAVE_OUT_DIR`` and ``INTERLEAVE_THREADS``.
    """

    method: Method = Method.IL
    engine: EngineConfig = Field(default_factory=EngineConfig)
    cell: CellConfig = Field(default_factory=CellConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    gradcheck: GradcheckConfig = Field(default_factory=GradcheckConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    seeds: Tuple[int, ...] = (0,)
    output_dir: Path = Path("results")
    threads: int = Field(default=1, ge=1)
    #: save the architecture logits of every run as a figure
    plot: bool = False

    @field_validator("method", mode="before")
    @classmethod
    def _parse_method(cls, v: Any) -> Method:
        return Method(v)

    @field_validator("seeds")
    @classmethod
    def _check_seeds(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if not v:
            raise ValueError("Expected at least `1` seed.")
        if any(s < 0 for s in v):
            raise ValueError(f"Expected seeds to be non-negative, found `{v}`.")
        return v

    @classmethod
    def from_dict(cls, data: Optional[Mapping[str, Any]], source: str = "<config>") -> "ExperimentConfig":
        """Validate a parsed document.

        Raises
        ------
        ConfigError
            With the dotted path of every invalid field.
        """
        if data is None:
            data = {}
        if not isinstance(data, Mapping):
            raise ConfigError(f"{source}: expected a mapping at the top level, found `{type(data).__name__}`.")
        try:
            return cls.model_validate(dict(data))
        except ValidationError as e:
            lines = [f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()]
            raise ConfigError(f"{source}: invalid configuration\n  " + "\n  ".join(lines)) from None

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """Read and validate a YAML file.

        Raises
        ------
        ConfigError
            If the file is not valid YAML, with line and column, or does not validate.
        OSError
            If the file cannot be read.
        """
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            where = "" if mark is None else f":{mark.line + 1}:{mark.column + 1}"
            problem = getattr(e, "problem", None) or str(e)
            raise ConfigError(f"{path}{where}: {problem}") from None
        return cls.from_dict(data, source=str(path))

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")

    def to_yaml(self, path: Optional[Union[str, Path]] = None) -> str:
        """Serialize to YAML, optionally writing to ``path``."""
        text = yaml.safe_dump(self.to_dict(), sort_keys=False)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    def with_overrides(self, output_dir: Optional[Path] = None, threads: Optional[int] = None) -> "ExperimentConfig":
        """Apply the environment, then explicit overrides of the output directory and the worker count."""
        update: Dict[str, Any] = {}
        if os.environ.get(ENV_OUT_DIR):
            update["output_dir"] = Path(os.environ[ENV_OUT_DIR])
        if os.environ.get(ENV_THREADS):
            try:
                update["threads"] = int(os.environ[ENV_THREADS])
            except ValueError:
                raise ConfigError(
                    f"Expected `{ENV_THREADS}` to be an integer, found `{os.environ[ENV_THREADS]}`."
                ) from None
        if output_dir is not None:
            update["output_dir"] = Path(output_dir)
        if threads is not None:
            update["threads"] = threads
        if update:
            logger.debug(f"Overriding `{sorted(update)}`.")
        # `model_copy` skips validation
        data = {**self.to_dict(), **{k: str(v) if isinstance(v, Path) else v for k, v in update.items()}}
        return self.from_dict(data)

    def load_tasks(self) -> List[TaskData]:
        tasks = self.data.load()
        for t in tasks:
            logger.debug(f"Task `{t.task_id}` ({t.spec.name}): `{t.n_classes}` classes, sizes `{t.sizes}`.")
        return tasks

    def build_cell(self, tasks: List[TaskData]) -> CellSpec:
        widths = {t.spec.n_features for t in tasks}
        if len(widths) != 1:
            raise ConfigError(f"Expected all tasks to have the same number of features, found `{sorted(widths)}`.")
        return self.cell.build(widths.pop())
