from typing import Any, Dict, List, Tuple, Union, Callable, Optional, Sequence, NamedTuple
from pathlib import Path
from itertools import permutations
from multiprocessing import Pool
import json

import pandas as pd

import numpy as np

from interleave._logging import logger
from interleave.autodiff import ParamSet
from interleave.engine import EngineConfig, summarize, make_runner, effect_sizes, retrain_discretized
from interleave.verify import CheckReport, gradient_check, hypergrad_check
from interleave.plotting import plot_alpha, plot_sweep, gnuplot_script
from interleave.supernet import ArchParams, Architecture, task_loss, init_head, init_encoder
from interleave.cli._config import ConfigError, ExperimentConfig
from interleave.supernet._cell import CellSpec
from interleave._constants._constants import Method, SweepAxis

__all__ = ["cmd_run", "cmd_sweep", "cmd_gradcheck", "cmd_discretize", "cmd_compare"]


class _Job(NamedTuple):
    config: ExperimentConfig
    method: Method
    engine: EngineConfig
    seed: int
    evaluate: bool = True
    #: where to save the logit trajectories, `None` skips the figure
    alpha_plot: Optional[Path] = None


class _Outcome(NamedTuple):
    method: str
    seed: int
    n_iterations: int
    metrics: List[Dict[str, Any]]
    report: Dict[str, Any]
    architecture: str
    initial_val_losses: Dict[int, float]
    final_val_losses: Dict[int, float]
    #: test error of the retrained discrete cell per task, empty if not evaluated
    test_errors: Dict[int, float]

    @property
    def final_mean_val_loss(self) -> float:
        return float(np.mean(list(self.final_val_losses.values())))

    @property
    def initial_mean_val_loss(self) -> float:
        return float(np.mean(list(self.initial_val_losses.values())))

    @property
    def mean_test_error(self) -> float:
        return float(np.mean(list(self.test_errors.values()))) if self.test_errors else float("nan")


def _run_job(job: _Job) -> _Outcome:
    cfg = job.config
    tasks = cfg.load_tasks()
    cell = cfg.build_cell(tasks)
    engine = job.engine.model_copy(update={"seed": job.seed})
    report = make_runner(job.method, engine, tasks, cell).run()
    if job.alpha_plot is not None and report.n_iterations:
        plot_alpha(report, save=str(job.alpha_plot))

    errors: Dict[int, float] = {}
    if job.evaluate and cfg.evaluation.enabled and report.n_iterations:
        for task in tasks:
            if task.test.n_samples == 0:
                logger.warning(f"Task `{task.task_id}` has no test samples, skipping its evaluation.")
                continue
            res = retrain_discretized(
                report.discretized, task, steps=cfg.evaluation.steps, eta=cfg.evaluation.eta, seed=job.seed
            )
            errors[task.task_id] = res.test_error

    return _Outcome(
        method=str(job.method),
        seed=job.seed,
        n_iterations=report.n_iterations,
        metrics=report.metrics_records(),
        report=report.to_dict(),
        architecture=report.architecture.to_yaml(),
        initial_val_losses=dict(report.initial_val_losses),
        final_val_losses=dict(report.final_val_losses),
        test_errors=errors,
    )


def _dispatch(fn: Callable[[Any], Any], jobs: Sequence[Any], threads: int) -> List[Any]:
    """Apply ``fn`` to every job, in a worker pool if ``threads > 1``. Results keep the order of ``jobs``."""
    n = min(threads, len(jobs))
    if n <= 1:
        return [fn(job) for job in jobs]
    logger.info(f"Dispatching `{len(jobs)}` jobs to `{n}` workers.")
    with Pool(processes=n) as pool:
        return pool.map(fn, jobs, chunksize=1)


def _write_tsv(df: pd.DataFrame, path: Path) -> None:
    df.to_csv(path, sep="\t", index=False, float_format="%.10g", na_rep="nan")


def _write_metrics(outcome: _Outcome, out: Path) -> Path:
    path = out / f"metrics_{outcome.method}_seed{outcome.seed}.jsonl"
    with open(path, "w", encoding="utf-8") as f:
        for record in outcome.metrics:
            f.write(json.dumps(record) + "\n")
    return path


def cmd_run(cfg: ExperimentConfig) -> pd.DataFrame:
    """Run :attr:`ExperimentConfig.method` for every seed and write metrics, reports and architectures.

    Written files, one per seed ``s``: ``metrics_<method>_seed<s>.jsonl``, ``report_<method>_seed<s>.json``
    and ``architecture_<method>_seed<s>.yaml``, plus a ``summary_<method>.tsv`` over all seeds. If
    :attr:`ExperimentConfig.plot` is set, the logit trajectories are also saved as ``alpha_<method>_seed<s>.png``.

    Returns
    -------
    The summary, one row per seed followed by the mean and standard deviation.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    plots = {s: out / f"alpha_{cfg.method}_seed{s}.png" if cfg.plot else None for s in cfg.seeds}
    jobs = [_Job(cfg, cfg.method, cfg.engine, seed, alpha_plot=plots[seed]) for seed in cfg.seeds]
    outcomes = _dispatch(_run_job, jobs, cfg.threads)

    rows = []
    for o in outcomes:
        _write_metrics(o, out)
        (out / f"report_{o.method}_seed{o.seed}.json").write_text(json.dumps(o.report, indent=2) + "\n")
        (out / f"architecture_{o.method}_seed{o.seed}.yaml").write_text(o.architecture)
        row: Dict[str, Any] = {"seed": str(o.seed), "initial_val_loss": o.initial_mean_val_loss}
        row.update({f"initial_val_loss_{k}": v for k, v in sorted(o.initial_val_losses.items())})
        if o.n_iterations:
            row["final_val_loss"] = o.final_mean_val_loss
            row.update({f"final_val_loss_{k}": v for k, v in sorted(o.final_val_losses.items())})
            row.update({f"test_error_{k}": v for k, v in sorted(o.test_errors.items())})
        rows.append(row)

    summary = pd.DataFrame(rows)
    stats = summary.drop(columns="seed").agg(["mean", "std"])
    stats = stats.fillna(0.0) if len(summary) == 1 else stats
    stats.insert(0, "seed", stats.index)
    summary = pd.concat([summary, stats], ignore_index=True)
    _write_tsv(summary, out / f"summary_{cfg.method}.tsv")

    key = "final_val_loss" if "final_val_loss" in summary else "initial_val_loss"
    mean, std = summary[key].iloc[-2], summary[key].iloc[-1]
    logger.info(f"`{cfg.method}` over `{len(cfg.seeds)}` seeds: {key.replace('_', ' ')} `{mean:.6f} ± {std:.6f}`.")
    return summary


def _sweep_values(cfg: ExperimentConfig, axis: SweepAxis, n_tasks: int) -> List[Any]:
    if axis == SweepAxis.LAMBDA:
        values: List[Any] = list(cfg.sweep.lambda_values)
    elif axis == SweepAxis.ROUNDS:
        values = list(cfg.sweep.rounds_values)
    else:
        orders = cfg.sweep.orders
        values = list(permutations(range(1, n_tasks + 1))) if orders is None else [tuple(o) for o in orders]
    unique = list(dict.fromkeys(values))
    if len(unique) != len(values):
        logger.warning(f"Dropping duplicate values of the `{axis}` sweep.")
    return unique


def _sweep_engine(engine: EngineConfig, axis: SweepAxis, value: Any) -> EngineConfig:
    field = {SweepAxis.LAMBDA: "lam", SweepAxis.ROUNDS: "rounds", SweepAxis.ORDER: "task_order"}[axis]
    # re-validate through the constructor
    return EngineConfig(**{**engine.model_dump(), field: value})


def _format_value(value: Any) -> str:
    return "-".join(str(v) for v in value) if isinstance(value, tuple) else str(value)


def cmd_sweep(cfg: ExperimentConfig, axis: Union[str, SweepAxis]) -> pd.DataFrame:
    """Sweep one hyper-parameter of :attr:`ExperimentConfig.method` over every seed.

    Writes ``sweep_<axis>.tsv`` with one row per value and seed, ``sweep_<axis>_summary.tsv`` with one row per
    value, a gnuplot script ``sweep_<axis>.gp`` and, if :attr:`SweepConfig.plot` is set, ``sweep_<axis>.png``.

    Returns
    -------
    The table with one row per value and seed.
    """
    axis = SweepAxis(axis)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_tasks = len(cfg.load_tasks())
    values = _sweep_values(cfg, axis, n_tasks)

    jobs = [_Job(cfg, cfg.method, _sweep_engine(cfg.engine, axis, v), seed) for v in values for seed in cfg.seeds]
    outcomes = _dispatch(_run_job, jobs, cfg.threads)

    rows = []
    for i, o in enumerate(outcomes):
        value = _format_value(values[i // len(cfg.seeds)])
        rows.append(
            {"value": value, "seed": o.seed, "val_loss": o.final_mean_val_loss, "test_error": o.mean_test_error}
        )
    table = pd.DataFrame(rows, columns=["value", "seed", "val_loss", "test_error"])
    _write_tsv(table, out / f"sweep_{axis}.tsv")

    summary = pd.DataFrame({"value": [_format_value(v) for v in values]})
    for metric in ("val_loss", "test_error"):
        stats = summarize(table, ["value"], metric)
        summary[f"mean_{metric}"] = stats["mean"].to_numpy()
        summary[f"std_{metric}"] = stats["std"].to_numpy()
    data = out / f"sweep_{axis}_summary.tsv"
    _write_tsv(summary, data)
    (out / f"sweep_{axis}.gp").write_text(gnuplot_script(data, axis))
    if cfg.sweep.plot:
        plot_sweep(summary, axis, save=str(out / f"sweep_{axis}.png"))
    logger.info(f"Swept `{axis}` over `{len(values)}` values and `{len(cfg.seeds)}` seeds.")
    return table


def _gradcheck_job(job: Tuple[ExperimentConfig, int]) -> List[CheckReport]:
    cfg, seed = job
    tasks = cfg.load_tasks()
    cell = cfg.gradcheck.build(cfg.build_cell(tasks).input_width)
    gc = cfg.gradcheck
    reports = []
    for i in range(gc.n_instances):
        task = tasks[i % len(tasks)]
        rng = np.random.default_rng([seed, i])
        arch = ArchParams.zeros(cell).map(lambda _, v: rng.normal(size=v.shape))
        params = ParamSet({**init_encoder(cell, rng), **init_head(cell.output_width, task.n_classes, rng)})
        batch = task.train.sample_batch(cfg.engine.batch_size, rng)

        def loss_fn(p: ParamSet) -> Any:
            weights = ParamSet({k: v for k, v in p.items() if not k.startswith("head.")})
            head = ParamSet({k: v for k, v in p.items() if k.startswith("head.")})
            return task_loss(cell, arch, weights, head, batch)

        reports.append(gradient_check(loss_fn, params, eps=gc.eps_weights, tol=gc.tol_weights))
    engine = cfg.engine.model_copy(update={"seed": seed})
    reports.append(hypergrad_check(engine, tasks, cell, eps=gc.eps_arch, tol=gc.tol_arch, method=cfg.method))
    return reports


def cmd_gradcheck(cfg: ExperimentConfig) -> bool:
    """Check weight gradients and the architecture hypergradient against finite differences.

    The checks run on the small cell of :attr:`ExperimentConfig.gradcheck`. Writes one
    ``gradcheck_seed<s>.yaml`` per seed.

    Returns
    -------
    Whether every check passed.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = _dispatch(_gradcheck_job, [(cfg, seed) for seed in cfg.seeds], cfg.threads)
    passed = True
    for seed, reports in zip(cfg.seeds, results):
        text = "\n".join(f"---\n{r.to_text()}" for r in reports)
        (out / f"gradcheck_seed{seed}.yaml").write_text(text)
        for r in reports:
            level = logger.info if r.passed else logger.error
            level(f"Seed `{seed}`, {r.kind}: worst relative error `{r.worst:.3e}`, tolerance `{r.tolerance}`.")
            passed &= r.passed
    return passed


def _load_architecture(path: Path) -> Architecture:
    if path.suffix == ".json":
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            cell = CellSpec.from_dict(data["cell"])
            arch = ArchParams({k: np.asarray(v, dtype=np.float64) for k, v in data["alpha"].items()})
        except (KeyError, TypeError, json.JSONDecodeError) as e:
            raise ConfigError(f"Unable to read a run report from `{path}`: {e}") from None
        return Architecture.from_arch(arch, cell)
    try:
        return Architecture.from_yaml(path)
    except ValueError as e:
        raise ConfigError(f"Unable to read an architecture from `{path}`: {e}") from None


def cmd_discretize(path: Union[str, Path], out: Optional[Union[str, Path]] = None) -> Path:
    """Keep the strongest operation of every edge of a report or architecture file.

    Parameters
    ----------
    path
        Run report (``.json``) or architecture file (``.yaml``).
    out
        Output directory. If `None`, write next to ``path``.

    Returns
    -------
    Path of the written architecture file, ``<stem>_discrete.yaml``.
    """
    path = Path(path)
    arch = _load_architecture(path)
    retained = arch.retained
    best = {e.key: int(np.argmax(arch.weights[e.key])) for e in arch.cell.edges}
    discrete = Architecture(
        arch.discretize(),
        {k: arch.weights[k][best[k] : best[k] + 1] for k in retained},
        cell_index=arch.cell_index,
    )
    stem = path.stem if path.stem.endswith("_discrete") else f"{path.stem}_discrete"
    target = (path.parent if out is None else Path(out)) / f"{stem}.yaml"
    target.parent.mkdir(parents=True, exist_ok=True)
    discrete.to_yaml(target)
    logger.info(f"Retained `{[str(op) for op in retained.values()]}`, written to `{target}`.")
    return target


def cmd_compare(cfg: ExperimentConfig) -> pd.DataFrame:
    """Compare interleaved, blocked and joint training on matched seeds.

    Writes ``compare.tsv`` with one row per method and seed, ``compare_summary.tsv`` and ``compare_effects.tsv``.

    Returns
    -------
    The effect sizes of interleaving against every baseline.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    methods = [Method.IL, Method.BLOCKED, Method.MTL]
    jobs = [_Job(cfg, m, cfg.engine, seed, evaluate=False) for m in methods for seed in cfg.seeds]
    outcomes = _dispatch(_run_job, jobs, cfg.threads)

    table = pd.DataFrame(
        [{"method": o.method, "seed": o.seed, "final_val_loss": o.final_mean_val_loss} for o in outcomes],
        columns=["method", "seed", "final_val_loss"],
    )
    summary = summarize(table, ["method"], "final_val_loss")
    effects = effect_sizes(table, "final_val_loss")
    _write_tsv(table, out / "compare.tsv")
    _write_tsv(summary, out / "compare_summary.tsv")
    _write_tsv(effects, out / "compare_effects.tsv")
    for row in effects.itertuples():
        if row.tie:
            logger.warning(f"`il` and `{row.baseline}` are within one standard error, difference `{row.diff:.4g}`.")
        elif row.diff > 0:
            logger.warning(f"`il` is worse than `{row.baseline}` by `{row.diff:.4g}`, Cohen's d `{row.cohens_d:.3g}`.")
        else:
            logger.info(f"`il` is better than `{row.baseline}` by `{-row.diff:.4g}`, Cohen's d `{row.cohens_d:.3g}`.")
    return effects
