from typing import Dict, List, Optional, Sequence, NamedTuple

import pandas as pd

import numpy as np

from interleave._logging import logger
from interleave._docs._docs import d
from interleave.autodiff import Tape, NonFiniteError, backward
from interleave.data._dataset import Split, Dataset, TaskData
from interleave.supernet._ops import predict, init_head, task_loss, init_encoder
from interleave.engine._state import DivergenceError
from interleave.engine._config import EngineConfig
from interleave.engine._runner import make_runner
from interleave.supernet._cell import CellSpec
from interleave._constants._constants import Method

__all__ = ["RetrainResult", "Comparison", "retrain_discretized", "summarize", "effect_sizes", "compare_methods"]


class RetrainResult(NamedTuple):
    """Test metrics of a retrained discrete cell."""

    #: fraction of misclassified test samples
    test_error: float
    test_loss: float
    #: training loss after the last step
    train_loss: float


def retrain_discretized(
    cell: CellSpec,
    task: TaskData,
    *,
    steps: int = 100,
    eta: float = 0.1,
    seed: int = 0,
) -> RetrainResult:
    """Train a discrete cell from scratch on the training and validation data of ``task``.

    Parameters
    ----------
    cell
        Cell with a single operation on every edge, see :func:`interleave.supernet.discretize`.
    task
        Task to train on. Its test split is used for evaluation.
    steps
        Number of full-batch gradient descent steps.
    eta
        Step size.
    seed
        Seed of the weight initialization.

    Returns
    -------
    Test error and test loss after training.
    """
    if not cell.is_discrete:
        raise ValueError("Expected a discrete cell, use `interleave.supernet.discretize` first.")
    if steps < 0:
        raise ValueError(f"Expected `steps` to be non-negative, found `{steps}`.")
    if task.test.n_samples == 0:
        raise ValueError(f"Task `{task.task_id}` has no test samples.")

    rng = np.random.default_rng([seed, task.task_id])
    weights = init_encoder(cell, rng)
    head = init_head(cell.output_width, task.n_classes, rng)
    data = Dataset.concat([task.train, task.val], split=Split.TRAIN)

    loss = float("nan")
    try:
        for _ in range(steps):
            with Tape() as tape:
                w, h = tape.watch(weights), tape.watch(head)
                root = task_loss(cell, None, w, h, data)
            gw = backward(tape, root, w).dense(w)
            gh = backward(tape, root, h).dense(h)
            weights = w.map(lambda k, v: v.data - eta * gw[k].data)
            head = h.map(lambda k, v: v.data - eta * gh[k].data)
            loss = root.item()
        with Tape():
            test = task_loss(cell, None, weights, head, task.test).item()
            pred = predict(cell, None, weights, head, task.test)
    except NonFiniteError as e:
        raise DivergenceError(f"Non-finite value while retraining task `{task.task_id}`: {e}") from e

    error = float(np.mean(pred != task.test.labels))
    logger.debug(f"Retrained task `{task.task_id}` for `{steps}` steps: test error `{error:.4f}`.")
    return RetrainResult(test_error=error, test_loss=test, train_loss=loss)


def summarize(table: pd.DataFrame, by: Sequence[str], value: str) -> pd.DataFrame:
    """Mean, standard deviation and standard error of ``value`` per group.

    The standard deviation uses one degree of freedom and is `0` for single-seed groups.
    """
    grouped = table.groupby(list(by), sort=False)[value]
    res = grouped.agg(["mean", "std", "count"]).rename(columns={"count": "n"})
    res["std"] = res["std"].fillna(0.0)
    res["sem"] = res["std"] / np.sqrt(res["n"])
    return res.reset_index()


def effect_sizes(table: pd.DataFrame, value: str, reference: Method = Method.IL) -> pd.DataFrame:
    """Difference of ``reference`` to every other method, with Cohen's d on the pooled standard deviation.

    Parameters
    ----------
    table
        One row per method and seed, with columns ``method`` and ``value``.
    value
        Column to compare, lower is better.
    reference
        Method the others are compared against.

    Returns
    -------
    One row per baseline with columns ``baseline``, ``diff``, ``cohens_d``, ``sem`` and ``tie``. A negative
    ``diff`` means ``reference`` is better. ``tie`` marks differences within one standard error.
    """
    reference = str(Method(reference))
    groups = {str(m): g[value].to_numpy(dtype=float) for m, g in table.groupby("method", sort=False)}
    if reference not in groups:
        raise ValueError(f"Method `{reference}` is missing from the table.")
    ref = groups[reference]
    rows: List[Dict[str, object]] = []
    for name, other in groups.items():
        if name == reference:
            continue
        diff = float(np.mean(ref) - np.mean(other))
        var_ref = np.var(ref, ddof=1) if len(ref) > 1 else 0.0
        var_other = np.var(other, ddof=1) if len(other) > 1 else 0.0
        pooled = float(np.sqrt((var_ref + var_other) / 2.0))
        if pooled > 0:
            cohens_d = diff / pooled
        else:
            cohens_d = 0.0 if diff == 0 else float(np.copysign(np.inf, diff))
        sem = float(np.sqrt(var_ref / len(ref) + var_other / len(other)))
        rows.append({"baseline": name, "diff": diff, "cohens_d": cohens_d, "sem": sem, "tie": abs(diff) <= sem})
    return pd.DataFrame(rows, columns=["baseline", "diff", "cohens_d", "sem", "tie"])


class Comparison(NamedTuple):
    """Outcome of :func:`interleave.engine.compare_methods`."""

    #: one row per method and seed
    table: pd.DataFrame
    #: one row per method
    summary: pd.DataFrame
    #: one row per baseline
    effects: pd.DataFrame


@d.dedent
def compare_methods(
    config: EngineConfig,
    tasks: Sequence[TaskData],
    cell: CellSpec,
    seeds: Sequence[int],
    methods: Optional[Sequence[Method]] = None,
) -> Comparison:
    """Run several methods on matched seeds and compare their final validation losses.

    Parameters
    ----------
    %(config)s
    %(tasks)s
    %(cell)s
    seeds
        Seeds shared by all methods.
    methods
        Methods to compare. If `None`, use interleaved, blocked and joint training.

    Returns
    -------
    The per-seed table, its per-method summary and the effect sizes of interleaving.
    """
    if not seeds:
        raise ValueError("Expected at least `1` seed.")
    methods = [Method.IL, Method.BLOCKED, Method.MTL] if methods is None else [Method(m) for m in methods]
    rows = []
    for method in methods:
        for seed in seeds:
            report = make_runner(method, config.model_copy(update={"seed": seed}), tasks, cell).run()
            rows.append({"method": str(method), "seed": seed, "final_val_loss": report.final_mean_val_loss})
    table = pd.DataFrame(rows, columns=["method", "seed", "final_val_loss"])
    summary = summarize(table, ["method"], "final_val_loss")
    effects = effect_sizes(table, "final_val_loss") if Method.IL in methods and len(methods) > 1 else pd.DataFrame()
    for row in effects.itertuples():
        logger.info(f"`il` vs `{row.baseline}`: difference `{row.diff:.4g}`, Cohen's d `{row.cohens_d:.3g}`.")
    return Comparison(table=table, summary=summary, effects=effects)
