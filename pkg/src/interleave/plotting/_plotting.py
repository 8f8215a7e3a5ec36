from typing import Tuple, Optional, Sequence
from pathlib import Path

from matplotlib.figure import Figure
import pandas as pd

import numpy as np

from interleave._docs._docs import d
from interleave.engine._output import RunReport
from interleave._constants._constants import SweepAxis

__all__ = ["plot_sweep", "plot_alpha", "gnuplot_script"]

_METRICS = (("val_loss", "final validation loss"), ("test_error", "test error"))


@d.dedent
def plot_sweep(
    summary: pd.DataFrame,
    axis: SweepAxis,
    figsize: Optional[Tuple[float, float]] = None,
    dpi: Optional[int] = None,
    save: Optional[str] = None,
    return_fig: bool = False,
) -> Optional[Figure]:
    """Plot the mean and standard deviation of the sweep metrics against the swept value.

    Parameters
    ----------
    summary
        One row per swept value with columns ``value``, ``mean_<metric>`` and ``std_<metric>`` for
        ``val_loss`` and ``test_error``.
    axis
        Swept hyper-parameter, used for the axis label.
    %(figsize)s
    %(dpi)s
    %(save)s
    %(return_fig)s

    Returns
    -------
    The figure if ``return_fig = True``.
    """
    axis = SweepAxis(axis)
    missing = [f"{s}_{m}" for m, _ in _METRICS for s in ("mean", "std") if f"{s}_{m}" not in summary]
    if "value" not in summary or missing:
        raise KeyError(f"Unable to find columns `{['value'] + missing}` in the sweep summary.")

    fig = Figure(figsize=figsize, dpi=dpi, constrained_layout=True)
    axes = fig.subplots(1, len(_METRICS), squeeze=False)[0]
    x = np.arange(len(summary))
    for ax, (metric, label) in zip(axes, _METRICS):
        ax.errorbar(x, summary[f"mean_{metric}"], yerr=summary[f"std_{metric}"], marker="o", capsize=3)
        ax.set_xticks(x)
        ax.set_xticklabels([str(v) for v in summary["value"]])
        ax.set_xlabel(str(axis))
        ax.set_ylabel(label)
    if save:
        fig.savefig(save, bbox_inches="tight")
    if return_fig:
        return fig
    return None


@d.dedent
def plot_alpha(
    report: RunReport,
    edges: Optional[Sequence[str]] = None,
    figsize: Optional[Tuple[float, float]] = None,
    dpi: Optional[int] = None,
    save: Optional[str] = None,
    return_fig: bool = False,
) -> Optional[Figure]:
    """Plot the mixture logits of every edge over the outer iterations.

    Parameters
    ----------
    report
        Report of a run.
    edges
        Edges to plot. If `None`, plot all edges.
    %(figsize)s
    %(dpi)s
    %(save)s
    %(return_fig)s

    Returns
    -------
    The figure if ``return_fig = True``.
    """
    edges = [e.key for e in report.cell.edges] if edges is None else list(edges)
    if not edges:
        raise ValueError("Expected at least `1` edge to plot.")
    for key in edges:
        report.cell.edge(key)
    fig = Figure(figsize=figsize, dpi=dpi, constrained_layout=True)
    axes = fig.subplots(1, len(edges), squeeze=False)
    for ax, key in zip(axes[0], edges):
        traj = report.alpha_trajectory(key)
        for i, op in enumerate(report.cell.edge(key).ops):
            ax.plot(np.arange(1, len(traj) + 1), traj[:, i], label=str(op))
        ax.set_title(key)
        ax.set_xlabel("iteration")
    axes[0][0].set_ylabel("logit")
    axes[0][-1].legend(loc="best", fontsize="small")
    if save:
        fig.savefig(save, bbox_inches="tight")
    if return_fig:
        return fig
    return None


def gnuplot_script(data: Path, axis: SweepAxis, output: Optional[Path] = None) -> str:
    """Gnuplot script plotting a sweep summary written by :func:`interleave.cli.cmd_sweep`.

    The summary is tab-separated with a header and the columns ``value``, ``mean_val_loss``, ``std_val_loss``,
    ``mean_test_error`` and ``std_test_error``.
    """
    axis = SweepAxis(axis)
    output = Path(data).with_suffix(".svg") if output is None else Path(output)
    return "\n".join(
        [
            "set terminal svg size 900,400",
            f"set output '{output.name}'",
            "set datafile separator '\\t'",
            "set key autotitle columnhead",
            "set multiplot layout 1,2",
            f"set xlabel '{axis}'",
            "set ylabel 'final validation loss'",
            f"plot '{Path(data).name}' using 0:2:3:xticlabels(1) with yerrorlines title 'validation loss'",
            "set ylabel 'test error'",
            f"plot '{Path(data).name}' using 0:4:5:xticlabels(1) with yerrorlines title 'test error'",
            "unset multiplot",
            "",
        ]
    )
