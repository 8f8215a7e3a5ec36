from typing import Any, Dict, Mapping, Optional
from pathlib import Path

from scipy.special import softmax
import yaml

import numpy as np

from interleave._types import ArrayLike
from interleave.autodiff import GradMap, ParamSet
from interleave._constants._constants import SCHEMA_VERSION
from interleave.supernet._cell import Edge, OpKind, CellSpec

__all__ = ["ArchParams", "discretize", "Architecture"]


class ArchParams(ParamSet):
    """Architecture logits, one vector per edge keyed by :attr:`interleave.supernet.Edge.key`."""

    @classmethod
    def zeros(cls, cell: CellSpec) -> "ArchParams":
        """Uniform mixture on every edge."""
        return cls({e.key: np.zeros((e.n_ops,), dtype=np.float64) for e in cell.edges})

    def check_cell(self, cell: CellSpec) -> None:
        """Raise if the logits do not match the edges of ``cell``."""
        keys = sorted(e.key for e in cell.edges)
        if sorted(self) != keys:
            raise ValueError(f"Architecture edges `{sorted(self)}` do not match cell edges `{keys}`.")
        for e in cell.edges:
            if self[e.key].shape != (e.n_ops,):
                raise ValueError(
                    f"Expected logits of edge `{e.key}` to have shape `{(e.n_ops,)}`, found `{self[e.key].shape}`."
                )

    def mixture_weights(self) -> Dict[str, ArrayLike]:
        """Softmax of the logits of every edge."""
        return {k: softmax(v.data) for k, v in self.items()}

    def step(self, grads: GradMap, lr: float) -> "ArchParams":
        """Plain gradient descent step, returns constants."""
        g = grads.dense(self)
        return ArchParams({k: v.data - lr * g[k].data for k, v in self.items()})

    def shift(self, c: float) -> "ArchParams":
        return ArchParams({k: v.data + c for k, v in self.items()})


def _argmax_weights(weights: Mapping[str, ArrayLike]) -> Dict[str, int]:
    # `np.argmax` returns the first maximum, ties go to the lowest index
    return {k: int(np.argmax(w)) for k, w in weights.items()}


def discretize(arch: ArchParams, cell: CellSpec) -> CellSpec:
    """Retain the operation with the largest mixture weight on every edge.

    Parameters
    ----------
    arch
        Architecture logits matching ``cell``.
    cell
        Cell with mixed edges.

    Returns
    -------
    Cell with the same nodes and edges and a single operation per edge.
    """
    arch.check_cell(cell)
    best = _argmax_weights(arch.mixture_weights())
    return cell.with_ops({e.key: (e.ops[best[e.key]],) for e in cell.edges})


class Architecture:
    """Serializable architecture: a mixed cell together with its mixture weights.

    Parameters
    ----------
    cell
        Cell with the candidate operations of every edge.
    weights
        Mixture weights per edge, in candidate order.
    cell_index
        Index of the cell in a stack of cells. Only ``0`` is produced.
    """

    def __init__(self, cell: CellSpec, weights: Mapping[str, ArrayLike], cell_index: int = 0):
        for e in cell.edges:
            if e.key not in weights:
                raise ValueError(f"Missing mixture weights for edge `{e.key}`.")
            w = np.asarray(weights[e.key], dtype=np.float64)
            if w.shape != (e.n_ops,):
                raise ValueError(f"Expected weights of edge `{e.key}` to have shape `{(e.n_ops,)}`, found `{w.shape}`.")
        self.cell = cell
        self.weights = {e.key: np.asarray(weights[e.key], dtype=np.float64) for e in cell.edges}
        self.cell_index = cell_index

    @classmethod
    def from_arch(cls, arch: ArchParams, cell: CellSpec) -> "Architecture":
        arch.check_cell(cell)
        return cls(cell, arch.mixture_weights())

    @property
    def retained(self) -> Dict[str, OpKind]:
        best = _argmax_weights(self.weights)
        return {e.key: e.ops[best[e.key]] for e in self.cell.edges}

    def discretize(self) -> CellSpec:
        retained = self.retained
        return self.cell.with_ops({k: (op,) for k, op in retained.items()})

    def to_dict(self) -> Dict[str, Any]:
        retained = self.retained
        return {
            "schema_version": SCHEMA_VERSION,
            "cell": self.cell_index,
            "nodes": list(self.cell.widths),
            "edges": [
                {
                    "from": e.src,
                    "to": e.dst,
                    "op": str(retained[e.key]),
                    "weights": {str(o): float(w) for o, w in zip(e.ops, self.weights[e.key])},
                }
                for e in self.cell.edges
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Architecture":
        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"Expected `schema_version` to be `{SCHEMA_VERSION}`, found `{version}`.")
        try:
            edges, weights = [], {}
            for item in data["edges"]:
                w = item.get("weights")
                if w is None:
                    # discrete description without weights
                    w = {item["op"]: 1.0}
                edge = Edge(int(item["from"]), int(item["to"]), tuple(w))
                edges.append(edge)
                weights[edge.key] = np.array(list(w.values()), dtype=np.float64)
            cell = CellSpec(widths=tuple(data["nodes"]), edges=tuple(edges))
        except KeyError as e:
            raise ValueError(f"Architecture description is missing field `{e.args[0]}`.") from None
        return cls(cell, weights, cell_index=int(data.get("cell", 0)))

    def to_yaml(self, path: Optional[Path] = None) -> str:
        text = yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=False)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_yaml(cls, path: Path) -> "Architecture":
        with open(path) as f:
            data = yaml.safe_load(f)
        if not isinstance(data, dict):
            raise ValueError(f"Expected a mapping in `{path}`, found `{type(data).__name__}`.")
        return cls.from_dict(data)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Architecture):
            return False
        return (
            self.cell == other.cell
            and self.cell_index == other.cell_index
            and all(np.array_equal(self.weights[k], other.weights[k]) for k in self.weights)
        )

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}[n_edges={len(self.cell.edges)}, cell={self.cell_index}]"
