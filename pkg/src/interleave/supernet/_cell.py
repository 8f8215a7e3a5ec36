from enum import unique
from typing import Any, Dict, List, Tuple, Iterable, Optional, Sequence
from dataclasses import field, dataclass

import networkx as nx

from interleave._constants._enum import ModeEnum

__all__ = ["OpKind", "Edge", "CellSpec", "DEFAULT_OPS", "SMOOTH_OPS"]


@unique
class OpKind(ModeEnum):
    ZERO = "zero"
    IDENTITY = "identity"
    LINEAR = "linear"
    LINEAR_RELU = "linear_relu"
    LINEAR_TANH = "linear_tanh"

    @property
    def has_weights(self) -> bool:
        return self in (OpKind.LINEAR, OpKind.LINEAR_RELU, OpKind.LINEAR_TANH)


DEFAULT_OPS: Tuple[OpKind, ...] = tuple(OpKind)
# no kinks, used for finite-difference checks
SMOOTH_OPS: Tuple[OpKind, ...] = (OpKind.ZERO, OpKind.IDENTITY, OpKind.LINEAR, OpKind.LINEAR_TANH)


@dataclass(frozen=True, repr=True)
class Edge:
    """Mixed edge of a cell."""

    #: source node
    src: int
    #: destination node
    dst: int
    #: candidate operations, in mixture order
    ops: Tuple[OpKind, ...]

    def __post_init__(self) -> None:
        ops = tuple(OpKind(o) for o in self.ops)
        if not ops:
            raise ValueError(f"Edge `{self.key}` has no candidate operations.")
        if len(set(ops)) != len(ops):
            raise ValueError(f"Edge `{self.key}` has duplicate candidate operations `{[str(o) for o in ops]}`.")
        object.__setattr__(self, "ops", ops)

    @property
    def key(self) -> str:
        """Name used as prefix of this edge's parameters."""
        return f"e{self.src}_{self.dst}"

    @property
    def n_ops(self) -> int:
        return len(self.ops)


@dataclass(frozen=True)
class CellSpec:
    """Directed acyclic cell shared by all learners.

    Node ``0`` receives the input features, the last node is the output. Every other node is the sum of its
    incoming mixed edges.
    """

    #: width of every node, the first one is the input dimension
    widths: Tuple[int, ...]
    #: mixed edges, sorted by ``(src, dst)``
    edges: Tuple[Edge, ...]
    _graph: Any = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 2:
            raise ValueError(f"Expected at least `2` nodes, found `{len(widths)}`.")
        if any(w <= 0 for w in widths):
            raise ValueError(f"Expected all node widths to be positive, found `{widths}`.")
        edges = tuple(sorted(self.edges, key=lambda e: (e.src, e.dst)))
        n = len(widths)

        g = nx.DiGraph()
        g.add_nodes_from(range(n))
        for e in edges:
            if not (0 <= e.src < n and 0 <= e.dst < n):
                raise ValueError(f"Edge `{e.key}` references a node outside of `[0, {n})`.")
            if e.src == e.dst:
                raise ValueError(f"Edge `{e.key}` is a self-loop.")
            if g.has_edge(e.src, e.dst):
                raise ValueError(f"Edge `{e.key}` is defined more than once.")
            if e.dst == 0:
                raise ValueError("The input node must not have incoming edges.")
            if OpKind.IDENTITY in e.ops and widths[e.src] != widths[e.dst]:
                raise ValueError(
                    f"Edge `{e.key}` contains `identity` but connects widths `{widths[e.src]}` and `{widths[e.dst]}`."
                )
            g.add_edge(e.src, e.dst)
        if not nx.is_directed_acyclic_graph(g):
            cycle = nx.find_cycle(g)
            raise ValueError(f"Cell contains a cycle `{cycle}`.")
        for node in range(1, n):
            if g.in_degree(node) == 0:
                raise ValueError(f"Node `{node}` has no incoming edges.")
        if not nx.has_path(g, 0, n - 1):
            raise ValueError("The output node is not reachable from the input node.")

        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_graph", g)

    @classmethod
    def dense(
        cls,
        n_nodes: int = 4,
        width: int = 16,
        in_width: Optional[int] = None,
        ops: Sequence[Any] = DEFAULT_OPS,
    ) -> "CellSpec":
        """Fully connected cell with an edge from every node to every later node.

        Parameters
        ----------
        n_nodes
            Number of nodes, including input and output.
        width
            Width of every non-input node.
        in_width
            Input dimension. If `None`, use ``width``.
        ops
            Candidate operations on every edge. `identity` is dropped from edges leaving the input node
            when ``in_width != width``.
        """
        in_width = width if in_width is None else in_width
        widths = (in_width,) + (width,) * (n_nodes - 1)
        ops = tuple(OpKind(o) for o in ops)
        edges = []
        for j in range(1, n_nodes):
            for i in range(j):
                edge_ops = ops
                if widths[i] != widths[j]:
                    edge_ops = tuple(o for o in ops if o != OpKind.IDENTITY)
                edges.append(Edge(i, j, edge_ops))
        return cls(widths=widths, edges=tuple(edges))

    @property
    def n_nodes(self) -> int:
        return len(self.widths)

    @property
    def input_width(self) -> int:
        return self.widths[0]

    @property
    def output_width(self) -> int:
        return self.widths[-1]

    @property
    def is_discrete(self) -> bool:
        """Whether every edge retains a single operation."""
        return all(e.n_ops == 1 for e in self.edges)

    def topological_order(self) -> List[int]:
        return list(nx.lexicographical_topological_sort(self._graph))

    def incoming(self, node: int) -> Tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.dst == node)

    def edge(self, key: str) -> Edge:
        for e in self.edges:
            if e.key == key:
                return e
        raise KeyError(f"Unknown edge `{key}`. Valid options are: `{[e.key for e in self.edges]}`.")

    def with_ops(self, ops: Dict[str, Iterable[Any]]) -> "CellSpec":
        """Copy where the candidate operations of the edges in ``ops`` are replaced."""
        edges = tuple(Edge(e.src, e.dst, tuple(ops.get(e.key, e.ops))) for e in self.edges)
        return CellSpec(widths=self.widths, edges=edges)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "nodes": list(self.widths),
            "edges": [{"from": e.src, "to": e.dst, "ops": [str(o) for o in e.ops]} for e in self.edges],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CellSpec":
        try:
            edges = tuple(Edge(int(e["from"]), int(e["to"]), tuple(e["ops"])) for e in data["edges"])
            return cls(widths=tuple(data["nodes"]), edges=edges)
        except KeyError as e:
            raise ValueError(f"Cell description is missing field `{e.args[0]}`.") from None
