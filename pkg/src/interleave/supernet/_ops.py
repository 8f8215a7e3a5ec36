from typing import Dict, Optional

import numpy as np

from interleave.autodiff import (
    Tensor,
    ParamSet,
    add,
    mul,
    relu,
    tanh,
    index,
    matmul,
    reshape,
    constant,
    broadcast_to,
    softmax_rows,
    cross_entropy,
)
from interleave.data._dataset import Dataset
from interleave.supernet._arch import ArchParams
from interleave.supernet._cell import Edge, OpKind, CellSpec

__all__ = [
    "param_name",
    "init_encoder",
    "init_head",
    "apply_op",
    "mixed_edge",
    "encode",
    "head_logits",
    "task_loss",
    "predict",
]


def param_name(edge: Edge, op: OpKind, kind: str) -> str:
    """Name of the ``kind`` (`weight` or `bias`) parameter of ``op`` on ``edge``."""
    return f"{edge.key}.{op}.{kind}"


def _uniform(rng: np.random.Generator, fan_in: int, shape: tuple) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_encoder(cell: CellSpec, rng: np.random.Generator) -> ParamSet:
    """Draw encoder weights for every parametric operation of ``cell``.

    Weights and biases are uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``. Draws happen in edge order and,
    within an edge, in candidate order. The parameter names of a discretized cell are a subset of the mixed cell's.
    """
    params: Dict[str, np.ndarray] = {}
    for e in cell.edges:
        fan_in, fan_out = cell.widths[e.src], cell.widths[e.dst]
        for op in e.ops:
            if not op.has_weights:
                continue
            params[param_name(e, op, "weight")] = _uniform(rng, fan_in, (fan_in, fan_out))
            params[param_name(e, op, "bias")] = _uniform(rng, fan_in, (fan_out,))
    return ParamSet(params)


def init_head(in_width: int, n_classes: int, rng: np.random.Generator) -> ParamSet:
    """Draw a linear classification head mapping ``in_width`` features to ``n_classes`` logits."""
    if n_classes < 2:
        raise ValueError(f"Expected at least `2` classes, found `{n_classes}`.")
    return ParamSet(
        {
            "head.weight": _uniform(rng, in_width, (in_width, n_classes)),
            "head.bias": _uniform(rng, in_width, (n_classes,)),
        }
    )


def _linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    z = matmul(x, weight)
    return add(z, broadcast_to(bias, z.shape))


def apply_op(op: OpKind, edge: Edge, x: Tensor, weights: ParamSet) -> Optional[Tensor]:
    """Apply a single candidate operation. Returns `None` for `zero`."""
    if op == OpKind.ZERO:
        return None
    if op == OpKind.IDENTITY:
        return x
    z = _linear(x, weights[param_name(edge, op, "weight")], weights[param_name(edge, op, "bias")])
    if op == OpKind.LINEAR_RELU:
        return relu(z)
    if op == OpKind.LINEAR_TANH:
        return tanh(z)
    return z


def mixed_edge(edge: Edge, x: Tensor, alpha: Optional[Tensor], weights: ParamSet, out_width: int) -> Tensor:
    """Softmax-weighted sum of the candidate operations of ``edge``.

    A single-operation edge is applied directly, without mixing.
    """
    n = x.shape[0]
    if edge.n_ops == 1 or alpha is None:
        if edge.n_ops != 1:
            raise ValueError(f"Edge `{edge.key}` has `{edge.n_ops}` operations but no logits.")
        out = apply_op(edge.ops[0], edge, x, weights)
        return constant(np.zeros((n, out_width))) if out is None else out

    w = softmax_rows(reshape(alpha, (1, edge.n_ops)))
    res: Optional[Tensor] = None
    for i, op in enumerate(edge.ops):
        # `zero` adds nothing, its logit still enters the normalization
        y = apply_op(op, edge, x, weights)
        if y is None:
            continue
        term = mul(broadcast_to(index(w, (0, i)), y.shape), y)
        res = term if res is None else add(res, term)
    return constant(np.zeros((n, out_width))) if res is None else res


def encode(cell: CellSpec, x: Tensor, arch: Optional[ArchParams], weights: ParamSet) -> Tensor:
    """Run the cell on features ``x`` of shape ``[n, d]`` and return the output node."""
    if x.ndim != 2 or x.shape[1] != cell.input_width:
        raise ValueError(f"Expected features to have shape `[n, {cell.input_width}]`, found `{x.shape}`.")
    states: Dict[int, Tensor] = {0: x}
    for node in cell.topological_order():
        if node == 0:
            continue
        acc: Optional[Tensor] = None
        for e in cell.incoming(node):
            alpha = None if arch is None or e.n_ops == 1 else arch[e.key]
            y = mixed_edge(e, states[e.src], alpha, weights, cell.widths[node])
            acc = y if acc is None else add(acc, y)
        states[node] = acc  # type: ignore[assignment]
    return states[cell.n_nodes - 1]


def head_logits(head: ParamSet, z: Tensor) -> Tensor:
    return _linear(z, head["head.weight"], head["head.bias"])


def task_loss(
    cell: CellSpec, arch: Optional[ArchParams], weights: ParamSet, head: ParamSet, batch: Dataset
) -> Tensor:
    """Mean cross-entropy of the cell followed by the head on ``batch``."""
    z = encode(cell, constant(batch.features), arch, weights)
    return cross_entropy(head_logits(head, z), batch.labels)


def predict(
    cell: CellSpec, arch: Optional[ArchParams], weights: ParamSet, head: ParamSet, batch: Dataset
) -> np.ndarray:
    """Predicted class of every sample, ties go to the lowest class."""
    z = encode(cell, constant(batch.features), arch, weights)
    return np.argmax(head_logits(head, z).data, axis=1)
