from abc import ABC, abstractmethod
from typing import Any, Dict, Type, Tuple, Callable, Optional, Sequence

from scipy.special import logsumexp

import numpy as np

from interleave._types import Shape_t, ArrayLike
from interleave.autodiff._tensor import Node, Tensor, constant, active_tape

__all__ = [
    "Primitive",
    "get_primitive",
    "registered_primitives",
    "matmul",
    "add",
    "sub",
    "mul",
    "scale",
    "relu",
    "tanh",
    "mean",
    "total",
    "softmax_rows",
    "cross_entropy",
    "sq_l2_dist",
    "transpose",
    "reshape",
    "broadcast_to",
    "sum_to",
    "index",
    "embed",
    "detach",
]

Grads = Tuple[Optional[Tensor], ...]

_REGISTRY: Dict[str, "Primitive"] = {}


class Primitive(ABC):
    """Differentiable operation.

    The forward pass works on plain arrays. The vector-Jacobian product is itself expressed with registered
    primitives, so a backward pass recorded on a tape can be differentiated again.
    """

    name: str = ""

    @abstractmethod
    def forward(self, *xs: ArrayLike, **attrs: Any) -> ArrayLike:
        pass

    @abstractmethod
    def vjp(self, g: Tensor, node: Node) -> Grads:
        """Return one cotangent per input, `None` where no gradient flows."""

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}[{self.name!r}]"


def register(name: str) -> Callable[[Type[Primitive]], Type[Primitive]]:
    def decorator(cls: Type[Primitive]) -> Type[Primitive]:
        if name in _REGISTRY:
            raise KeyError(f"Primitive `{name}` is already registered.")
        cls.name = name
        _REGISTRY[name] = cls()
        return cls

    return decorator


def get_primitive(name: str) -> Primitive:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"Unknown primitive `{name}`. Valid options are: `{sorted(_REGISTRY)}`.") from None


def registered_primitives() -> Tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def _apply(name: str, *inputs: Tensor, **attrs: Any) -> Tensor:
    for x in inputs:
        if not isinstance(x, Tensor):
            raise TypeError(f"Expected input to be a `Tensor`, found `{type(x).__name__}`.")
    prim = _REGISTRY[name]
    tape = active_tape()
    out = prim.forward(*(x.data for x in inputs), **attrs)
    return tape.record(prim, inputs, np.asarray(out, dtype=np.float64), attrs)


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"`{op}` expects tensors of identical shape, found `{a.shape}` and `{b.shape}`.")


def _ndim(x: Tensor, ndim: int, op: str) -> None:
    if x.ndim != ndim:
        raise ValueError(f"`{op}` expects a `{ndim}`-dimensional tensor, found shape `{x.shape}`.")


@register("matmul")
class _MatMul(Primitive):
    def forward(self, a: ArrayLike, b: ArrayLike) -> ArrayLike:  # type: ignore[override]
        return a @ b

    def vjp(self, g: Tensor, node: Node) -> Grads:
        a, b = node.inputs
        return matmul(g, transpose(b)), matmul(transpose(a), g)


@register("add")
class _Add(Primitive):
    def forward(self, a: ArrayLike, b: ArrayLike) -> ArrayLike:  # type: ignore[override]
        return a + b

    def vjp(self, g: Tensor, node: Node) -> Grads:
        return g, g


@register("sub")
class _Sub(Primitive):
    def forward(self, a: ArrayLike, b: ArrayLike) -> ArrayLike:  # type: ignore[override]
        return a - b

    def vjp(self, g: Tensor, node: Node) -> Grads:
        return g, scale(g, -1.0)


@register("mul")
class _Mul(Primitive):
    def forward(self, a: ArrayLike, b: ArrayLike) -> ArrayLike:  # type: ignore[override]
        return a * b

    def vjp(self, g: Tensor, node: Node) -> Grads:
        a, b = node.inputs
        return mul(g, b), mul(g, a)


@register("scale")
class _Scale(Primitive):
    def forward(self, a: ArrayLike, *, c: float) -> ArrayLike:  # type: ignore[override]
        return a * c

    def vjp(self, g: Tensor, node: Node) -> Grads:
        return (scale(g, node.attrs["c"]),)


@register("relu")
class _Relu(Primitive):
    def forward(self, a: ArrayLike) -> ArrayLike:  # type: ignore[override]
        return np.maximum(a, 0.0)

    def vjp(self, g: Tensor, node: Node) -> Grads:
        # the mask is piecewise constant, hence a constant
        (a,) = node.inputs
        return (mul(g, constant((a.data > 0.0).astype(np.float64))),)


@register("tanh")
class _Tanh(Primitive):
    def forward(self, a: ArrayLike) -> ArrayLike:  # type: ignore[override]
        return np.tanh(a)

    def vjp(self, g: Tensor, node: Node) -> Grads:
        y = node.output
        return (sub(g, mul(g, mul(y, y))),)


@register("total")
class _Total(Primitive):
    def forward(self, a: ArrayLike) -> ArrayLike:  # type: ignore[override]
        return np.asarray(np.sum(a))

    def vjp(self, g: Tensor, node: Node) -> Grads:
        (a,) = node.inputs
        return (broadcast_to(g, a.shape),)


@register("mean")
class _Mean(Primitive):
    def forward(self, a: ArrayLike) -> ArrayLike:  # type: ignore[override]
        return np.asarray(np.mean(a))

    def vjp(self, g: Tensor, node: Node) -> Grads:
        (a,) = node.inputs
        return (broadcast_to(scale(g, 1.0 / a.size), a.shape),)


@register("softmax_rows")
class _SoftmaxRows(Primitive):
    def forward(self, a: ArrayLike) -> ArrayLike:  # type: ignore[override]
        return np.exp(a - logsumexp(a, axis=1, keepdims=True))

    def vjp(self, g: Tensor, node: Node) -> Grads:
        y = node.output
        gy = sum_to(mul(g, y), (y.shape[0], 1))
        return (mul(y, sub(g, broadcast_to(gy, y.shape))),)


@register("cross_entropy")
class _CrossEntropy(Primitive):
    def forward(self, logits: ArrayLike, *, labels: ArrayLike) -> ArrayLike:  # type: ignore[override]
        n = logits.shape[0]
        lse = logsumexp(logits, axis=1)
        return np.asarray(np.mean(lse - logits[np.arange(n), labels]))

    def vjp(self, g: Tensor, node: Node) -> Grads:
        (logits,) = node.inputs
        n, c = logits.shape
        onehot = np.zeros((n, c), dtype=np.float64)
        onehot[np.arange(n), node.attrs["labels"]] = 1.0
        diff = sub(softmax_rows(logits), constant(onehot))
        return (mul(broadcast_to(scale(g, 1.0 / n), (n, c)), diff),)


@register("sq_l2_dist")
class _SqL2Dist(Primitive):
    def forward(self, a: ArrayLike, b: ArrayLike) -> ArrayLike:  # type: ignore[override]
        d = a - b
        return np.asarray(np.sum(d * d))

    def vjp(self, g: Tensor, node: Node) -> Grads:
        a, b = node.inputs
        d = mul(broadcast_to(scale(g, 2.0), a.shape), sub(a, b))
        return d, scale(d, -1.0)


@register("transpose")
class _Transpose(Primitive):
    def forward(self, a: ArrayLike) -> ArrayLike:  # type: ignore[override]
        return np.ascontiguousarray(a.T)

    def vjp(self, g: Tensor, node: Node) -> Grads:
        return (transpose(g),)


@register("reshape")
class _Reshape(Primitive):
    def forward(self, a: ArrayLike, *, shape: Shape_t) -> ArrayLike:  # type: ignore[override]
        return a.reshape(shape)

    def vjp(self, g: Tensor, node: Node) -> Grads:
        (a,) = node.inputs
        return (reshape(g, a.shape),)


@register("broadcast_to")
class _BroadcastTo(Primitive):
    def forward(self, a: ArrayLike, *, shape: Shape_t) -> ArrayLike:  # type: ignore[override]
        return np.array(np.broadcast_to(a, shape))

    def vjp(self, g: Tensor, node: Node) -> Grads:
        (a,) = node.inputs
        return (sum_to(g, a.shape),)


def _sum_to_array(a: ArrayLike, shape: Shape_t) -> ArrayLike:
    lead = a.ndim - len(shape)
    out = a.sum(axis=tuple(range(lead))) if lead > 0 else a
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and out.shape[i] != 1)
    if axes:
        out = out.sum(axis=axes, keepdims=True)
    return np.asarray(out).reshape(shape)


@register("sum_to")
class _SumTo(Primitive):
    def forward(self, a: ArrayLike, *, shape: Shape_t) -> ArrayLike:  # type: ignore[override]
        return _sum_to_array(a, shape)

    def vjp(self, g: Tensor, node: Node) -> Grads:
        (a,) = node.inputs
        return (broadcast_to(g, a.shape),)


@register("index")
class _Index(Primitive):
    def forward(self, a: ArrayLike, *, idx: Tuple[int, ...]) -> ArrayLike:  # type: ignore[override]
        return np.asarray(a[idx])

    def vjp(self, g: Tensor, node: Node) -> Grads:
        (a,) = node.inputs
        return (embed(g, node.attrs["idx"], a.shape),)


@register("embed")
class _Embed(Primitive):
    def forward(self, a: ArrayLike, *, idx: Tuple[int, ...], shape: Shape_t) -> ArrayLike:  # type: ignore[override]
        out = np.zeros(shape, dtype=np.float64)
        out[idx] = a
        return out

    def vjp(self, g: Tensor, node: Node) -> Grads:
        return (index(g, node.attrs["idx"]),)


@register("detach")
class _Detach(Primitive):
    def forward(self, a: ArrayLike) -> ArrayLike:  # type: ignore[override]
        return a

    def vjp(self, g: Tensor, node: Node) -> Grads:
        return (None,)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of two 2-dimensional tensors."""
    _ndim(a, 2, "matmul")
    _ndim(b, 2, "matmul")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"`matmul` expects inner dimensions to match, found `{a.shape}` and `{b.shape}`.")
    return _apply("matmul", a, b)


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    return _apply("add", a, b)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "sub")
    return _apply("sub", a, b)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Element-wise product."""
    _same_shape(a, b, "mul")
    return _apply("mul", a, b)


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a non-differentiable scalar."""
    c = float(c)
    if not np.isfinite(c):
        raise ValueError(f"Expected scale to be finite, found `{c}`.")
    return _apply("scale", a, c=c)


def relu(a: Tensor) -> Tensor:
    return _apply("relu", a)


def tanh(a: Tensor) -> Tensor:
    return _apply("tanh", a)


def mean(a: Tensor) -> Tensor:
    """Mean over all entries, returns a scalar."""
    if a.size == 0:
        raise ValueError("`mean` of an empty tensor is undefined.")
    return _apply("mean", a)


def total(a: Tensor) -> Tensor:
    """Sum over all entries, returns a scalar."""
    return _apply("total", a)


def softmax_rows(a: Tensor) -> Tensor:
    """Row-wise softmax of a 2-dimensional tensor."""
    _ndim(a, 2, "softmax_rows")
    return _apply("softmax_rows", a)


def cross_entropy(logits: Tensor, labels: Any) -> Tensor:
    """Mean cross-entropy of ``logits`` of shape ``[n, C]`` against integer ``labels`` of shape ``[n]``."""
    _ndim(logits, 2, "cross_entropy")
    labels = np.asarray(labels)
    if not np.issubdtype(labels.dtype, np.integer):
        raise TypeError(f"Expected labels to be integers, found `{labels.dtype}`.")
    n, c = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"Expected labels to have shape `{(n,)}`, found `{labels.shape}`.")
    if n == 0:
        raise ValueError("Cross-entropy of an empty batch is undefined.")
    if np.any(labels < 0) or np.any(labels >= c):
        raise ValueError(f"Expected labels to be in `[0, {c})`, found `[{labels.min()}, {labels.max()}]`.")
    labels = labels.astype(np.int64)
    labels.setflags(write=False)
    return _apply("cross_entropy", logits, labels=labels)


def sq_l2_dist(a: Tensor, b: Tensor) -> Tensor:
    """Squared Euclidean distance, returns a scalar."""
    _same_shape(a, b, "sq_l2_dist")
    return _apply("sq_l2_dist", a, b)


def transpose(a: Tensor) -> Tensor:
    _ndim(a, 2, "transpose")
    return _apply("transpose", a)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != a.size:
        raise ValueError(f"Unable to reshape tensor of shape `{a.shape}` into `{shape}`.")
    return _apply("reshape", a, shape=shape)


def broadcast_to(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    try:
        np.broadcast_shapes(a.shape, shape)
    except ValueError:
        raise ValueError(f"Unable to broadcast tensor of shape `{a.shape}` to `{shape}`.") from None
    return _apply("broadcast_to", a, shape=shape)


def sum_to(a: Tensor, shape: Sequence[int]) -> Tensor:
    """Sum ``a`` down to ``shape``, the adjoint of :func:`broadcast_to`."""
    shape = tuple(int(s) for s in shape)
    if np.broadcast_shapes(a.shape, shape) != a.shape:
        raise ValueError(f"Unable to sum tensor of shape `{a.shape}` down to `{shape}`.")
    return _apply("sum_to", a, shape=shape)


def index(a: Tensor, idx: Sequence[int]) -> Tensor:
    """Select a single entry, returns a scalar."""
    idx = tuple(int(i) for i in idx)
    if len(idx) != a.ndim or any(not 0 <= i < s for i, s in zip(idx, a.shape)):
        raise IndexError(f"Index `{idx}` is out of bounds for shape `{a.shape}`.")
    return _apply("index", a, idx=idx)


def embed(a: Tensor, idx: Sequence[int], shape: Sequence[int]) -> Tensor:
    """Place scalar ``a`` at ``idx`` of a zero tensor of ``shape``."""
    if a.shape != ():
        raise ValueError(f"`embed` expects a scalar, found shape `{a.shape}`.")
    return _apply("embed", a, idx=tuple(int(i) for i in idx), shape=tuple(int(s) for s in shape))


def detach(a: Tensor) -> Tensor:
    """Identity on values that blocks gradient flow."""
    return _apply("detach", a)
