from typing import TYPE_CHECKING, Any, Dict, List, Tuple, Union, Mapping, Iterator, Optional, Sequence
from contextvars import ContextVar
from dataclasses import field, dataclass

import numpy as np

from interleave._types import Shape_t, ArrayLike

if TYPE_CHECKING:
    from interleave.autodiff._params import ParamSet
    from interleave.autodiff._primitives import Primitive

__all__ = ["Tensor", "Node", "Tape", "NonFiniteError", "TapeError", "active_tape", "constant"]


class NonFiniteError(FloatingPointError):
    """Raised when an operation produces or receives a non-finite value."""


class TapeError(RuntimeError):
    """Raised when a tape is used inconsistently, e.g. differentiating with respect to a non-leaf."""


_ACTIVE_TAPE: ContextVar[Optional["Tape"]] = ContextVar("interleave_active_tape", default=None)


def _as_array(value: Any) -> ArrayLike:
    arr = np.array(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"Expected all entries to be finite, found `{np.sum(~np.isfinite(arr))}` non-finite.")
    arr.setflags(write=False)
    return arr


class Tensor:
    """Immutable dense float64 array.

    A tensor is either a constant (not attached to any tape), a leaf of a :class:`Tape` or the output of a
    recorded :class:`Node`.

    Parameters
    ----------
    value
        Array-like value. It is copied and made read-only.
    name
        Optional name, only used for error messages and representations.
    """

    __slots__ = ("_data", "_tape", "_node", "_name", "__weakref__")

    def __init__(self, value: Any, *, name: Optional[str] = None):
        self._data = _as_array(value)
        self._tape: Optional["Tape"] = None
        self._node: Optional["Node"] = None
        self._name = name

    @classmethod
    def _wrap(cls, data: ArrayLike, tape: Optional["Tape"], name: Optional[str] = None) -> "Tensor":
        obj = cls.__new__(cls)
        obj._data = _as_array(data)
        obj._tape = tape
        obj._node = None
        obj._name = name
        return obj

    @property
    def data(self) -> ArrayLike:
        """Read-only view of the values."""
        return self._data

    @property
    def shape(self) -> Shape_t:
        return self._data.shape

    @property
    def ndim(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return int(self._data.size)

    @property
    def name(self) -> Optional[str]:
        return self._name

    @property
    def tape(self) -> Optional["Tape"]:
        """Tape this tensor belongs to, `None` for constants."""
        return self._tape

    @property
    def node(self) -> Optional["Node"]:
        """Node which produced this tensor, `None` for leaves and constants."""
        return self._node

    @property
    def is_leaf(self) -> bool:
        return self._tape is not None and self._node is None

    @property
    def is_constant(self) -> bool:
        return self._tape is None

    def item(self) -> float:
        if self.size != 1:
            raise ValueError(f"Expected a tensor with exactly `1` element, found `{self.size}`.")
        return float(self._data.reshape(-1)[0])

    def numpy(self) -> ArrayLike:
        """Writable copy of the values."""
        return np.array(self._data, copy=True)

    def __array__(self, dtype: Any = None, copy: Any = None) -> ArrayLike:
        return self._data if dtype is None else self._data.astype(dtype)

    # operator sugar, each one dispatches to a registered primitive
    def __add__(self, other: "Tensor") -> "Tensor":
        from interleave.autodiff._primitives import add

        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        from interleave.autodiff._primitives import sub

        return sub(self, other)

    def __mul__(self, other: Union["Tensor", float]) -> "Tensor":
        from interleave.autodiff._primitives import mul, scale

        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        from interleave.autodiff._primitives import scale

        return scale(self, -1.0)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from interleave.autodiff._primitives import matmul

        return matmul(self, other)

    def __repr__(self) -> str:
        kind = "constant" if self.is_constant else ("leaf" if self.is_leaf else "node")
        name = "" if self._name is None else f"name={self._name!r}, "
        return f"{self.__class__.__name__}[{name}shape={self.shape}, {kind}]"

    def __str__(self) -> str:
        return repr(self)


def constant(value: Any, name: Optional[str] = None) -> Tensor:
    """Create a tensor which is not attached to any tape."""
    if isinstance(value, Tensor):
        return Tensor._wrap(value.data, None, name=name if name is not None else value.name)
    return Tensor(value, name=name)


@dataclass(frozen=True, repr=False, eq=False)
class Node:
    """Single recorded primitive application."""

    #: position on the tape
    index: int
    #: primitive which was applied
    primitive: "Primitive"
    #: input tensors, in call order
    inputs: Tuple[Tensor, ...]
    #: output tensor
    output: Tensor
    #: non-differentiable attributes, e.g. the labels of a cross-entropy
    attrs: Mapping[str, Any] = field(default_factory=dict)

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}[index={self.index}, primitive={self.primitive.name!r}]"


class Tape:
    """Ordered record of primitive applications.

    Operations are recorded on the active tape, which is set by entering the tape as a context manager::

        with Tape() as tape:
            w = tape.leaf(np.ones((2, 2)), name="w")
            loss = mean(matmul(x, w))
    """

    def __init__(self) -> None:
        self._nodes: List[Node] = []
        self._leaves: Dict[int, Tensor] = {}
        self._tokens: List[Any] = []

    def __enter__(self) -> "Tape":
        self._tokens.append(_ACTIVE_TAPE.set(self))
        return self

    def __exit__(self, *_: Any) -> None:
        _ACTIVE_TAPE.reset(self._tokens.pop())

    @property
    def nodes(self) -> Tuple[Node, ...]:
        return tuple(self._nodes)

    @property
    def leaves(self) -> Tuple[Tensor, ...]:
        return tuple(self._leaves.values())

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self) -> Iterator[Node]:
        return iter(self._nodes)

    def owns(self, tensor: Tensor) -> bool:
        """Whether ``tensor`` is a leaf or a node output of this tape."""
        return tensor.tape is self

    def is_leaf(self, tensor: Tensor) -> bool:
        return tensor.tape is self and tensor.node is None and id(tensor) in self._leaves

    def leaf(self, value: Any, name: Optional[str] = None) -> Tensor:
        """Register a new differentiable input."""
        if isinstance(value, Tensor):
            value, name = value.data, (name if name is not None else value.name)
        t = Tensor._wrap(value, self, name=name)
        self._leaves[id(t)] = t
        return t

    def watch(self, params: "ParamSet") -> "ParamSet":
        """Register every parameter of ``params`` as a leaf and return the watched copy."""
        return params._replace({k: self.leaf(v, name=k) for k, v in params.items()})

    def record(
        self, primitive: "Primitive", inputs: Sequence[Tensor], output: ArrayLike, attrs: Mapping[str, Any]
    ) -> Tensor:
        out = Tensor._wrap(output, self)
        node = Node(index=len(self._nodes), primitive=primitive, inputs=tuple(inputs), output=out, attrs=dict(attrs))
        out._node = node
        self._nodes.append(node)
        return out

    def replay(self) -> None:
        """Recompute every node from its recorded inputs and compare bit-wise.

        Raises
        ------
        TapeError
            If any node does not reproduce its recorded output exactly.
        """
        for node in self._nodes:
            value = node.primitive.forward(*(x.data for x in node.inputs), **node.attrs)
            value = np.asarray(value, dtype=np.float64)
            if value.shape != node.output.shape or value.tobytes() != node.output.data.tobytes():
                raise TapeError(f"Node `{node.index}` (`{node.primitive.name}`) is not reproducible.")

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}[nodes={len(self._nodes)}, leaves={len(self._leaves)}]"


def active_tape() -> Tape:
    """Return the tape operations are currently recorded on.

    Raises
    ------
    TapeError
        If no tape is active.
    """
    tape = _ACTIVE_TAPE.get()
    if tape is None:
        raise TapeError("No active tape. Use `with Tape() as tape:` before applying operations.")
    return tape
