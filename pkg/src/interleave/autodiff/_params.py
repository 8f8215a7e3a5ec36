from types import MappingProxyType
from typing import Any, Dict, Tuple, Mapping, Callable, Iterator, Optional, TypeVar

import numpy as np

from interleave._types import ArrayLike
from interleave.autodiff._tensor import Tensor, constant

__all__ = ["ParamSet", "GradMap"]

P = TypeVar("P", bound="ParamSet")


class ParamSet(Mapping[str, Tensor]):
    """Immutable mapping from parameter names to :class:`interleave.autodiff.Tensor`.

    Iteration is always in sorted name order, so flattening and reductions are reproducible.

    Parameters
    ----------
    params
        Mapping from names to tensors or array-likes. Array-likes are converted to constants.
    """

    def __init__(self, params: Optional[Mapping[str, Any]] = None):
        params = {} if params is None else params
        data: Dict[str, Tensor] = {}
        for name in sorted(params):
            if not isinstance(name, str) or not name:
                raise TypeError(f"Expected parameter names to be non-empty strings, found `{name!r}`.")
            value = params[name]
            data[name] = value if isinstance(value, Tensor) else constant(value, name=name)
        self._data = MappingProxyType(data)

    def _replace(self: P, params: Mapping[str, Any]) -> P:
        return type(self)(params)

    def __getitem__(self, key: str) -> Tensor:
        try:
            return self._data[key]
        except KeyError:
            raise KeyError(f"Unknown parameter `{key}`. Valid options are: `{list(self._data)}`.") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    @property
    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {k: v.shape for k, v in self._data.items()}

    @property
    def n_params(self) -> int:
        """Total number of scalar entries."""
        return int(sum(v.size for v in self._data.values()))

    def map(self: P, fn: Callable[[str, Tensor], Any]) -> P:
        return self._replace({k: fn(k, v) for k, v in self._data.items()})

    def detach(self: P) -> P:
        """Copy with every tensor turned into a constant."""
        return self.map(lambda k, v: constant(v, name=k))

    def to_numpy(self) -> Dict[str, ArrayLike]:
        return {k: v.numpy() for k, v in self._data.items()}

    def flatten(self) -> ArrayLike:
        """Concatenate all entries in name order."""
        if not self._data:
            return np.zeros((0,), dtype=np.float64)
        return np.concatenate([v.data.reshape(-1) for v in self._data.values()])

    def unflatten(self: P, flat: ArrayLike) -> P:
        """Inverse of :meth:`flatten`, returns constants."""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_params,):
            raise ValueError(f"Expected flat array to have shape `{(self.n_params,)}`, found `{flat.shape}`.")
        out, offset = {}, 0
        for k, v in self._data.items():
            out[k] = flat[offset : offset + v.size].reshape(v.shape)
            offset += v.size
        return self._replace(out)

    def check_compatible(self, other: "ParamSet") -> None:
        """Raise if ``other`` does not share names and shapes."""
        if list(self) != list(other):
            raise ValueError(f"Parameter names differ: `{list(self)}` and `{list(other)}`.")
        for k in self:
            if self[k].shape != other[k].shape:
                raise ValueError(f"Parameter `{k}` has shape `{self[k].shape}` and `{other[k].shape}`.")

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}[n={len(self)}, n_params={self.n_params}]"

    def __str__(self) -> str:
        return repr(self)


class GradMap(ParamSet):
    """Gradients keyed by parameter name. A missing key means a zero gradient."""

    def get_or_zeros(self, name: str, like: Tensor) -> Tensor:
        if name in self:
            return self[name]
        return constant(np.zeros(like.shape, dtype=np.float64), name=name)

    def dense(self, params: ParamSet) -> "GradMap":
        """Gradients for every name of ``params``, zero-filled."""
        return GradMap({k: self.get_or_zeros(k, v) for k, v in params.items()})

    def norm(self) -> float:
        """Euclidean norm over all entries."""
        return float(np.sqrt(sum(float(np.sum(v.data * v.data)) for v in self.values())))
