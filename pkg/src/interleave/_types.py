from typing import Tuple, Union, Literal, Sequence

import numpy as np

__all__ = ["ArrayLike", "IntArray", "Shape_t", "Numeric_t"]


try:
    from numpy.typing import NDArray

    ArrayLike = NDArray[np.float64]
    IntArray = NDArray[np.int64]
except (ImportError, TypeError):
    ArrayLike = np.ndarray  # type: ignore[misc]
    IntArray = np.ndarray  # type: ignore[misc]

Numeric_t = Union[int, float]
Shape_t = Tuple[int, ...]

OpKind_t = Literal["zero", "identity", "linear", "linear_relu", "linear_tanh"]
HypergradMode_t = Literal["first_order", "unrolled"]
Policy_t = Literal["interleaved", "blocked"]
Method_t = Literal["il", "mtl", "blocked"]
SweepAxis_t = Literal["lambda", "rounds", "order"]
TaskOrder_t = Sequence[int]
