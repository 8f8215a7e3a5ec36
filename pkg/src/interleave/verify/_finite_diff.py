from typing import Callable

import numpy as np

from interleave.autodiff import GradMap, ParamSet, NonFiniteError

__all__ = ["finite_diff_gradient"]


def finite_diff_gradient(f: Callable[[ParamSet], float], params: ParamSet, eps: float = 1e-5) -> GradMap:
    """Central finite differences ``(f(x + eps * e_i) - f(x - eps * e_i)) / (2 * eps)`` of every coordinate.

    Parameters
    ----------
    f
        Deterministic scalar function of a parameter set.
    params
        Point to differentiate at.
    eps
        Perturbation size.

    Returns
    -------
    Gradient estimate with the names and shapes of ``params``.

    Raises
    ------
    NonFiniteError
        If ``f`` returns a non-finite value.
    """
    if not eps > 0:
        raise ValueError(f"Expected `eps` to be positive, found `{eps}`.")
    x = params.flatten()
    res = np.zeros_like(x)

    def call(flat: np.ndarray) -> float:
        value = float(f(params.unflatten(flat)))
        if not np.isfinite(value):
            raise NonFiniteError(f"Function returned non-finite value `{value}`.")
        return value

    for i in range(x.size):
        plus, minus = x.copy(), x.copy()
        plus[i] += eps
        minus[i] -= eps
        res[i] = (call(plus) - call(minus)) / (2.0 * eps)
    return GradMap(params.unflatten(res))
