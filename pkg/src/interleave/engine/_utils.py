from typing import Any, Tuple, Mapping, Callable

import wrapt

from interleave.autodiff import NonFiniteError
from interleave.engine._state import LearnerState, DivergenceError

__all__ = ["guard_stage"]


@wrapt.decorator
def guard_stage(wrapped: Callable[..., Any], instance: Any, args: Tuple[Any, ...], kwargs: Mapping[str, Any]) -> Any:
    """Translate non-finite values inside a stage update into :class:`interleave.engine.DivergenceError`."""
    ls = args[0] if args else kwargs.get("ls")
    stage = ls.stage if isinstance(ls, LearnerState) else None
    try:
        return wrapped(*args, **kwargs)
    except NonFiniteError as e:
        raise DivergenceError(f"Non-finite value in `{wrapped.__name__}`: {e}", stage=stage) from e
