from typing import Dict, Union, Mapping

import numpy as np

from interleave._docs._docs import d
from interleave.autodiff._params import GradMap, ParamSet
from interleave.autodiff._tensor import Tape, Tensor, TapeError, constant
from interleave.autodiff._primitives import add

__all__ = ["backward", "grad"]


@d.dedent
def backward(
    tape: Tape,
    root: Tensor,
    wrt: Union[ParamSet, Mapping[str, Tensor]],
    *,
    create_graph: bool = False,
) -> GradMap:
    """Reverse-mode gradient of a scalar with respect to leaves of ``tape``.

    Parameters
    ----------
    %(tape)s
    root
        Scalar tensor recorded on ``tape``.
    wrt
        Leaves to differentiate with respect to, keyed by name.
    %(create_graph)s

    Returns
    -------
    :class:`interleave.autodiff.GradMap` with one entry per name of ``wrt`` that ``root`` depends on.

    Raises
    ------
    ValueError
        If ``root`` is not a scalar.
    TapeError
        If ``root`` is not on ``tape`` or an entry of ``wrt`` is not a leaf of ``tape``.
    """
    if root.shape != ():
        raise ValueError(f"Expected root to be a scalar, found shape `{root.shape}`.")
    if not tape.owns(root):
        raise TapeError("Root was not recorded on this tape.")
    for name, t in wrt.items():
        if not tape.is_leaf(t):
            raise TapeError(f"Unable to differentiate with respect to `{name}`, it is not a leaf of this tape.")

    # without `create_graph`, the cotangent graph lives on a throw-away tape
    ctx = tape if create_graph else Tape()
    with ctx:
        cotangents: Dict[int, Tensor] = {id(root): constant(np.ones((), dtype=np.float64))}
        stop = -1 if root.node is None else root.node.index
        nodes = tape.nodes[: stop + 1]
        for node in reversed(nodes):
            g = cotangents.pop(id(node.output), None)
            if g is None:
                continue
            for inp, gi in zip(node.inputs, node.primitive.vjp(g, node)):
                if gi is None or not tape.owns(inp):
                    continue
                key = id(inp)
                cotangents[key] = add(cotangents[key], gi) if key in cotangents else gi

    res: Dict[str, Tensor] = {}
    for name, t in wrt.items():
        g = cotangents.get(id(t))
        if g is None:
            continue
        res[name] = g if create_graph else constant(g, name=name)
    return GradMap(res)


def grad(tape: Tape, root: Tensor, wrt: Tensor, *, create_graph: bool = False) -> Tensor:
    """Gradient of ``root`` with respect to the single leaf ``wrt``, zero if it does not depend on it."""
    out = backward(tape, root, {"x": wrt}, create_graph=create_graph)
    return out.get_or_zeros("x", wrt)
