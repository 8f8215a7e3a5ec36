from interleave.autodiff._params import GradMap, ParamSet
from interleave.autodiff._tensor import Node, Tape, Tensor, TapeError, NonFiniteError, constant, active_tape
from interleave.autodiff._backward import grad, backward
from interleave.autodiff._primitives import (
    add,
    mul,
    sub,
    mean,
    relu,
    tanh,
    embed,
    index,
    scale,
    total,
    detach,
    matmul,
    sum_to,
    reshape,
    Primitive,
    transpose,
    sq_l2_dist,
    broadcast_to,
    softmax_rows,
    cross_entropy,
    get_primitive,
    registered_primitives,
)
