from interleave.supernet._ops import (
    encode,
    predict,
    apply_op,
    init_head,
    task_loss,
    mixed_edge,
    param_name,
    head_logits,
    init_encoder,
)
from interleave.supernet._arch import ArchParams, Architecture, discretize
from interleave.supernet._cell import Edge, OpKind, CellSpec, SMOOTH_OPS, DEFAULT_OPS
