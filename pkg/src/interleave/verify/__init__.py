from interleave.verify._check import (
    ReplayError,
    CheckReport,
    gradient_check,
    relative_error,
    hypergrad_check,
    compare_gradients,
)
from interleave.verify._finite_diff import finite_diff_gradient
