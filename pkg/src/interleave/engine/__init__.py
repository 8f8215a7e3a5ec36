from interleave.engine._state import StageTrace, StepResult, LearnerState, DivergenceError
from interleave.engine._config import EngineConfig, HypergradMode
from interleave.engine._output import RunReport, StageRecord, IterationRecord
from interleave.engine._runner import (
    Pipeline,
    Objective,
    BaseRunner,
    BlockedRunner,
    MultiTaskRunner,
    InterleavedRunner,
    run_il,
    run_mtl,
    make_runner,
    run_blocked,
)
from interleave.engine._updates import head_update, stage_update, proximal_term, stage_update_first
from interleave.engine._evaluate import (
    Comparison,
    RetrainResult,
    summarize,
    effect_sizes,
    compare_methods,
    retrain_discretized,
)
from interleave.engine._hypergrad import ArchUpdate, arch_update, final_traces, validation_objective
