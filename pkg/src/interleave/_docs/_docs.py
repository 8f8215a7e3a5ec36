from docrep import DocstringProcessor

_tape = """\
tape
    :class:`interleave.autodiff.Tape` the operations are recorded on."""
_cell = """\
cell
    :class:`interleave.supernet.CellSpec` describing the shared encoder."""
_arch = """\
arch
    :class:`interleave.supernet.ArchParams` with one logit vector per edge of ``cell``."""
_batch = """\
batch
    :class:`interleave.data.Dataset` with features of shape ``[n, d]`` and integer labels of shape ``[n]``."""
_eta = """\
eta
    Learning rate of the one-step weight and head updates."""
_lam = """\
lam
    Strength of the proximal term pulling a learner's encoder towards its predecessor's updated encoder."""
_rounds = """\
rounds
    Number of rounds ``M``; the head update is only applied in round ``M``."""
_create_graph = """\
create_graph
    Whether to record the backward pass on the tape so the result stays differentiable.
    If `False`, gradients are computed on a scratch tape and returned as constants."""
_config = """\
config
    :class:`interleave.engine.EngineConfig` with the hyper-parameters of the run."""
_tasks = """\
tasks
    Sequence of :class:`interleave.data.TaskData`, one per learner. Task ``k`` is the ``k-1``-th entry."""
_seed = """\
seed
    Root seed. All random streams are derived from it deterministically."""
_save = """\
save
    Path where to save the figure. If `None`, the figure is not saved."""
_return_fig = """\
return_fig
    Whether to return the figure."""
_figsize = """\
figsize
    Size of the figure in inches."""
_dpi = """\
dpi
    Dots per inch."""
_step_result = """\
:class:`interleave.engine.StepResult` holding the updated parameters, the training loss and the gradients
    that were used for the step."""

d = DocstringProcessor(
    tape=_tape,
    cell=_cell,
    arch=_arch,
    batch=_batch,
    eta=_eta,
    lam=_lam,
    rounds=_rounds,
    create_graph=_create_graph,
    config=_config,
    tasks=_tasks,
    seed=_seed,
    save=_save,
    return_fig=_return_fig,
    figsize=_figsize,
    dpi=_dpi,
    step_result=_step_result,
)
