from typing import Optional, Sequence
from pathlib import Path
import argparse

from interleave._logging import logger, set_verbosity
from interleave.verify import ReplayError
from interleave.engine import DivergenceError
from interleave.autodiff import NonFiniteError
from interleave.cli._config import ConfigError, ExperimentConfig
from interleave.cli._commands import cmd_run, cmd_sweep, cmd_compare, cmd_gradcheck, cmd_discretize
from interleave._constants._constants import ExitCode, SweepAxis

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="interleave", description="Architecture search with interleaved learners.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at debug level.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="YAML experiment configuration.")
    common.add_argument("--out", type=Path, default=None, help="Output directory.")
    common.add_argument("--threads", type=int, default=None, help="Number of worker processes.")

    sub.add_parser("run", parents=[common], help="Run the configured method for every seed.")
    sweep = sub.add_parser("sweep", parents=[common], help="Sweep one hyper-parameter.")
    sweep.add_argument("--axis", required=True, choices=SweepAxis.values(), help="Hyper-parameter to sweep.")
    sub.add_parser("gradcheck", parents=[common], help="Check gradients against finite differences.")
    sub.add_parser("compare", parents=[common], help="Compare interleaved, blocked and joint training.")

    disc = sub.add_parser("discretize", help="Keep the strongest operation of every edge.")
    disc.add_argument("report", type=Path, help="Run report (.json) or architecture file (.yaml).")
    disc.add_argument("--out", type=Path, default=None, help="Output directory.")
    return parser


def _load(args: argparse.Namespace) -> ExperimentConfig:
    if args.threads is not None and args.threads < 1:
        raise ConfigError(f"Expected `--threads` to be positive, found `{args.threads}`.")
    return ExperimentConfig.from_yaml(args.config).with_overrides(output_dir=args.out, threads=args.threads)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the ``interleave`` command.

    Returns
    -------
    The exit code, see :class:`interleave._constants._constants.ExitCode`.
    """
    args = build_parser().parse_args(None if argv is None else list(argv))
    set_verbosity(args.verbose)
    try:
        if args.command == "discretize":
            cmd_discretize(args.report, out=args.out)
            return ExitCode.OK
        cfg = _load(args)
        if args.command == "run":
            cmd_run(cfg)
        elif args.command == "sweep":
            cmd_sweep(cfg, args.axis)
        elif args.command == "compare":
            cmd_compare(cfg)
        elif args.command == "gradcheck" and not cmd_gradcheck(cfg):
            logger.error("Gradient check failed.")
            return ExitCode.CHECK_FAILED
    except ValueError as e:
        logger.error(str(e))
        return ExitCode.CONFIG_ERROR
    except (DivergenceError, NonFiniteError) as e:
        logger.error(f"Run diverged: {e}")
        return ExitCode.DIVERGENCE
    except ReplayError as e:
        logger.error(f"Check failed: {e}")
        return ExitCode.CHECK_FAILED
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        return ExitCode.IO_ERROR
    return ExitCode.OK
