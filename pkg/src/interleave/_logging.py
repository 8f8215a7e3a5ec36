import logging

__all__ = ["logger", "set_verbosity"]


def _setup_logger() -> "logging.Logger":
    from rich.console import Console
    from rich.logging import RichHandler

    logger = logging.getLogger("interleave")
    logger.setLevel(logging.INFO)
    console = Console(stderr=True)
    ch = RichHandler(show_path=False, console=console, show_time=False, markup=False)
    logger.addHandler(ch)

    # this prevents double outputs
    logger.propagate = False
    return logger


def set_verbosity(verbose: bool) -> None:
    """Switch the package logger between `INFO` and `DEBUG`."""
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)


logger = _setup_logger()
