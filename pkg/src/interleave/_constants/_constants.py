from enum import IntEnum, unique

from interleave._constants._enum import ModeEnum

__all__ = ["ExitCode", "Method", "SweepAxis", "SCHEMA_VERSION", "ENV_OUT_DIR", "ENV_THREADS"]

SCHEMA_VERSION = 1

ENV_OUT_DIR = "INTERLEAVE_OUT_DIR"
ENV_THREADS = "INTERLEAVE_THREADS"


@unique
class ExitCode(IntEnum):
    OK = 0
    CONFIG_ERROR = 2
    DIVERGENCE = 3
    CHECK_FAILED = 4
    IO_ERROR = 5


@unique
class Method(ModeEnum):
    IL = "il"
    MTL = "mtl"
    BLOCKED = "blocked"


@unique
class SweepAxis(ModeEnum):
    LAMBDA = "lambda"
    ROUNDS = "rounds"
    ORDER = "order"
