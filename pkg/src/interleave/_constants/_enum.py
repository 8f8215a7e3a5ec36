from enum import Enum
from typing import Any, Tuple

__all__ = ["PrettyEnum", "ModeEnum"]


class PrettyEnum(Enum):
    """Enum with a modified :meth:`__str__` and :meth:`__repr__`."""

    def __repr__(self) -> str:
        return repr(self.value)

    def __str__(self) -> str:
        return str(self.value)


class ModeEnum(str, PrettyEnum):
    """String enum which prints the available values when an invalid value has been passed."""

    @classmethod
    def _missing_(cls, value: object) -> Any:
        if isinstance(value, str):
            lowered = value.lower()
            for member in cls:
                if member.value == lowered:
                    return member
        raise ValueError(f"Invalid option `{value}` for `{cls.__name__}`. Valid options are: `{list(cls.values())}`.")

    @classmethod
    def values(cls) -> Tuple[str, ...]:
        """Valid option values, in declaration order."""
        return tuple(m.value for m in cls)
