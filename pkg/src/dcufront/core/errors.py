"""Exception hierarchy shared by every dcufront package."""
from typing import Iterable, List, Optional, Sequence, Tuple


class DcufrontError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(DcufrontError, ValueError):
    """A tensor reached a node with the wrong shape."""

    def __init__(self, node: str, expected: Sequence, actual: Sequence, detail: str = ""):
        self.node = node
        self.expected = tuple(expected)
        self.actual = tuple(actual)
        message = f"{node}: expected shape {self.expected}, got {self.actual}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class GraphStateError(DcufrontError, RuntimeError):
    """Graph used out of order (e.g. backward before forward)."""


class GradcheckError(DcufrontError, RuntimeError):
    """Finite-difference probe produced a non-finite loss."""

    def __init__(self, parameter: str, index: Tuple[int, ...], loss: float):
        self.parameter = parameter
        self.index = index
        super().__init__(
            f"non-finite loss ({loss}) when perturbing parameter '{parameter}' at index {index}"
        )


class GeometryError(DcufrontError, ValueError):
    """Time-frequency geometry is inconsistent."""


class SignalError(DcufrontError, ValueError):
    """Signal values outside an operation's domain (e.g. negative power)."""


class WavFormatError(DcufrontError, ValueError):
    """WAV header does not match the supported format."""

    def __init__(self, path: str, field: str, value, expected):
        self.field = field
        super().__init__(f"{path}: unsupported {field} {value!r} (expected {expected!r})")


class ConfigError(DcufrontError, ValueError):
    """Invalid configuration value or unknown key."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class CheckpointError(DcufrontError, ValueError):
    """Checkpoint file is corrupt or of an unknown format."""


class NonFiniteLossError(DcufrontError, RuntimeError):
    """Training produced a NaN/Inf loss."""

    def __init__(self, epoch: int, step: int, last_good: Optional[str]):
        self.epoch = epoch
        self.step = step
        self.last_good = last_good
        kept = f"; last good checkpoint kept at {last_good}" if last_good else ""
        super().__init__(f"non-finite loss at epoch {epoch}, step {step}{kept}")


class ParameterMismatchError(DcufrontError, ValueError):
    """A parameter set does not fit the target architecture."""

    def __init__(
        self,
        missing: Iterable[str] = (),
        unexpected: Iterable[str] = (),
        mismatched: Iterable[Tuple[str, tuple, tuple]] = (),
    ):
        self.missing: List[str] = sorted(missing)
        self.unexpected: List[str] = sorted(unexpected)
        self.mismatched: List[Tuple[str, tuple, tuple]] = sorted(mismatched)
        super().__init__("parameter mismatch:\n" + self.diff())

    def diff(self) -> str:
        lines = [f"- {name} (missing)" for name in self.missing]
        lines += [f"+ {name} (unexpected)" for name in self.unexpected]
        lines += [
            f"~ {name}: expected {expected}, got {actual}"
            for name, expected, actual in self.mismatched
        ]
        return "\n".join(lines)
