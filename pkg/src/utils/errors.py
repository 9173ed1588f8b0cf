"""
Exception hierarchy shared by every package in the engine
"""
from typing import Optional


class ApproxNasError(Exception):
    """Base class for all errors raised by the engine"""


class ParameterError(ApproxNasError, ValueError):
    """An argument is outside its documented range"""


class ConfigurationError(ApproxNasError, ValueError):
    """A template, run configuration or scenario is unusable"""


class FormatError(ApproxNasError, ValueError):
    """A binary or structured-text file does not follow its layout"""

    def __init__(self, message: str, path: Optional[str] = None,
                 offset: Optional[int] = None, record: Optional[int] = None):
        details = []
        if path is not None:
            details.append(f"file={path}")
        if record is not None:
            details.append(f"record={record}")
        if offset is not None:
            details.append(f"offset={offset}")
        super().__init__(f"{message} ({', '.join(details)})" if details else message)
        self.path = path
        self.offset = offset
        self.record = record


class IntegrityError(ApproxNasError, RuntimeError):
    """A genotype or archive is internally inconsistent"""


class ShapeError(ApproxNasError, ValueError):
    """Tensor shapes do not fit the requested operation"""


class CompileError(ShapeError):
    """An active subgraph cannot be lowered to a layer graph"""

    def __init__(self, message: str, node=None):
        super().__init__(f"node {tuple(node)}: {message}" if node is not None else message)
        self.node = node


class NumericError(ApproxNasError, ValueError):
    """Non-finite values reached a numeric kernel"""


class TrainingError(ApproxNasError, RuntimeError):
    """Training diverged or could not proceed"""


class StateError(ApproxNasError, RuntimeError):
    """An object was used before reaching the required state"""
