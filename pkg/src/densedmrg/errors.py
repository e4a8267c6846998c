"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class TensorNetworkError(Exception):
    """Base class for all errors raised by densedmrg."""


class ShapeError(TensorNetworkError, ValueError):
    """Index dimensions do not line up (contraction, axpy, reshape, MPO blocks)."""


class PermutationError(ShapeError):
    """An index order is not a permutation of the tensor's index positions."""


class GroupingError(ShapeError):
    """Index groups do not partition the tensor's indices."""


class DecompositionError(TensorNetworkError, ArithmeticError):
    """A matrix factorization failed after every fallback."""


class NormalizationError(TensorNetworkError, ValueError):
    """A state is zero or not normalized where a unit state is required."""


class SiteRangeError(TensorNetworkError, IndexError):
    """A lattice site or bond index is out of range."""


class StorageError(TensorNetworkError, OSError):
    """Reading or writing a disk-backed tensor failed."""


class FormatError(StorageError):
    """A tensor file has a bad header or an unexpected scalar type."""


class ResourceError(TensorNetworkError, MemoryError):
    """A dense object would exceed the configured memory guard."""


class InternalStateError(TensorNetworkError, RuntimeError):
    """Engine bookkeeping (environments, orthogonality center) is inconsistent."""


class ConfigError(TensorNetworkError, ValueError):
    """A run configuration file is malformed; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


class ModelError(ConfigError):
    """A configuration parses but names an unknown model or operator."""
