"""Exception types shared across the scanner."""

from __future__ import annotations


class CgeError(Exception):
    """Base class for every error raised by cgescan."""


class LexError(CgeError):
    def __init__(self, message: str, line: int, column: int, snippet: str = ""):
        super().__init__(f"{line}:{column}: {message} near {snippet!r}")
        self.line = line
        self.column = column
        self.snippet = snippet


class ParseError(CgeError):
    def __init__(self, expected: str, found: str, line: int, column: int):
        super().__init__(f"{line}:{column}: expected {expected}, found {found!r}")
        self.expected = expected
        self.found = found
        self.line = line
        self.column = column


class UnknownFunction(CgeError, KeyError):
    def __str__(self) -> str:
        return Exception.__str__(self)


class GraphBuildError(CgeError):
    pass


class DimensionError(CgeError, ValueError):
    pass


class NoCoreNode(CgeError):
    pass


class ShapeError(CgeError, ValueError):
    pass


class EmptyGraph(CgeError, ValueError):
    pass


class ConfigError(CgeError, ValueError):
    pass


class DataError(CgeError, ValueError):
    pass


class CheckpointMismatch(CgeError):
    pass


class ManifestError(CgeError):
    pass
