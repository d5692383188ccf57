"""Exception types shared across the toolkit."""

from __future__ import annotations


class AssemblyTraceError(Exception):
    """Base class for all toolkit errors."""


class ParseError(AssemblyTraceError, ValueError):
    """Malformed input file (hierarchy JSON, OBJ text, record payload)."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc += f" [{path}"
            loc += f":{line}]" if line is not None else "]"
        elif line is not None:
            loc += f" [line {line}]"
        super().__init__(message + loc)
        self.path = path
        self.line = line


class RangeError(AssemblyTraceError, IndexError):
    """Index outside the valid 1..N step range."""


class StructureError(AssemblyTraceError, ValueError):
    """Mismatched component lengths when assembling a trace."""


class ConfigError(AssemblyTraceError, ValueError):
    """Invalid configuration value (ratios, dimensions, caps)."""


class InvariantError(AssemblyTraceError):
    """A documented invariant was violated by the caller or by internal state."""


class ShapeError(AssemblyTraceError, ValueError):
    """Operands have incompatible dimensions."""


class NumericError(AssemblyTraceError, ValueError):
    """Non-finite value where a finite number is required."""


class EndpointError(AssemblyTraceError, RuntimeError):
    """Transport-level failure talking to a language-model endpoint, after retries."""


class EmptyAnnotationError(EndpointError):
    """Endpoint returned an empty annotation."""


class JudgeFormatError(AssemblyTraceError, ValueError):
    """Judge response could not be parsed into the forced format, even after a re-ask."""
