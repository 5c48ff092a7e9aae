"""Exception hierarchy shared by every stage of the engine."""

from __future__ import annotations


class ADError(Exception):
    """Base class for all engine errors."""


class GraphError(ADError):
    """A graph was constructed or loaded in violation of its invariants."""


class DomainError(ADError, ValueError):
    """A primitive was applied outside its mathematical domain.

    ``node`` and ``op`` are filled in when the error is raised while
    evaluating a graph, so the caller can tell which instruction failed.
    """

    def __init__(self, message: str, *, op=None, node: int | None = None):
        super().__init__(message)
        self.reason = message
        self.op = op
        self.node = node

    def at(self, node: int, op=None) -> "DomainError":
        """Return a copy of this error annotated with a node id."""
        err = type(self)(self.reason, op=op if op is not None else self.op, node=node)
        return err

    def __str__(self) -> str:
        if self.node is None:
            return self.reason
        op = f" ({self.op.value})" if self.op is not None else ""
        return f"node {self.node}{op}: {self.reason}"


class StaticDomainError(DomainError):
    """Constant folding hit a domain error before any input was bound."""


class BindingError(ADError, KeyError):
    def __init__(self, message: str, name: str | None = None):
        super().__init__(message)
        self.message = message
        self.name = name

    def __str__(self) -> str:
        return self.message


class ContractError(ADError):
    """An operation was called outside its contract (e.g. grad on a multi-output graph)."""


class SourceError(ADError):
    """Lexing, parsing or scoping failure in DSL source text."""

    def __init__(self, kind: str, line: int, column: int, message: str):
        super().__init__(f"{line}:{column}: {kind} error: {message}")
        self.kind = kind
        self.line = line
        self.column = column
        self.message = message


class GraphFileError(ADError):
    """Malformed or incompatible ``adgraph`` file."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
