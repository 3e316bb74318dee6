"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


class NRBError(Exception):
    """Base class for all toolkit errors."""


class ParseError(NRBError):
    def __init__(self, message: str, span: SourceSpan | None = None):
        self.span = span
        where = f"{span}: " if span else ""
        super().__init__(f"{where}{message}")


class NonModalRequired(ParseError):
    """A modal operator appeared where only a plain boolean term is allowed."""


class EvaluationError(NRBError):
    pass


class UnboundVariable(EvaluationError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound variable {name!r}")


class SizeLimitExceeded(NRBError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"state space of {size} states exceeds the cap of {cap}")


class DomainNotClosed(NRBError):
    """An out-of-range value would have to be used as the input of further computation."""

    def __init__(self, var: str, value: int, span: SourceSpan | None = None):
        self.var = var
        self.value = value
        self.span = span
        where = f" at {span}" if span else ""
        super().__init__(f"variable {var!r} left its declared range with value {value}{where}")


class ScopeError(NRBError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class NotDeterministic(NRBError):
    pass


class TripleDoesNotHold(NRBError):
    def __init__(self, counterexamples):
        self.counterexamples = list(counterexamples)
        super().__init__(f"triple does not hold ({len(self.counterexamples)} counterexample(s))")


class ProofGenerationError(NRBError):
    """The rules cannot reach the requested judgement (e.g. strict weakening under open assumptions)."""
