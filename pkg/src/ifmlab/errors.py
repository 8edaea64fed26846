"""Exception hierarchy shared by the library and the CLI."""


class IfmError(Exception):
    """Base class for every error raised by ifmlab."""


class DimensionError(IfmError, ValueError):
    pass


class ValidationError(IfmError, ValueError):
    """A circuit, basis or detector map violates its invariants.

    ``diagnostics`` holds the individual findings when there are several.
    """

    def __init__(self, message, diagnostics=(), line=None, kind="validation"):
        super().__init__(message)
        self.diagnostics = list(diagnostics)
        self.line = line
        self.kind = kind


class ZeroProbabilityError(IfmError, ArithmeticError):
    """Conditioning on an outcome whose probability is (numerically) zero."""


class ParseError(IfmError, ValueError):
    """Malformed experiment text. ``line`` is 1-based."""

    KINDS = (
        "encoding",
        "syntax",
        "unknown-section",
        "unresolved-label",
        "duplicate-mode",
        "duplicate-label",
        "malformed-number",
        "init-not-normalized",
        "empty-init",
    )

    def __init__(self, kind: str, line: int, message: str):
        assert kind in self.KINDS, kind
        super().__init__(f"line {line}: {kind}: {message}")
        self.kind = kind
        self.line = line
        self.detail = message
