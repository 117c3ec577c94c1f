"""Exception hierarchy shared by all trispec modules."""


class TrispecError(Exception):
    """Base class for all trispec faults."""


class DomainError(TrispecError):
    """An argument violates a documented precondition."""


class NumericalError(TrispecError):
    """A numerical procedure failed (non-convergence, invalid values, ...)."""


class ConfigError(TrispecError):
    """Invalid experiment configuration.

    Carries a list of (line_number, message) diagnostics; line_number is
    None for diagnostics not tied to a specific line.
    """

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = "; ".join(
            f"line {ln}: {msg}" if ln is not None else msg
            for ln, msg in self.diagnostics
        )
        super().__init__(lines)
