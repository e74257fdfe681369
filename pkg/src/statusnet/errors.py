"""Exception hierarchy shared by every module."""


class StatusNetError(Exception):
    """Base class; ``code`` is the machine-readable tag the CLI reports."""

    code = "error"


class ParseError(StatusNetError):
    code = "parse"

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class ValidationError(StatusNetError):
    code = "validation"


class ConfigError(StatusNetError):
    code = "config"


class DomainError(StatusNetError):
    """Input is well-formed but the computation is undefined on it."""

    code = "domain"


class DivergenceError(StatusNetError):
    """Training produced a non-finite loss. Carries the last finite state."""

    code = "divergence"

    def __init__(self, message, weights=None, q=None, log=None):
        super().__init__(message)
        self.weights = weights
        self.q = q
        self.log = log
