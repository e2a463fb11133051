class QPlasmonError(ValueError):
    """Base class for domain errors raised by qplasmon."""


class ResonanceNotFound(QPlasmonError):
    pass


class OutOfRangeError(QPlasmonError):
    pass


class AmbiguousBracketError(QPlasmonError):
    """The forward model is not monotone on the requested bracket."""

    def __init__(self, message, branches=()):
        super().__init__(message)
        self.branches = tuple(branches)


class UnderdeterminedError(QPlasmonError):
    pass


class ConfigError(QPlasmonError):
    pass


class ParseError(QPlasmonError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line
