class UcvError(Exception):
    pass


class InputError(UcvError, ValueError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


class UnsafeViewError(InputError):
    pass


class UnsupportedDialectError(UcvError):
    pass


class UnsupportedCertificationError(UcvError):
    """Raised for certified requests on impure dialects; `verdict` holds the bounded answer."""

    def __init__(self, message, verdict=None):
        super().__init__(message)
        self.verdict = verdict


class ResourceError(UcvError):
    pass


class SimulationBudgetError(ResourceError):
    pass


class PreconditionError(UcvError):
    pass


class ConstructionError(UcvError):
    pass
