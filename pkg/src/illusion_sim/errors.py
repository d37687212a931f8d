"""Exception types shared across the package."""


class IllusionSimError(Exception):
    """Base class for all errors raised by illusion_sim."""


class ContractViolation(IllusionSimError, ValueError):
    """An argument broke a documented precondition (bad index, wrong length, ...)."""


class CapacityError(IllusionSimError):
    """A request exceeds a hard size limit (exact-oracle cap, chip capacity)."""


class ParseError(IllusionSimError, ValueError):
    """A problem file could not be parsed."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
