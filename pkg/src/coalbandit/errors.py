"""Exception hierarchy shared across the package."""


class CoalBanditError(Exception):
    """Base class for all package errors."""


class InvalidInputError(CoalBanditError, ValueError):
    """An argument has the wrong shape, range or type."""


class InvalidConfigError(CoalBanditError, ValueError):
    """An experiment or algorithm configuration is inconsistent."""


class ProtocolViolationError(CoalBanditError, RuntimeError):
    """A policy or trajectory used an action outside the permitted set."""


class UnsupportedInstanceError(CoalBanditError, ValueError):
    """The algorithm cannot run on this kind of problem instance."""


class SingularDesignError(CoalBanditError, ValueError):
    """A least-squares design matrix is singular and no ridge was allowed."""


class IncompleteTableError(CoalBanditError, KeyError):
    """A regret table lacks coalition entries needed by the operation."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class ExactLimitError(CoalBanditError, ValueError):
    """Exact enumeration requested beyond the configured player limit."""


class IngestionError(CoalBanditError, ValueError):
    """An input data file is missing or malformed."""


class RunFailedError(CoalBanditError, RuntimeError):
    """A coalition run inside an experiment raised; carries its (mask, rep)."""

    def __init__(self, mask: int, rep: int, cause: BaseException):
        super().__init__(f"run for coalition mask {mask}, repetition {rep} failed: {cause!r}")
        self.mask = mask
        self.rep = rep
