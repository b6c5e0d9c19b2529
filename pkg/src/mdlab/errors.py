"""Exception hierarchy. The CLI maps each class to an exit code."""


class MDLabError(Exception):
    exit_code = 1


class ArgumentError(MDLabError, ValueError):
    """Malformed input: descriptors, literals, out-of-range integers."""

    exit_code = 2


class FormatError(ArgumentError):
    """A region file or CSV input does not follow its documented format."""


class DomainError(ArgumentError):
    """Input is well-formed but outside the operation's domain."""


class InsufficientDataError(ArgumentError):
    pass


class InfeasibleError(MDLabError, ArithmeticError):
    """A required partition function vanishes (e.g. rho = 0 on an odd region)."""

    exit_code = 3


class ResourceError(MDLabError, RuntimeError):
    """A size cap of an exact/exhaustive routine would be exceeded."""

    exit_code = 4
