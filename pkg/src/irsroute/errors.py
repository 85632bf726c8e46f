"""Exception hierarchy shared by all irsroute modules."""


class IrsRouteError(Exception):
    """Base class for all errors raised by irsroute."""


class InvalidArgumentError(IrsRouteError, ValueError):
    """An argument violates an operation's precondition."""


class ValidationError(IrsRouteError, ValueError):
    """A scenario or run configuration is malformed or inconsistent.

    ``path`` names the offending field (e.g. ``irs[3].normal``) when known.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class NoLineOfSightError(IrsRouteError, ValueError):
    """A channel was requested over a pair of nodes with no LoS edge."""


class ResourceLimitError(IrsRouteError, RuntimeError):
    """A combinatorial step would exceed its configured cap."""
