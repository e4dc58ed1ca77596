"""Exception types shared by the library and the command line front end."""


class ArgumentError(ValueError):
    """An argument is outside the range an operation accepts."""


class DomainError(ValueError):
    """A real-valued argument lies outside the domain of a function."""


class AlphabetError(ValueError):
    """An alphabet violates one or more of its invariants.

    ``failed`` lists the names of every invariant that does not hold.
    """

    def __init__(self, failed):
        self.failed = list(failed)
        super().__init__("invalid alphabet: " + "; ".join(self.failed))


class UnsupportedEnsembleError(ValueError):
    """The operation needs an exact (finite alphabet) matrix."""


class ConfigError(ValueError):
    """An experiment configuration is invalid; ``problems`` names each issue."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config: " + "; ".join(self.problems))


class CapacityError(RuntimeError):
    """A requested exhaustive search exceeds the configured size cap."""
