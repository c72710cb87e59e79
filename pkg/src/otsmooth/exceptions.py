"""Exception types raised by otsmooth."""


class InvalidInputError(ValueError):
    """Input data is malformed: a wrong shape or a non-finite entry."""


class ConfigurationError(ValueError):
    """An operation was asked for something its configuration does not provide."""


class UnbracketedError(RuntimeError):
    """The epsilon grid never crossed the significance level.

    ``side`` is ``"above alpha"`` when every p-value exceeded alpha and
    ``"below alpha"`` when every p-value fell short of it.
    """

    def __init__(self, side, log=None):
        self.side = side
        self.log = log if log is not None else []
        super().__init__(f"no bracketing pair in the epsilon grid: all p-values {side}")
