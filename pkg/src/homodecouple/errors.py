"""Exception types raised by the toolkit."""


class RegimeError(ValueError):
    """Parameters fall outside the regime where an expansion or a matrix
    logarithm is valid (flip angle too large, eigenphase on the branch cut)."""


class BranchCutError(RegimeError):
    pass


class EnvelopeFitError(RuntimeError):
    pass


class DeconvolutionError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass
