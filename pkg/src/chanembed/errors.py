"""Exception types raised across the toolkit."""


class ChanEmbedError(Exception):
    """Base class for all toolkit errors."""


# channel / features
class ZeroPowerError(ChanEmbedError, ValueError):
    """The power delay profile carries no energy."""


class DominantOnlyError(ChanEmbedError, ValueError):
    """Every tap except the strongest is zero, so the K factor is unbounded."""


class ZeroMagnitudeError(ChanEmbedError, ValueError):
    """A frequency sample has zero magnitude and its dB value is undefined."""


class InvalidSnrError(ChanEmbedError, ValueError):
    pass


# t-SNE
class SingularCovarianceError(ChanEmbedError, ValueError):
    pass


class CalibrationFailure(ChanEmbedError, RuntimeError):
    """Perplexity bisection did not converge for at least one point."""

    def __init__(self, message, worst_residual):
        super().__init__(message)
        self.worst_residual = worst_residual


class DivergenceError(ChanEmbedError, RuntimeError):
    def __init__(self, message, iteration):
        super().__init__(message)
        self.iteration = iteration


# baselines
class RankDeficientError(ChanEmbedError, ValueError):
    pass


class DegenerateKernelError(ChanEmbedError, ValueError):
    pass


class DisconnectedGraphError(ChanEmbedError, ValueError):
    def __init__(self, message, component_sizes):
        super().__init__(message)
        self.component_sizes = component_sizes


class InvalidKError(ChanEmbedError, ValueError):
    pass


# evaluation
class DegenerateClassError(ChanEmbedError, ValueError):
    def __init__(self, message, classes=()):
        super().__init__(message)
        self.classes = tuple(classes)


class StratificationError(ChanEmbedError, ValueError):
    pass
