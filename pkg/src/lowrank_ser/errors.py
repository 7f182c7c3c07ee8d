"""Exception types raised across the package."""


class LowRankError(Exception):
    """Base class for all package errors."""


class DataFormatError(LowRankError, ValueError):
    """Malformed input file or table."""


class DegenerateData(LowRankError, ValueError):
    """Input carries no usable variation (all rows equal, all distances zero...)."""


class RankDegenerate(DegenerateData):
    """All dissimilarities are equal, so the rank order is uninformative."""


class DisconnectedGraph(LowRankError):
    """Neighbourhood graph has more than one connected component."""

    def __init__(self, component_sizes, hint=None):
        self.component_sizes = list(component_sizes)
        msg = (f"neighbour graph is disconnected: {len(self.component_sizes)} "
               f"components of sizes {self.component_sizes}")
        if hint:
            msg += f"; {hint}"
        super().__init__(msg)


class EigenFailure(LowRankError, ArithmeticError):
    """Jacobi sweeps did not converge."""


class TrainingDiverged(LowRankError, ArithmeticError):
    def __init__(self, epoch):
        self.epoch = epoch
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")


class SingleClass(LowRankError, ValueError):
    """Classifier training data contains only one class."""


class NotConverged(LowRankError, ArithmeticError):
    """Iterative solver stopped before meeting its tolerance."""
