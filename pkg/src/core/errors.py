"""
Estimate Errors Module
Exception hierarchy shared by the ledger, field, verifier and solver modules
"""


class EstimateError(Exception):
    """Base class for every error raised by the estimate engine"""


class UnknownConstant(EstimateError):
    """Requested ledger node is not registered"""


class MissingDelta(EstimateError):
    """A delta-parametric node was evaluated without delta, or a static node with one"""


class DeltaOutOfDomain(EstimateError):
    """Delta lies outside the validity domain of a node or metric family"""


class DomainError(EstimateError):
    """Interval operation outside its domain (zero divisor, negative radicand, ...)"""


class AbsorptionFailure(EstimateError):
    """C1 * C14(delta) >= 1, the absorption argument does not close"""


class NotMeanZero(EstimateError):
    """Inverse flat Laplacian requested for a field with nonzero mean"""


class SingularMetric(EstimateError):
    """Metric field is not positive definite at some grid point"""


class NoConvergence(EstimateError):
    """Iterative solver hit max_iter before reaching its tolerance"""

    def __init__(self, message: str, iterations: int = 0, residual: float = float('nan')):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class DegenerateRhs(EstimateError):
    """Right-hand side vanishes identically"""


class ConfigError(EstimateError):
    """Invalid run configuration"""
