"""Shared exception types."""


class DomainError(ValueError):
    """Point (or an FD stencil around it) leaves the declared chart domain."""


class OrderUnsupported(ValueError):
    """Evaluator cannot propagate derivatives to the requested order."""


class OrderExceeded(ValueError):
    """Requested partial derivative exceeds the jet truncation order."""


class NonPositiveDefinite(ValueError):
    """Metric failed a Cholesky check at a sample point."""


class TypeMismatch(ValueError):
    """Operation requires a different self-dual Weyl type."""


class InconclusiveError(RuntimeError):
    """Eigenvalue gaps fall inside the classification ambiguity band."""


class EigenformBranchError(RuntimeError):
    """Non-repeated Weyl eigenvalue crosses the repeated pair on the sample set."""


class UnknownFamily(KeyError):
    """No metric family registered under that name."""


class ParamOutOfRange(ValueError):
    """Family parameter outside its declared schema range."""


class InsufficientRadii(ValueError):
    """Decay fit needs at least four radii."""


class SignError(ValueError):
    """Ansatz profile V has the wrong sign on the requested subdomain."""


class FitError(RuntimeError):
    """Least-squares fit residual exceeded its tolerance."""


class IntegrationError(RuntimeError):
    """Numerical quadrature failed to converge."""


class InvalidFan(ValueError):
    """Ray list is not a complete cyclically ordered fan of primitive vectors."""


class NonSmoothCorner(ValueError):
    """Blow-up requested at a cone of determinant > 1."""


class UsageError(ValueError):
    """Bad command line or configuration input (CLI exit code 2)."""
