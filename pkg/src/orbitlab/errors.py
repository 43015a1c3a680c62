"""Exception hierarchy shared by all orbitlab modules."""


class OrbitlabError(Exception):
    """Base class for all orbitlab errors."""


class InputError(OrbitlabError):
    """Invalid argument values (bad names, parameters, non-conforming data)."""


class InputShapeError(InputError):
    """Array arguments with incompatible dimensions."""


class FormatError(InputError):
    """A file does not conform to one of the JSON schemas."""


class JacobiError(InputError):
    """Structure constants violate the Jacobi identity."""

    def __init__(self, message, worst_triple=None, residual=None):
        super().__init__(message)
        self.worst_triple = worst_triple
        self.residual = residual


class PreconditionError(OrbitlabError):
    """An operation was called outside its stated domain."""


class IndeterminateError(OrbitlabError):
    """A structural predicate fell inside the numerical tolerance band."""


class AlgorithmFailure(OrbitlabError):
    """A randomized or iterative algorithm exhausted its retries, or an
    a-posteriori verification failed."""


class CartanValidationError(OrbitlabError):
    """A candidate Cartan involution failed validation."""

    def __init__(self, invariant, residual):
        super().__init__(f"Cartan validation failed: {invariant} (residual {residual:.3e})")
        self.invariant = invariant
        self.residual = residual


class ClusteringError(OrbitlabError):
    """Joint eigenvalues could not be unambiguously clustered into roots."""


class NotRegularError(OrbitlabError):
    """A covector hit a root hyperplane; retry with a fresh draw."""


class DegenerateError(OrbitlabError):
    """An inner product required to be definite is degenerate."""


class StratumError(OrbitlabError):
    """A stratum label is inconsistent (e.g. beta+ not positive definite)."""


class ConditioningError(OrbitlabError):
    """A linear problem is too ill-conditioned to solve reliably."""
