"""Exception types shared across the toolkit."""


class InputError(ValueError):
    """Malformed or mismatched input (dimensions, ranges, unknown names)."""


class ValidationError(ValueError):
    """Input violates a structural invariant, e.g. a non-Hermitian matrix."""


class PreconditionError(ValueError):
    """An operation's documented precondition does not hold."""


class NumericError(RuntimeError):
    """A numerical procedure failed to reach its tolerance."""


class BranchTrackingError(NumericError):
    """Eigenvalue branches came too close to be followed continuously."""


class NearDegeneracyWarning(UserWarning):
    """Distinct frequencies fell below the degeneracy threshold and were merged."""


class TruncationWarning(UserWarning):
    """Fock-space truncation may be too small for the requested arguments."""
