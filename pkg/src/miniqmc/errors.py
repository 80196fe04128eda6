"""Exception types raised by the kernels and drivers."""


class QMCError(Exception):
    """Base class for all miniqmc errors."""


class SingularMatrixError(QMCError):
    """A Slater matrix could not be inverted."""


class NearSingularUpdate(QMCError):
    """A determinant ratio too small for a stable Sherman-Morrison update."""


class DivergenceError(QMCError):
    """Two charged particles coincide (Coulomb divergence guard)."""


class StagingError(QMCError):
    """accept_move called without a matching staged candidate."""


class VerificationError(QMCError):
    """A kernel checksum disagreed with the oracle."""
