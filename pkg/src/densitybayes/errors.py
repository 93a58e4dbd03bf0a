"""Exception and warning types raised across the package."""


class CalculusError(ValueError):
    """Base class for every error raised by densitybayes."""


class NonSquare(CalculusError):
    pass


class AsymmetricInput(CalculusError):
    pass


class ConvergenceFailure(CalculusError, ArithmeticError):
    """The Jacobi eigensolver ran out of sweeps."""


class NotPSD(CalculusError):
    pass


class NotStrictlyPD(CalculusError):
    pass


class BadRank(CalculusError):
    pass


class DimensionMismatch(CalculusError):
    pass


class BadWeights(CalculusError):
    pass


class NotUnitVector(CalculusError):
    pass


class NotDensity(CalculusError):
    """Trace or spectrum too far from a density matrix to be repaired."""


class NotProjector(CalculusError):
    pass


class ZeroConditioningMass(CalculusError):
    pass


class ZeroEvidence(CalculusError):
    pass


class ZeroMass(CalculusError):
    pass


class BadDistribution(CalculusError):
    pass


class NotSkew(CalculusError):
    pass


class NotOrthogonal(CalculusError):
    pass


class DegenerateMarginal(UserWarning):
    """A marginal that should be inverted is singular.

    Issued as a warning: the computation proceeds through the pseudo-inverse
    and the range-intersection form of the odot product.
    """


class IoError(CalculusError, OSError):
    """Unreadable, malformed or unwritable input/output file."""
