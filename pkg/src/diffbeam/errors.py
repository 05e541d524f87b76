"""Exception hierarchy for diffbeam."""


class DiffBeamError(Exception):
    """Base class for every error raised by this package."""


class InvalidNulls(DiffBeamError, ValueError):
    pass


class SingularConstraintMatrix(DiffBeamError, ValueError):
    pass


class CoefficientsNotNormalized(DiffBeamError, ValueError):
    pass


class DimensionMismatch(DiffBeamError, ValueError):
    pass


class ZeroFilter(DiffBeamError, ValueError):
    pass


class DegenerateDenominator(DiffBeamError, ValueError):
    pass


class RankDeficient(DiffBeamError, ValueError):
    pass


class TooFewMicrophones(DiffBeamError, ValueError):
    pass


class InfeasibleSlack(DiffBeamError, ValueError):
    pass


class TrustRegionHardCase(DiffBeamError, RuntimeError):
    pass


class ConfigInvalid(DiffBeamError, ValueError):
    """Configuration rejected; ``field`` names the offending entry."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DesignFailed(DiffBeamError, RuntimeError):
    pass
