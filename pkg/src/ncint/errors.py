"""Exception hierarchy shared by all modules."""


class NcintError(Exception):
    """Base class for every error raised by this package."""


class SingularMatrix(NcintError):
    """Exact rank deficiency in a dense linear solve or inverse."""


class SingularSubmatrix(SingularMatrix):
    """A quasi-determinant is not defined: its deleted submatrix is singular."""


class SingularMoment(SingularSubmatrix):
    """A Hankel moment block needed by a construction is singular."""


class OrderExceeded(NcintError):
    """Requested derivative order exceeds the jet truncation order."""


class DepthExceeded(NcintError):
    """Requested moment index exceeds the table depth."""


class MeasureError(NcintError):
    """Base class for measure validation failures."""


class AsymmetricWeight(MeasureError):
    """A weight matrix is not symmetric."""


class InsufficientNodes(MeasureError):
    """Too few mass points for the requested truncation."""


class NotEvenMeasure(MeasureError):
    """An even measure was required but the nodes/weights are not symmetric."""


class ConfigError(NcintError):
    """Malformed configuration input."""
