"""Errors raised by the reconstruction library.

Every error carries a short ``code`` that the command line prints next to the
message so that scripts can tell failures apart without parsing prose.
"""


class NrfseError(Exception):
    code = "E_INTERNAL"


class DimensionMismatch(NrfseError, ValueError):
    code = "E_DIMENSION"


class OutOfBounds(NrfseError, ValueError):
    code = "E_BOUNDS"


class InvalidParameters(NrfseError, ValueError):
    code = "E_CONFIG"


class EmptySupport(NrfseError, ValueError):
    """No voxel of a window carries weight, so no model can be generated."""

    code = "E_EMPTY_SUPPORT"


class MalformedFile(NrfseError, ValueError):
    code = "E_FORMAT"
