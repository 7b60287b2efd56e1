"""Exception taxonomy shared across the package."""


class ProbelightError(Exception):
    """Base class for all errors raised by this package."""


class IoError(ProbelightError):
    """File could not be read or written."""


class FormatError(ProbelightError):
    """File contents violate the expected image format."""


class SpaceMismatch(ProbelightError):
    """Operation received an image in the wrong colorimetric space."""


class DimensionMismatch(ProbelightError):
    """Images or masks that must share a shape do not."""


class ChannelMismatch(ProbelightError):
    """Operation received an image with the wrong channel count."""


class LengthMismatch(ProbelightError):
    """Parallel sequences (images vs. EVs) disagree in length."""


class EvOrderError(ProbelightError):
    """Exposure list is not strictly descending or does not start at 0."""


class EmptyStack(ProbelightError):
    """A reduction over images received an empty stack."""


class DegenerateSpec(ProbelightError):
    """Ball or camera specification is unusable (e.g. sub-pixel radius)."""


class RangeError(ProbelightError):
    """Scalar argument is outside its documented domain."""


class ConfigError(ProbelightError):
    """Pipeline configuration violates its invariants."""


class TransportError(ProbelightError):
    """Backend endpoint was unreachable after retries."""


class ProtocolError(ProbelightError):
    """Backend payload or response does not satisfy the wire contract."""


class BackendError(ProbelightError):
    """Backend accepted the request but reported a failure."""
