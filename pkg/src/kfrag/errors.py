"""Exception taxonomy for the kfrag package.

Every error raised on purpose derives from KfragError, so callers can
catch one base class at API boundaries. The CLI maps subclasses to its
documented exit codes.
"""


class KfragError(Exception):
    """Base class for all kfrag errors."""


class InvalidParams(KfragError):
    """Parameter combination violates a documented constraint."""


class ZeroInverse(KfragError):
    """Multiplicative inverse of zero was requested."""


class RngFailure(KfragError):
    """The random source failed or returned out-of-range values."""


class NotEnoughFragments(KfragError):
    """Fewer than k usable fragments were supplied."""


class InconsistentSet(KfragError):
    """Fragments do not belong to the same fragmentation run."""


class CorruptFragment(KfragError):
    """Fragment violates a structural rule beyond header parsing."""


class RangeOutOfBounds(KfragError):
    """Requested byte range falls outside the original data."""


class DuplicatePosition(KfragError):
    """Interpolation points share an x position."""


class DuplicateIndex(KfragError):
    """Two fragments claim the same index."""


class LengthMismatch(KfragError):
    """Sequences that must have equal length do not."""


# container parse errors


class InvalidHeader(KfragError):
    """Header fields are internally inconsistent."""


class BadMagic(InvalidHeader):
    """Leading bytes are not the fragment magic."""


class UnsupportedVersion(InvalidHeader):
    """Format version is unknown to this implementation."""


class CrcMismatch(InvalidHeader):
    """Header checksum does not match its contents."""


class TruncatedInput(InvalidHeader):
    """Byte sequence ends before the declared content does."""


# evaluation harness errors


class EmptyInput(KfragError):
    """Metric requires at least one byte."""


class SampleTooSmall(KfragError):
    """Sample is below the documented minimum for the statistic."""


class ZeroVariance(KfragError):
    """Correlation is undefined for a constant sequence."""


class DelayTooLarge(KfragError):
    """Recurrence delay leaves no pairs."""


class InvalidMatrix(KfragError):
    """Dispersal matrix is malformed or singular."""
