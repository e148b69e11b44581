"""Exception hierarchy shared across the package."""


class TrackSentryError(Exception):
    """Base class for all package-specific errors."""


class NonPositiveDepth(TrackSentryError):
    """Point has z <= 0 in the camera frame; cannot be projected."""


class EmptyModel(TrackSentryError):
    """Object model contains no points."""


class ParseError(TrackSentryError):
    """A model or image file failed to parse."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class NoContours(TrackSentryError):
    """Contour list was empty where at least one contour is required."""


class DimensionMismatch(TrackSentryError):
    """Two masks (or aligned sequences) differ in size."""


class BothEmpty(TrackSentryError):
    """IoU is undefined: both masks have an empty union."""


class NoObjectAtPrompt(TrackSentryError):
    """Segmentation prompt landed on background."""


class BackendUnavailable(TrackSentryError):
    """External backend endpoint cannot be reached or errored."""


class EmptyMask(TrackSentryError):
    """Mask has no foreground pixels where at least one is required."""


class RegistrationFailed(TrackSentryError):
    """Pose registration could not produce a usable pose."""


class InsufficientMatches(TrackSentryError):
    """Not enough feature correspondences to build a prompt."""


class BehindCamera(TrackSentryError):
    """All model points have non-positive depth under the given pose."""


class ScriptError(TrackSentryError):
    """Scene script is invalid."""


class EmptySampleSet(TrackSentryError):
    """Metric requested over an empty collection of samples."""


class LengthMismatch(TrackSentryError):
    """Aligned sequences have different lengths."""


class EmptyLog(TrackSentryError):
    """Timing log contains no samples."""
