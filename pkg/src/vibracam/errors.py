"""Exception types shared across the package."""


class VibracamError(Exception):
    """Base class for all package-specific errors."""


class NoPeakError(VibracamError):
    """Raised when a spectrum carries no usable peak inside the search band."""


class UntrackableTemplateError(VibracamError):
    """Raised when a template patch has zero intensity variance."""


class TrackingError(VibracamError):
    """Base class for per-frame tracking failures."""

    def __init__(self, message: str, frame: int):
        super().__init__(message)
        self.frame = frame


class TrackLostError(TrackingError):
    """Peak correlation score fell below the acceptance threshold."""


class SearchRadiusExhaustedError(TrackingError):
    """Correlation peak landed on the search-window boundary."""


class FrameLoadError(VibracamError):
    """Base class for frame-manifest loading failures."""


class MissingFrameError(FrameLoadError):
    """A manifest entry points at a file that does not exist."""


class FrameDimensionError(FrameLoadError):
    """A loaded frame does not match the dimensions of the first frame."""


class UnsupportedFormatError(FrameLoadError):
    """A frame file is not binary 8-bit PGM."""


class MarkerOutOfFrameError(VibracamError):
    """Requested motion would push the marker outside the rendered frame."""

    def __init__(self, message: str, frame: int):
        super().__init__(message)
        self.frame = frame


class MalformedArtifactError(VibracamError):
    """A stored artifact cannot be parsed back for plotting or reporting."""


class ScenarioError(VibracamError):
    """Scenario configuration failed validation."""


class StageError(VibracamError):
    """A pipeline stage failed; carries the stage name and case id."""

    def __init__(self, stage: str, case_id: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed for case '{case_id}': {cause}")
        self.stage = stage
        self.case_id = case_id
        self.cause = cause
