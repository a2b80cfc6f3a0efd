"""Camera-based vibration measurement and frequency-shift damage detection.

Submodules
----------
signalkit   time-series conditioning, Welch PSD, peak picking, damage metrics
tracker     template tracking with sub-pixel refinement and calibration
structsim   SDOF frame model: chirp excitation, Newmark and analytic responses
scenegen    synthetic frame rendering with ground truth and camera disturbance
uavsim      tag-referenced UAV search/align/hold state machine
pipeline    end-to-end scenario runs, suites, comparison tables
svgplot     deterministic SVG plots of stored artifacts
cli         `vibracam` command-line entry point
"""

from .errors import (
    FrameLoadError,
    MalformedArtifactError,
    MarkerOutOfFrameError,
    MissingFrameError,
    NoPeakError,
    ScenarioError,
    SearchRadiusExhaustedError,
    StageError,
    TrackingError,
    TrackLostError,
    UnsupportedFormatError,
    UntrackableTemplateError,
    VibracamError,
)
from .signalkit import (
    DamageAssessment,
    DiffConfig,
    ModalEstimate,
    Spectrum,
    TimeSeries,
    WelchConfig,
    assess_damage,
    default_welch_config,
    detrend,
    differentiate,
    find_fundamental,
    percent_error,
    welch_psd,
)
from .structsim import (
    ChirpParams,
    InitialConditions,
    SdofModel,
    calibrate_to_frequencies,
    chirp_excitation,
    free_vibration_analytic,
    natural_frequency,
    newmark_response,
)
from .tracker import (
    CalibrationScale,
    Frame,
    FrameSequence,
    PixelTrace,
    Template,
    calibrate_trace,
    compensate_reference,
    load_frames,
    ncc,
    scale_from_marker,
    track_marker,
)
from .scenegen import (
    DisturbanceModel,
    GroundTruth,
    MarkerSpec,
    ReferenceTagSpec,
    SceneConfig,
    inject_platform_disturbance,
    render_frames,
)
from .uavsim import (
    AlignmentConfig,
    AlignmentResult,
    Command,
    Phase,
    TagObservation,
    UavState,
    alignment_step,
    observe_tag,
    run_alignment,
    settling_time_bound,
)
from .pipeline import RunReport, compare_runs, format_comparison, run_scenario, run_suite
from .scenario import ScenarioConfig, load_scenario, load_suite
from .svgplot import plot

__version__ = "0.1.0"
