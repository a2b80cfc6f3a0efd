"""Declarative scenario configs: one JSON file per test case.

A case bundles the structural model, its excitation, the synthetic camera,
an optional platform disturbance (direct model or a full UAV alignment
simulation) and the analysis settings. Suites list case files plus
healthy/damaged pairings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ScenarioError
from .scenegen import DisturbanceModel, MarkerSpec, ReferenceTagSpec, SceneConfig
from .signalkit import WelchConfig, default_welch_config
from .structsim import (
    ChirpParams,
    InitialConditions,
    SdofModel,
    calibrate_to_frequencies,
)
from .uavsim import AlignmentConfig

__all__ = [
    "AnalysisSettings",
    "TrackingSettings",
    "UavSettings",
    "ScenarioConfig",
    "SuiteConfig",
    "load_scenario",
    "load_suite",
    "parse_scenario",
    "config_hash",
]


@dataclass(frozen=True)
class AnalysisSettings:
    segment_length: int | None = None
    overlap_fraction: float = 0.5
    window: str = "hann"
    detrend: str = "linear"
    use_acceleration: bool = True
    smooth_window: int | None = None
    band_lo_hz: float = 0.5
    band_hi_hz: float | None = None
    damage_threshold_hz: float | None = None

    def welch_config(self, n_samples: int) -> WelchConfig:
        if self.segment_length is None:
            base = default_welch_config(n_samples)
            return WelchConfig(base.segment_length, self.overlap_fraction,
                               self.window, self.detrend)
        return WelchConfig(self.segment_length, self.overlap_fraction,
                           self.window, self.detrend)

    def diff_window(self, sample_rate: float) -> int:
        """Moving-average width: 11 samples at 60 Hz, scaled with the rate.

        Scaling floors to the next odd width so the averager's first null
        (at sample_rate / width) never drops below its 60 Hz placement and
        cannot land on the structural band.
        """
        if self.smooth_window is not None:
            return self.smooth_window
        w = int(11.0 * sample_rate / 60.0)
        if w % 2 == 0:
            w -= 1
        return max(3, w)

    def band(self, nyquist: float) -> tuple[float, float]:
        hi = self.band_hi_hz if self.band_hi_hz is not None else 0.9 * nyquist
        return (self.band_lo_hz, hi)


@dataclass(frozen=True)
class TrackingSettings:
    search_radius_px: int = 20
    score_threshold: float = 0.5
    template_margin_px: int = 4


@dataclass(frozen=True)
class UavSettings:
    """Alignment-simulation driven camera disturbance."""

    alignment: AlignmentConfig
    initial_distance_m: float = 3.0
    initial_yaw_offset_rad: float = 0.0
    altitude_m: float = 1.5
    seed: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    case_id: str
    condition: str  # "healthy" | "damaged" | "unspecified"
    model: SdofModel
    excitation_kind: str  # "free" | "chirp"
    initial_conditions: InitialConditions
    chirp: ChirpParams | None
    scene: SceneConfig
    duration_s: float
    disturbance: DisturbanceModel | None
    uav: UavSettings | None
    analysis: AnalysisSettings
    tracking: TrackingSettings
    reference_healthy_hz: float | None
    reference_damaged_hz: float | None
    seed: int
    save_frames: bool
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def reference_hz(self) -> float | None:
        if self.condition == "healthy":
            return self.reference_healthy_hz
        if self.condition == "damaged":
            return self.reference_damaged_hz
        return None


@dataclass(frozen=True)
class SuiteConfig:
    case_paths: tuple[Path, ...]
    pairs: tuple[tuple[str, str], ...]
    raw: dict = field(repr=False, default_factory=dict)


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ScenarioError(f"{where}: missing required field {key!r}")
    return d[key]


def _parse_model(section: dict, seed_note: str) -> SdofModel:
    damping = section.get("damping_ratio", 0.01)
    added = section.get("added_mass_kg", 0.0)
    try:
        if "calibration" in section:
            cal = section["calibration"]
            model = calibrate_to_frequencies(
                _require(cal, "f_healthy_hz", "model.calibration"),
                _require(cal, "f_damaged_hz", "model.calibration"),
                _require(cal, "delta_mass_kg", "model.calibration"),
            )
            return SdofModel(model.mass, model.stiffness, damping, added)
        return SdofModel(
            _require(section, "mass_kg", seed_note),
            _require(section, "stiffness_n_per_m", seed_note),
            damping,
            added,
        )
    except ValueError as exc:
        raise ScenarioError(f"model: {exc}") from exc


def _parse_scene(camera: dict, seed: int) -> SceneConfig:
    width = int(camera.get("frame_width", 128))
    height = int(camera.get("frame_height", 96))
    marker = camera.get("marker", {})
    tag = camera.get("reference_tag", {"center": [0.78 * width, 0.5 * height], "size": 24.0})
    try:
        marker_spec = MarkerSpec(
            center=tuple(marker.get("center", (0.3 * width, 0.5 * height))),
            radius=float(marker.get("radius", 8.0)),
            foreground=int(marker.get("foreground", 20)),
            background=int(marker.get("background", 235)),
        )
        tag_spec = None
        if tag is not None:
            tag_spec = ReferenceTagSpec(center=tuple(tag["center"]), size=float(tag["size"]))
        return SceneConfig(
            frame_width=width,
            frame_height=height,
            fps=float(_require(camera, "fps", "camera")),
            meters_per_pixel=float(_require(camera, "meters_per_pixel", "camera")),
            marker=marker_spec,
            reference_tag=tag_spec,
            motion_axis=camera.get("motion_axis", "horizontal"),
            noise_sigma=float(camera.get("noise_sigma", 0.0)),
            seed=seed,
            supersample=int(camera.get("supersample", 8)),
            psf_sigma=float(camera.get("psf_sigma", 0.7)),
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise ScenarioError(f"camera: {exc}") from exc


def _parse_disturbance(section, fps: float, seed: int):
    """Returns (DisturbanceModel | None, UavSettings | None)."""
    if section is None:
        return None, None
    if "uavsim" in section:
        uav_raw = section["uavsim"]
        drift = None
        if "drift" in uav_raw and uav_raw["drift"] is not None:
            drift = DisturbanceModel(seed=seed + 1, **uav_raw["drift"])
        align_fields = {
            k: uav_raw[k]
            for k in (
                "fov", "image_width", "image_height", "search_yaw_rate",
                "gain_yaw", "gain_lateral", "gain_range", "standoff",
                "tolerance_px", "tolerance_range_m", "hold_entry_steps",
                "exit_band_factor", "obs_noise_sigma_px",
            )
            if k in uav_raw
        }
        try:
            align = AlignmentConfig(control_period=1.0 / fps, drift=drift, **align_fields)
            uav = UavSettings(
                alignment=align,
                initial_distance_m=float(uav_raw.get("initial_distance_m", 3.0)),
                initial_yaw_offset_rad=float(uav_raw.get("initial_yaw_offset_rad", 0.0)),
                altitude_m=float(uav_raw.get("altitude_m", 1.5)),
                seed=seed + 2,
            )
        except (ValueError, TypeError) as exc:
            raise ScenarioError(f"disturbance.uavsim: {exc}") from exc
        return None, uav
    try:
        model = DisturbanceModel(
            drift_sigma_px=float(section.get("drift_sigma_px", 0.0)),
            rotor_amplitude_px=float(section.get("rotor_amplitude_px", 0.0)),
            rotor_frequency_hz=float(section.get("rotor_frequency_hz", 0.0)),
            jitter_sigma_px=float(section.get("jitter_sigma_px", 0.0)),
            seed=seed + 1,
        )
    except ValueError as exc:
        raise ScenarioError(f"disturbance: {exc}") from exc
    if model.rotor_frequency_hz >= fps / 2.0:
        raise ScenarioError(
            f"disturbance: rotor frequency {model.rotor_frequency_hz} Hz violates "
            f"Nyquist at {fps} fps (limit {fps / 2.0} Hz)"
        )
    return model, None


def parse_scenario(raw: dict, seed_override: int | None = None) -> ScenarioConfig:
    """Validate a raw scenario dict into typed configuration."""
    if not isinstance(raw, dict):
        raise ScenarioError("scenario config must be a JSON object")
    case_id = str(_require(raw, "case_id", "scenario"))
    seed = int(seed_override if seed_override is not None else raw.get("seed", 0))
    duration = float(_require(raw, "duration_s", "scenario"))
    if duration <= 0:
        raise ScenarioError("duration_s must be positive")

    condition = raw.get("condition")
    if condition is None:
        prefix = case_id[:1].upper()
        condition = {"H": "healthy", "D": "damaged"}.get(prefix, "unspecified")
    if condition not in ("healthy", "damaged", "unspecified"):
        raise ScenarioError(f"condition must be healthy or damaged, got {condition!r}")

    model = _parse_model(_require(raw, "model", "scenario"), "model")
    scene = _parse_scene(_require(raw, "camera", "scenario"), seed)

    exc_raw = _require(raw, "excitation", "scenario")
    kind = exc_raw.get("kind", "free")
    ic = InitialConditions()
    chirp = None
    if kind == "free":
        try:
            ic = InitialConditions(
                displacement=float(exc_raw.get("displacement_m", 0.0)),
                velocity=float(exc_raw.get("velocity_m_per_s", 0.0)),
            )
        except ValueError as exc:
            raise ScenarioError(f"excitation: {exc}") from exc
        if ic.displacement == 0.0 and ic.velocity == 0.0:
            raise ScenarioError("free vibration needs a non-zero initial condition")
    elif kind == "chirp":
        try:
            chirp = ChirpParams(
                amplitude=float(_require(exc_raw, "amplitude_m_per_s2", "excitation")),
                f_start=float(_require(exc_raw, "f_start_hz", "excitation")),
                f_end=float(_require(exc_raw, "f_end_hz", "excitation")),
                duration=float(exc_raw.get("sweep_duration_s", duration)),
            )
        except ValueError as exc:
            raise ScenarioError(f"excitation: {exc}") from exc
    else:
        raise ScenarioError(f"excitation.kind must be free or chirp, got {kind!r}")

    disturbance, uav = _parse_disturbance(raw.get("disturbance"), scene.fps, seed)

    ana_raw = raw.get("analysis", {})
    try:
        analysis = AnalysisSettings(
            segment_length=ana_raw.get("segment_length"),
            overlap_fraction=float(ana_raw.get("overlap_fraction", 0.5)),
            window=ana_raw.get("window", "hann"),
            detrend=ana_raw.get("detrend", "linear"),
            use_acceleration=bool(ana_raw.get("use_acceleration", True)),
            smooth_window=ana_raw.get("smooth_window"),
            band_lo_hz=float(ana_raw.get("band_hz", [0.5, None])[0]),
            band_hi_hz=ana_raw.get("band_hz", [0.5, None])[1],
            damage_threshold_hz=ana_raw.get("damage_threshold_hz"),
        )
    except (ValueError, TypeError, IndexError) as exc:
        raise ScenarioError(f"analysis: {exc}") from exc

    trk_raw = raw.get("tracking", {})
    tracking = TrackingSettings(
        search_radius_px=int(trk_raw.get("search_radius_px", 20)),
        score_threshold=float(trk_raw.get("score_threshold", 0.5)),
        template_margin_px=int(trk_raw.get("template_margin_px", 4)),
    )

    refs = raw.get("references", {})
    return ScenarioConfig(
        case_id=case_id,
        condition=condition,
        model=model,
        excitation_kind=kind,
        initial_conditions=ic,
        chirp=chirp,
        scene=scene,
        duration_s=duration,
        disturbance=disturbance,
        uav=uav,
        analysis=analysis,
        tracking=tracking,
        reference_healthy_hz=refs.get("healthy_hz"),
        reference_damaged_hz=refs.get("damaged_hz"),
        seed=seed,
        save_frames=bool(raw.get("camera", {}).get("save_frames", True)),
        raw=raw,
    )


def load_scenario(path: str | Path, seed_override: int | None = None) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc
    return parse_scenario(raw, seed_override)


def load_suite(path: str | Path) -> SuiteConfig:
    path = Path(path)
    if not path.exists():
        raise ScenarioError(f"suite file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON: {exc}") from exc
    if "cases" not in raw:
        raise ScenarioError(f"{path}: suite file needs a 'cases' list")
    case_paths = tuple((path.parent / p).resolve() for p in raw["cases"])
    for p in case_paths:
        if not p.exists():
            raise ScenarioError(f"suite case config not found: {p}")
    pairs = tuple((str(h), str(d)) for h, d in raw.get("pairs", []))
    return SuiteConfig(case_paths=case_paths, pairs=pairs, raw=raw)


def is_suite(path: str | Path) -> bool:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError):
        return False
    return isinstance(raw, dict) and "cases" in raw
