"""Synthetic grayscale scenes: a moving disc marker plus a stationary
reference tag, with optional camera-platform disturbance.

Shapes are rasterized from supersampled coverage and passed through a small
Gaussian point-spread blur so that edges carry sub-pixel information; the
exact sub-pixel positions are recorded as ground truth for tracker
validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import MalformedArtifactError, MarkerOutOfFrameError
from .signalkit import TimeSeries
from .tracker import Frame, FrameSequence, write_manifest, write_pgm

__all__ = [
    "MarkerSpec",
    "ReferenceTagSpec",
    "SceneConfig",
    "DisturbanceModel",
    "GroundTruth",
    "render_frames",
    "inject_platform_disturbance",
    "disturbance_offsets",
    "write_ground_truth_csv",
    "read_ground_truth_csv",
    "write_frame_files",
]

MIN_CONTRAST = 50
FRAME_MARGIN_PX = 2.0


@dataclass(frozen=True)
class MarkerSpec:
    """Filled disc drawn on the structure."""

    center: tuple[float, float]
    radius: float
    foreground: int = 20
    background: int = 235

    def __post_init__(self):
        if self.radius < 2:
            raise ValueError("marker radius must be at least 2 px")
        for name, level in (("foreground", self.foreground), ("background", self.background)):
            if not 0 <= level <= 255:
                raise ValueError(f"{name} intensity must lie in [0, 255]")
        if abs(self.background - self.foreground) < MIN_CONTRAST:
            raise ValueError(f"marker contrast must be at least {MIN_CONTRAST} levels")


@dataclass(frozen=True)
class ReferenceTagSpec:
    """Stationary square dot-grid target used as the camera-motion reference."""

    center: tuple[float, float]
    size: float

    def __post_init__(self):
        if self.size < 12:
            raise ValueError("reference tag size must be at least 12 px")


@dataclass(frozen=True)
class SceneConfig:
    frame_width: int
    frame_height: int
    fps: float
    meters_per_pixel: float
    marker: MarkerSpec
    reference_tag: ReferenceTagSpec | None = None
    motion_axis: str = "horizontal"
    noise_sigma: float = 0.0
    seed: int = 0
    supersample: int = 8
    psf_sigma: float = 0.7

    def __post_init__(self):
        if self.frame_width < 16 or self.frame_height < 16:
            raise ValueError("frame must be at least 16 px per side")
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if self.meters_per_pixel <= 0:
            raise ValueError("meters_per_pixel must be positive")
        if self.motion_axis not in ("horizontal", "vertical"):
            raise ValueError(f"motion_axis must be horizontal or vertical, got {self.motion_axis!r}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.supersample < 4:
            raise ValueError("supersample factor must be at least 4")
        if self.psf_sigma < 0:
            raise ValueError("psf_sigma must be non-negative")


@dataclass(frozen=True)
class DisturbanceModel:
    """Camera-platform motion: random-walk drift, rotor sinusoid, white jitter."""

    drift_sigma_px: float = 0.0
    rotor_amplitude_px: float = 0.0
    rotor_frequency_hz: float = 0.0
    jitter_sigma_px: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("drift_sigma_px", "rotor_amplitude_px", "jitter_sigma_px"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.rotor_frequency_hz < 0:
            raise ValueError("rotor_frequency_hz must be non-negative")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Exact rendered positions: the oracle the tracker is judged against.

    `marker_centers` are the drawn (camera-motion included) disc centers in
    absolute pixels; `camera_offsets` is the common image-plane shift
    applied to every scene element.
    """

    marker_centers: np.ndarray
    camera_offsets: np.ndarray
    meters_per_pixel: float
    fps: float

    def __post_init__(self):
        mc = np.asarray(self.marker_centers, dtype=np.float64)
        co = np.asarray(self.camera_offsets, dtype=np.float64)
        if mc.ndim != 2 or mc.shape[1] != 2 or co.shape != mc.shape:
            raise ValueError("marker_centers and camera_offsets must both be (n, 2)")
        mc.setflags(write=False)
        co.setflags(write=False)
        object.__setattr__(self, "marker_centers", mc)
        object.__setattr__(self, "camera_offsets", co)

    def __len__(self) -> int:
        return int(self.marker_centers.shape[0])

    @property
    def true_u(self) -> np.ndarray:
        """Marker displacement in px relative to frame 0 (horizontal)."""
        return self.marker_centers[:, 0] - self.marker_centers[0, 0]

    @property
    def true_v(self) -> np.ndarray:
        return self.marker_centers[:, 1] - self.marker_centers[0, 1]


def disturbance_offsets(d: DisturbanceModel, n_frames: int, fps: float) -> np.ndarray:
    """Deterministic (n, 2) camera offset series for a disturbance model.

    offset(t) = random walk(drift sigma) + rotor sinusoid + white jitter,
    starting at zero in frame 0. All random draws happen regardless of the
    component sigmas so that a given seed always yields the same stream.
    """
    if d.rotor_frequency_hz >= fps / 2.0:
        raise ValueError(
            f"rotor frequency {d.rotor_frequency_hz} Hz violates Nyquist at {fps} fps"
        )
    rng = np.random.default_rng(d.seed)
    steps = rng.standard_normal((n_frames, 2))
    steps[0] = 0.0
    walk = np.cumsum(d.drift_sigma_px * steps, axis=0)
    phases = rng.uniform(0.0, 2.0 * math.pi, 2)
    t = np.arange(n_frames) / fps
    rotor = d.rotor_amplitude_px * np.sin(
        2.0 * math.pi * d.rotor_frequency_hz * t[:, None] + phases[None, :]
    )
    jitter = d.jitter_sigma_px * rng.standard_normal((n_frames, 2))
    return walk + rotor + jitter


def inject_platform_disturbance(
    truth_free_camera: GroundTruth, d: DisturbanceModel
) -> tuple[TimeSeries, TimeSeries]:
    """Camera offset series (u, v) matching a disturbance-free ground truth."""
    offsets = disturbance_offsets(d, len(truth_free_camera), truth_free_camera.fps)
    fps = truth_free_camera.fps
    return (
        TimeSeries(offsets[:, 0], fps, unit="px"),
        TimeSeries(offsets[:, 1], fps, unit="px"),
    )


# ---------------------------------------------------------------------------
# Rasterization.
# ---------------------------------------------------------------------------

def _supersample_axis(start: int, count: int, ss: int) -> np.ndarray:
    return start + (np.arange(count * ss) + 0.5) / ss


def _paint_disc(frame: np.ndarray, cx: float, cy: float, radius: float,
                foreground: int, background: int, ss: int) -> None:
    x0 = max(int(math.floor(cx - radius)) - 1, 0)
    x1 = min(int(math.ceil(cx + radius)) + 2, frame.shape[1])
    y0 = max(int(math.floor(cy - radius)) - 1, 0)
    y1 = min(int(math.ceil(cy + radius)) + 2, frame.shape[0])
    fx = _supersample_axis(x0, x1 - x0, ss)
    fy = _supersample_axis(y0, y1 - y0, ss)
    inside = ((fx[None, :] - cx) ** 2 + (fy[:, None] - cy) ** 2) <= radius * radius
    coverage = inside.reshape(y1 - y0, ss, x1 - x0, ss).mean(axis=(1, 3))
    frame[y0:y1, x0:x1] = background + (foreground - background) * coverage


_TAG_GRID = 3      # quincunx dot layout on a 3x3 grid
_TAG_DOT_FRACTION = 0.45


def _paint_tag(frame: np.ndarray, cx: float, cy: float, size: float,
               foreground: int, background: int, ss: int) -> None:
    # Square-footprint grid of filled dots. Straight axis-aligned edges carry
    # a coherent sub-pixel phase along their whole length, which biases the
    # correlation peak fit by up to 0.08 px; curved boundaries spread the
    # phase around the circumference and track ~8x more accurately.
    half = size / 2.0
    x0 = max(int(math.floor(cx - half)) - 1, 0)
    x1 = min(int(math.ceil(cx + half)) + 2, frame.shape[1])
    y0 = max(int(math.floor(cy - half)) - 1, 0)
    y1 = min(int(math.ceil(cy + half)) + 2, frame.shape[0])
    fx = _supersample_axis(x0, x1 - x0, ss)
    fy = _supersample_axis(y0, y1 - y0, ss)
    X, Y = fx[None, :], fy[:, None]
    pitch = size / _TAG_GRID
    radius = pitch * _TAG_DOT_FRACTION
    dark = np.zeros((fy.size, fx.size), dtype=bool)
    for gy in range(_TAG_GRID):
        for gx in range(_TAG_GRID):
            if (gx + gy) % 2 == 1:
                continue
            dot_x = cx - half + (gx + 0.5) * pitch
            dot_y = cy - half + (gy + 0.5) * pitch
            dark |= (X - dot_x) ** 2 + (Y - dot_y) ** 2 <= radius * radius
    coverage = dark.reshape(y1 - y0, ss, x1 - x0, ss).mean(axis=(1, 3))
    region = frame[y0:y1, x0:x1]
    frame[y0:y1, x0:x1] = region + (foreground - background) * coverage


def render_frames(
    scene: SceneConfig,
    structure_motion: TimeSeries,
    disturbance: DisturbanceModel | None = None,
    camera_offsets: np.ndarray | None = None,
) -> tuple[FrameSequence, GroundTruth]:
    """Render structure motion into frames; returns the sequence and its truth.

    The structure motion (meters, sampled at the scene fps) displaces the
    marker along the configured axis; camera disturbance shifts marker and
    reference tag together. A precomputed (n, 2) `camera_offsets` array (for
    example a simulated UAV hold trajectory) may be supplied instead of a
    disturbance model. Identical configs and seeds yield bit-identical
    frames.
    """
    if not math.isclose(structure_motion.sample_rate, scene.fps, rel_tol=1e-9):
        raise ValueError(
            f"structure motion sampled at {structure_motion.sample_rate} Hz "
            f"but scene runs at {scene.fps} fps"
        )
    n = len(structure_motion)
    motion_px = structure_motion.values / scene.meters_per_pixel
    axis_index = 0 if scene.motion_axis == "horizontal" else 1

    if disturbance is not None and camera_offsets is not None:
        raise ValueError("pass either a disturbance model or camera offsets, not both")
    if disturbance is not None:
        cam = disturbance_offsets(disturbance, n, scene.fps)
    elif camera_offsets is not None:
        cam = np.asarray(camera_offsets, dtype=np.float64)
        if cam.shape != (n, 2):
            raise ValueError(f"camera_offsets must be shaped ({n}, 2), got {cam.shape}")
    else:
        cam = np.zeros((n, 2))

    base_center = np.array(scene.marker.center, dtype=np.float64)
    centers = np.tile(base_center, (n, 1))
    centers[:, axis_index] += motion_px
    centers += cam

    r = scene.marker.radius
    lo = centers - r
    hi = centers + r
    bad = np.nonzero(
        (lo[:, 0] < FRAME_MARGIN_PX)
        | (lo[:, 1] < FRAME_MARGIN_PX)
        | (hi[:, 0] > scene.frame_width - FRAME_MARGIN_PX)
        | (hi[:, 1] > scene.frame_height - FRAME_MARGIN_PX)
    )[0]
    if bad.size:
        k = int(bad[0])
        raise MarkerOutOfFrameError(
            f"marker leaves the frame margin at frame {k} "
            f"(center {centers[k, 0]:.2f}, {centers[k, 1]:.2f})", frame=k
        )

    if scene.reference_tag is not None:
        tag_centers = np.asarray(scene.reference_tag.center, dtype=np.float64) + cam
        th = scene.reference_tag.size / 2.0
        tag_bad = np.nonzero(
            (tag_centers[:, 0] - th < FRAME_MARGIN_PX)
            | (tag_centers[:, 1] - th < FRAME_MARGIN_PX)
            | (tag_centers[:, 0] + th > scene.frame_width - FRAME_MARGIN_PX)
            | (tag_centers[:, 1] + th > scene.frame_height - FRAME_MARGIN_PX)
        )[0]
        if tag_bad.size:
            k = int(tag_bad[0])
            raise MarkerOutOfFrameError(
                f"reference tag leaves the frame margin at frame {k}", frame=k
            )
        # The disc overwrites its bounding box, so the two shapes must never share pixels.
        pad = 3.0
        overlap_x = (lo[:, 0] - pad < tag_centers[:, 0] + th) & (hi[:, 0] + pad > tag_centers[:, 0] - th)
        overlap_y = (lo[:, 1] - pad < tag_centers[:, 1] + th) & (hi[:, 1] + pad > tag_centers[:, 1] - th)
        if np.any(overlap_x & overlap_y):
            k = int(np.nonzero(overlap_x & overlap_y)[0][0])
            raise ValueError(f"marker and reference tag overlap at frame {k}")

    rng = np.random.default_rng(scene.seed)
    fg = scene.marker.foreground
    bg = scene.marker.background
    frames = []
    for k in range(n):
        frame = np.full((scene.frame_height, scene.frame_width), float(bg))
        if scene.reference_tag is not None:
            _paint_tag(frame, tag_centers[k, 0], tag_centers[k, 1],
                       scene.reference_tag.size, fg, bg, scene.supersample)
        _paint_disc(frame, centers[k, 0], centers[k, 1], r, fg, bg, scene.supersample)
        if scene.psf_sigma > 0:
            frame = gaussian_filter(frame, scene.psf_sigma, mode="nearest")
        if scene.noise_sigma > 0:
            frame += rng.normal(0.0, scene.noise_sigma, frame.shape)
        frames.append(Frame(np.rint(np.clip(frame, 0.0, 255.0)).astype(np.uint8)))

    truth = GroundTruth(centers, cam, scene.meters_per_pixel, scene.fps)
    return FrameSequence(tuple(frames), fps=scene.fps), truth


def write_frame_files(seq: FrameSequence, directory: str | Path,
                      manifest_name: str = "manifest.json") -> Path:
    """Write frames as PGM plus a JSON manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for k, frame in enumerate(seq.frames):
        name = f"frame_{k:05d}.pgm"
        write_pgm(frame.pixels, directory / name)
        names.append(name)
    manifest_path = directory / manifest_name
    write_manifest(manifest_path, seq.fps, names)
    return manifest_path


# ---------------------------------------------------------------------------
# Ground-truth CSV: `frame,true_u_px,true_v_px,cam_u_px,cam_v_px`.
# ---------------------------------------------------------------------------

_GT_HEADER = "frame,true_u_px,true_v_px,cam_u_px,cam_v_px"


def write_ground_truth_csv(truth: GroundTruth, path: str | Path) -> None:
    u = truth.true_u.tolist()
    v = truth.true_v.tolist()
    cu = (truth.camera_offsets[:, 0] - truth.camera_offsets[0, 0]).tolist()
    cv = (truth.camera_offsets[:, 1] - truth.camera_offsets[0, 1]).tolist()
    lines = [_GT_HEADER]
    for k in range(len(truth)):
        lines.append(f"{k},{u[k]!r},{v[k]!r},{cu[k]!r},{cv[k]!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_ground_truth_csv(path: str | Path) -> np.ndarray:
    """Return rows (n, 4): true_u, true_v, cam_u, cam_v relative to frame 0."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or lines[0].strip() != _GT_HEADER:
        raise MalformedArtifactError(f"{path}: expected header {_GT_HEADER!r}")
    try:
        rows = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
    except ValueError as exc:
        raise MalformedArtifactError(f"{path}: {exc}") from exc
    if rows.ndim != 2 or rows.shape[1] != 5:
        raise MalformedArtifactError(f"{path}: expected five columns")
    return rows[:, 1:]
