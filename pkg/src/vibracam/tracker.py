"""Marker displacement extraction from grayscale frame sequences.

Matching uses zero-normalized cross-correlation against a template cut from
the first frame, with the integer peak refined by a 2D quadratic fit over
its 3x3 neighborhood. Platform motion common to the whole image is removed
by subtracting the trace of a stationary reference target.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    FrameDimensionError,
    MalformedArtifactError,
    MissingFrameError,
    SearchRadiusExhaustedError,
    TrackLostError,
    UnsupportedFormatError,
    UntrackableTemplateError,
)
from .signalkit import TimeSeries

__all__ = [
    "Frame",
    "FrameSequence",
    "Template",
    "PixelTrace",
    "CalibrationScale",
    "load_frames",
    "read_pgm",
    "write_pgm",
    "write_manifest",
    "ncc",
    "track_marker",
    "calibrate_trace",
    "scale_from_marker",
    "compensate_reference",
    "read_trace_csv",
    "write_trace_csv",
]

MIN_FRAME_SIDE = 16
MIN_TEMPLATE_SIDE = 8
DEFAULT_SCORE_THRESHOLD = 0.5
DEFAULT_SEARCH_RADIUS = 20


@dataclass(frozen=True, eq=False)
class Frame:
    """Single 8-bit grayscale frame, pixels stored row-major as (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"frame pixels must be 2D, got shape {px.shape}")
        if px.dtype != np.uint8:
            raise ValueError(f"frame pixels must be uint8, got {px.dtype}")
        if px.shape[0] < MIN_FRAME_SIDE or px.shape[1] < MIN_FRAME_SIDE:
            raise ValueError(f"frame must be at least {MIN_FRAME_SIDE}px per side")
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Ordered frames of identical dimensions with timing information."""

    frames: tuple[Frame, ...]
    fps: float
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("frame sequence must not be empty")
        w, h = frames[0].width, frames[0].height
        for i, f in enumerate(frames):
            if f.width != w or f.height != h:
                raise FrameDimensionError(
                    f"frame {i} is {f.width}x{f.height}, expected {w}x{h}"
                )
        if not self.fps > 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype=np.float64)
            if ts.size != len(frames):
                raise ValueError("timestamps length must match frame count")
            if np.any(np.diff(ts) <= 0):
                raise ValueError("timestamps must be strictly increasing")
            ts.setflags(write=False)
            object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def times(self) -> np.ndarray:
        if self.timestamps is not None:
            return self.timestamps
        return np.arange(len(self)) / self.fps


@dataclass(frozen=True, eq=False)
class Template:
    """Rectangular patch copied out of one frame at definition time."""

    frame_index: int
    x: int
    y: int
    width: int
    height: int
    patch: np.ndarray

    @classmethod
    def from_frame(cls, seq: FrameSequence, rect: tuple[int, int, int, int],
                   frame_index: int = 0) -> "Template":
        x, y, w, h = rect
        frame = seq.frames[frame_index]
        if w < MIN_TEMPLATE_SIDE or h < MIN_TEMPLATE_SIDE:
            raise ValueError(f"template must be at least {MIN_TEMPLATE_SIDE}px per side")
        if x < 0 or y < 0 or x + w > frame.width or y + h > frame.height:
            raise ValueError(f"template rect {rect} falls outside the frame")
        patch = frame.pixels[y:y + h, x:x + w].astype(np.float64)
        return cls(frame_index=frame_index, x=x, y=y, width=w, height=h, patch=patch)

    def __post_init__(self):
        patch = np.asarray(self.patch, dtype=np.float64)
        if patch.shape != (self.height, self.width):
            raise ValueError("patch shape must match the template rectangle")
        patch = patch.copy()
        patch.setflags(write=False)
        object.__setattr__(self, "patch", patch)


@dataclass(frozen=True, eq=False)
class PixelTrace:
    """Per-frame (u, v) displacement of the template relative to frame 0."""

    u: np.ndarray
    v: np.ndarray
    score: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        v = np.asarray(self.v, dtype=np.float64)
        s = np.asarray(self.score, dtype=np.float64)
        if not (u.shape == v.shape == s.shape) or u.ndim != 1:
            raise ValueError("u, v and score must be 1D arrays of equal length")
        for arr in (u, v, s):
            arr.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "score", s)

    def __len__(self) -> int:
        return int(self.u.size)


@dataclass(frozen=True)
class CalibrationScale:
    """Pixel-to-length conversion along one image axis."""

    meters_per_pixel: float
    axis: str = "horizontal"

    def __post_init__(self):
        if not (self.meters_per_pixel > 0 and np.isfinite(self.meters_per_pixel)):
            raise ValueError(f"meters_per_pixel must be positive, got {self.meters_per_pixel}")
        if self.axis not in ("horizontal", "vertical"):
            raise ValueError(f"axis must be horizontal or vertical, got {self.axis!r}")


# ---------------------------------------------------------------------------
# PGM and manifest I/O. Manifest: JSON with fields fps, frames, timestamps.
# ---------------------------------------------------------------------------

def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary (P5) PGM with maxval 255."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise UnsupportedFormatError(f"{path}: not a binary P5 PGM")
    # Header tokens: magic, width, height, maxval; '#' starts a comment line.
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise UnsupportedFormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise UnsupportedFormatError(f"{path}: bad PGM header") from exc
    if maxval != 255:
        raise UnsupportedFormatError(f"{path}: maxval must be 255, got {maxval}")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=pos)
    if pixels.size != width * height:
        raise UnsupportedFormatError(
            f"{path}: payload holds {pixels.size} bytes, expected {width * height}"
        )
    return pixels.reshape(height, width).copy()


def write_pgm(pixels: np.ndarray, path: str | Path) -> None:
    px = np.asarray(pixels)
    if px.ndim != 2 or px.dtype != np.uint8:
        raise ValueError("pixels must be a 2D uint8 array")
    header = f"P5\n{px.shape[1]} {px.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + px.tobytes())


def write_manifest(path: str | Path, fps: float, frame_files: list[str],
                   timestamps: list[float] | None = None) -> None:
    manifest = {"fps": fps, "frames": frame_files}
    if timestamps is not None:
        manifest["timestamps"] = timestamps
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_frames(manifest_path: str | Path) -> FrameSequence:
    """Load a frame sequence from a JSON manifest.

    The manifest lists `fps`, an ordered `frames` array of paths relative to
    the manifest, and optionally `timestamps`.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise MissingFrameError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise UnsupportedFormatError(f"{manifest_path}: invalid manifest JSON: {exc}") from exc
    if not isinstance(manifest, dict) or "fps" not in manifest or "frames" not in manifest:
        raise UnsupportedFormatError(f"{manifest_path}: manifest needs 'fps' and 'frames'")

    base = manifest_path.parent
    frames = []
    first_shape = None
    for i, rel in enumerate(manifest["frames"]):
        fpath = base / rel
        if not fpath.exists():
            raise MissingFrameError(f"missing frame file: {fpath}")
        pixels = read_pgm(fpath)
        if first_shape is None:
            first_shape = pixels.shape
        elif pixels.shape != first_shape:
            raise FrameDimensionError(
                f"frame {i} ({rel}) is {pixels.shape[1]}x{pixels.shape[0]}, "
                f"expected {first_shape[1]}x{first_shape[0]}"
            )
        frames.append(Frame(pixels))
    timestamps = manifest.get("timestamps")
    return FrameSequence(tuple(frames), fps=float(manifest["fps"]),
                         timestamps=None if timestamps is None else np.asarray(timestamps))


# ---------------------------------------------------------------------------
# Correlation matching.
# ---------------------------------------------------------------------------

def _zncc_surface(region: np.ndarray, patch_zero_mean: np.ndarray,
                  patch_norm: float) -> np.ndarray:
    """ZNCC of a zero-mean patch against every placement inside `region`."""
    th, tw = patch_zero_mean.shape
    windows = sliding_window_view(region, (th, tw))
    n = th * tw
    cross = np.einsum("ijkl,kl->ij", windows, patch_zero_mean, optimize=True)
    wsum = windows.sum(axis=(2, 3))
    wsq = np.einsum("ijkl,ijkl->ij", windows, windows, optimize=True)
    var = wsq - wsum * wsum / n
    np.clip(var, 0.0, None, out=var)
    denom = patch_norm * np.sqrt(var)
    with np.errstate(divide="ignore", invalid="ignore"):
        surface = np.where(denom > 0, cross / denom, 0.0)
    return np.clip(surface, -1.0, 1.0)


def _prepare_patch(template: Template) -> tuple[np.ndarray, float]:
    zero_mean = template.patch - template.patch.mean()
    norm = float(np.sqrt(np.sum(zero_mean * zero_mean)))
    if norm < 1e-9:
        raise UntrackableTemplateError("template patch has zero intensity variance")
    return zero_mean, norm


def ncc(frame: Frame, template: Template,
        search: tuple[int, int, int, int]) -> np.ndarray:
    """Correlation surface over all template placements inside `search`.

    `search` is an (x, y, w, h) rectangle in frame coordinates; the surface
    has shape (h - template.height + 1, w - template.width + 1) and entry
    [j, i] scores the placement with top-left corner (x + i, y + j).
    """
    x, y, w, h = search
    if x < 0 or y < 0 or x + w > frame.width or y + h > frame.height:
        raise ValueError(f"search region {search} falls outside the frame")
    if w < template.width or h < template.height:
        raise ValueError("search region is smaller than the template")
    patch_zero_mean, patch_norm = _prepare_patch(template)
    region = frame.pixels[y:y + h, x:x + w].astype(np.float64)
    return _zncc_surface(region, patch_zero_mean, patch_norm)


def _quadratic_peak_offset(neigh: np.ndarray) -> tuple[float, float]:
    """Sub-pixel offset of the extremum of a quadratic fitted to a 3x3 patch."""
    # Least-squares stencil for f = a + bx + cy + dx^2 + exy + fy^2 on the
    # 3x3 grid x, y in {-1, 0, 1}.
    z = neigh
    b = (z[:, 2].sum() - z[:, 0].sum()) / 6.0
    c = (z[2, :].sum() - z[0, :].sum()) / 6.0
    d = (z[:, 0].sum() - 2.0 * z[:, 1].sum() + z[:, 2].sum()) / 6.0
    f = (z[0, :].sum() - 2.0 * z[1, :].sum() + z[2, :].sum()) / 6.0
    e = (z[2, 2] - z[2, 0] - z[0, 2] + z[0, 0]) / 4.0
    det = 4.0 * d * f - e * e
    if det <= 0 or d >= 0:
        return 0.0, 0.0
    dx = (e * c - 2.0 * f * b) / det
    dy = (e * b - 2.0 * d * c) / det
    if abs(dx) > 1.0 or abs(dy) > 1.0:
        return 0.0, 0.0
    return float(dx), float(dy)


def track_marker(seq: FrameSequence, template: Template,
                 search_radius: int = DEFAULT_SEARCH_RADIUS,
                 score_threshold: float = DEFAULT_SCORE_THRESHOLD) -> PixelTrace:
    """Track a frame-0 template through the sequence.

    For each frame the search window is re-centered on the previous
    estimate; the integer ZNCC peak is refined by a quadratic fit on its
    3x3 neighborhood. The first entry is (0, 0) with score 1 by
    construction.

    Raises TrackLostError when the peak score drops below
    `score_threshold` and SearchRadiusExhaustedError when the peak lands on
    the search-window boundary.
    """
    if template.frame_index != 0:
        raise ValueError("template must be defined on frame 0")
    if search_radius < 2:
        raise ValueError(f"search_radius must be at least 2, got {search_radius}")
    patch_zero_mean, patch_norm = _prepare_patch(template)

    n = len(seq)
    u = np.zeros(n)
    v = np.zeros(n)
    score = np.ones(n)
    frame0 = seq.frames[0]
    max_x = frame0.width - template.width
    max_y = frame0.height - template.height

    prev_u, prev_v = 0.0, 0.0
    for k in range(1, n):
        cx = template.x + int(round(prev_u))
        cy = template.y + int(round(prev_v))
        x_lo = max(cx - search_radius, 0)
        x_hi = min(cx + search_radius, max_x)
        y_lo = max(cy - search_radius, 0)
        y_hi = min(cy + search_radius, max_y)
        if x_lo > x_hi or y_lo > y_hi:
            raise SearchRadiusExhaustedError(
                f"search window left the frame at frame {k}", frame=k
            )
        region = seq.frames[k].pixels[
            y_lo:y_hi + template.height, x_lo:x_hi + template.width
        ].astype(np.float64)
        surface = _zncc_surface(region, patch_zero_mean, patch_norm)
        j, i = np.unravel_index(np.argmax(surface), surface.shape)
        best = float(surface[j, i])
        on_edge = (
            i == 0 or j == 0
            or i == surface.shape[1] - 1 or j == surface.shape[0] - 1
        )
        if on_edge:
            raise SearchRadiusExhaustedError(
                f"search radius exhausted at frame {k}: peak on window boundary",
                frame=k,
            )
        if best < score_threshold:
            raise TrackLostError(
                f"track lost at frame {k}: peak score {best:.3f} below "
                f"threshold {score_threshold}", frame=k
            )
        if best >= 1.0 - 1e-12:
            # exact patch equality: the displacement is the integer peak
            dx, dy = 0.0, 0.0
        else:
            dx, dy = _quadratic_peak_offset(surface[j - 1:j + 2, i - 1:i + 2])
        prev_u = (x_lo + i + dx) - template.x
        prev_v = (y_lo + j + dy) - template.y
        u[k], v[k], score[k] = prev_u, prev_v, best
    return PixelTrace(u, v, score)


def calibrate_trace(trace: PixelTrace, scale: CalibrationScale, fps: float) -> TimeSeries:
    """Convert the selected trace axis to physical displacement in meters."""
    axis = trace.u if scale.axis == "horizontal" else trace.v
    return TimeSeries(axis * scale.meters_per_pixel, sample_rate=fps, unit="m")


def scale_from_marker(known_size_m: float, measured_size_px: float,
                      axis: str = "horizontal") -> CalibrationScale:
    """Pixel-to-length scale from a feature of known physical size."""
    if known_size_m <= 0 or measured_size_px <= 0:
        raise ValueError("known and measured sizes must both be positive")
    return CalibrationScale(meters_per_pixel=known_size_m / measured_size_px, axis=axis)


def compensate_reference(target: PixelTrace, reference: PixelTrace) -> PixelTrace:
    """Subtract a stationary reference trace to remove common-mode camera motion."""
    if len(target) != len(reference):
        raise ValueError(
            f"trace lengths differ: {len(target)} vs {len(reference)}"
        )
    return PixelTrace(
        target.u - reference.u,
        target.v - reference.v,
        np.minimum(target.score, reference.score),
    )


# ---------------------------------------------------------------------------
# Trace CSV: `frame,u_px,v_px,score`.
# ---------------------------------------------------------------------------

def write_trace_csv(trace: PixelTrace, path: str | Path) -> None:
    lines = ["frame,u_px,v_px,score"]
    for k, (u, v, s) in enumerate(zip(trace.u.tolist(), trace.v.tolist(),
                                      trace.score.tolist())):
        lines.append(f"{k},{u!r},{v!r},{s!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace_csv(path: str | Path) -> PixelTrace:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "frame,u_px,v_px,score":
        raise MalformedArtifactError(f"{path}: expected header frame,u_px,v_px,score")
    if len(lines) < 2:
        raise MalformedArtifactError(f"{path}: no data rows")
    try:
        rows = np.array([[float(c) for c in ln.split(",")] for ln in lines[1:]])
    except ValueError as exc:
        raise MalformedArtifactError(f"{path}: {exc}") from exc
    if rows.shape[1] != 4:
        raise MalformedArtifactError(f"{path}: expected four columns")
    return PixelTrace(rows[:, 1], rows[:, 2], rows[:, 3])
