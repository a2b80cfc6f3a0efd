"""Self-contained SVG renderings of stored artifacts.

Hand-rolled emission keeps plot bytes deterministic for a given artifact,
which the reproducibility guarantees rely on.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import MalformedArtifactError, NoPeakError
from .signalkit import default_search_band, find_fundamental, read_spectrum_csv, read_timeseries_csv
from .uavsim import read_trajectory_csv

__all__ = ["plot"]

_WIDTH, _HEIGHT = 800, 500
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 25, 35, 55

_PHASE_COLORS = {"SEARCH": "#d62728", "ALIGN": "#ff7f0e", "HOLD": "#2ca02c"}


class _Axes:
    def __init__(self, x_min, x_max, y_min, y_max):
        if x_max <= x_min:
            x_min, x_max = x_min - 0.5, x_min + 0.5
        if y_max <= y_min:
            y_min, y_max = y_min - 0.5, y_min + 0.5
        self.x_min, self.x_max = float(x_min), float(x_max)
        self.y_min, self.y_max = float(y_min), float(y_max)

    def px(self, x):
        span = self.x_max - self.x_min
        return _MARGIN_L + (x - self.x_min) / span * (_WIDTH - _MARGIN_L - _MARGIN_R)

    def py(self, y):
        span = self.y_max - self.y_min
        return _HEIGHT - _MARGIN_B - (y - self.y_min) / span * (_HEIGHT - _MARGIN_T - _MARGIN_B)


def _svg_open(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.0f}" y="20" font-family="sans-serif" font-size="14" '
        f'text-anchor="middle">{title}</text>',
    ]


def _axes_markup(ax: _Axes, x_label: str, y_label: str) -> list[str]:
    parts = [
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{_WIDTH - _MARGIN_L - _MARGIN_R}" '
        f'height="{_HEIGHT - _MARGIN_T - _MARGIN_B}" fill="none" stroke="black"/>'
    ]
    for x in np.linspace(ax.x_min, ax.x_max, 6):
        px = ax.px(x)
        parts.append(
            f'<line x1="{px:.2f}" y1="{_HEIGHT - _MARGIN_B}" x2="{px:.2f}" '
            f'y2="{_HEIGHT - _MARGIN_B + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px:.2f}" y="{_HEIGHT - _MARGIN_B + 18}" font-family="sans-serif" '
            f'font-size="11" text-anchor="middle">{x:.4g}</text>'
        )
    for y in np.linspace(ax.y_min, ax.y_max, 6):
        py = ax.py(y)
        parts.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{py:.2f}" x2="{_MARGIN_L}" '
            f'y2="{py:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{py + 4:.2f}" font-family="sans-serif" '
            f'font-size="11" text-anchor="end">{y:.4g}</text>'
        )
    parts.append(
        f'<text x="{(_MARGIN_L + _WIDTH - _MARGIN_R) / 2:.0f}" y="{_HEIGHT - 12}" '
        f'font-family="sans-serif" font-size="12" text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{(_MARGIN_T + _HEIGHT - _MARGIN_B) / 2:.0f}" '
        f'font-family="sans-serif" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {(_MARGIN_T + _HEIGHT - _MARGIN_B) / 2:.0f})">{y_label}</text>'
    )
    return parts


def _polyline(ax: _Axes, xs, ys, color: str) -> str:
    points = " ".join(f"{ax.px(x):.2f},{ax.py(y):.2f}" for x, y in zip(xs, ys))
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{points}"/>'


def _plot_timeseries(path: Path) -> list[str]:
    series = read_timeseries_csv(path)
    t = series.times
    ax = _Axes(t[0], t[-1], series.values.min(), series.values.max())
    parts = _svg_open(path.name)
    parts += _axes_markup(ax, "time (s)", "value")
    parts.append(_polyline(ax, t, series.values, "#1f77b4"))
    return parts


def _plot_spectrum(path: Path) -> list[str]:
    spectrum = read_spectrum_csv(path)
    ax = _Axes(spectrum.frequencies[0], spectrum.frequencies[-1],
               0.0, spectrum.psd.max() * 1.05 if spectrum.psd.max() > 0 else 1.0)
    parts = _svg_open(path.name)
    parts += _axes_markup(ax, "frequency (Hz)", "PSD (unit^2/Hz)")
    parts.append(_polyline(ax, spectrum.frequencies, spectrum.psd, "#1f77b4"))
    try:
        peak = find_fundamental(spectrum, default_search_band(spectrum))
    except (NoPeakError, ValueError):
        peak = None
    if peak is not None:
        px, py = ax.px(peak.frequency), ax.py(peak.peak_power)
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="4" fill="#d62728"/>')
        parts.append(
            f'<text x="{px + 8:.2f}" y="{max(py - 8, _MARGIN_T + 12):.2f}" '
            f'font-family="sans-serif" font-size="12" fill="#d62728">'
            f'{peak.frequency:.2f} Hz</text>'
        )
    return parts


def _plot_trajectory(path: Path) -> list[str]:
    rows = read_trajectory_csv(path)
    if not rows:
        raise MalformedArtifactError(f"{path}: trajectory has no rows")
    xs = np.array([r["x"] for r in rows])
    ys = np.array([r["y"] for r in rows])
    ax = _Axes(xs.min(), xs.max(), ys.min(), ys.max())
    parts = _svg_open(path.name)
    parts += _axes_markup(ax, "x (m)", "y (m)")
    for i in range(len(rows) - 1):
        color = _PHASE_COLORS.get(rows[i]["phase"], "#7f7f7f")
        parts.append(
            f'<line x1="{ax.px(xs[i]):.2f}" y1="{ax.py(ys[i]):.2f}" '
            f'x2="{ax.px(xs[i + 1]):.2f}" y2="{ax.py(ys[i + 1]):.2f}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
    for i, (phase, color) in enumerate(_PHASE_COLORS.items()):
        y = _MARGIN_T + 16 + 16 * i
        parts.append(
            f'<rect x="{_WIDTH - 120}" y="{y - 9}" width="10" height="10" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{_WIDTH - 105}" y="{y}" font-family="sans-serif" '
            f'font-size="11">{phase}</text>'
        )
    return parts


def plot(artifact_path: str | Path, kind: str, out_path: str | Path) -> Path:
    """Render an artifact CSV ("timeseries", "spectrum" or "trajectory") to SVG."""
    artifact_path = Path(artifact_path)
    if not artifact_path.exists():
        raise MalformedArtifactError(f"artifact not found: {artifact_path}")
    if kind == "timeseries":
        parts = _plot_timeseries(artifact_path)
    elif kind == "spectrum":
        parts = _plot_spectrum(artifact_path)
    elif kind == "trajectory":
        parts = _plot_trajectory(artifact_path)
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    parts.append("</svg>")
    out_path = Path(out_path)
    out_path.write_text("\n".join(parts) + "\n")
    return out_path
