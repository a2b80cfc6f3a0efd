"""End-to-end orchestration: simulate, render, track, analyze, assess.

Each stage writes its artifacts under the case output directory so every
reported number can be recomputed from stored files. Runs are fully
deterministic for a given config and seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import scenegen, signalkit, structsim, tracker, uavsim
from .errors import ScenarioError, StageError, VibracamError
from .scenario import ScenarioConfig, SuiteConfig, config_hash, load_scenario
from .signalkit import DiffConfig, ModalEstimate, TimeSeries, assess_damage
from .tracker import CalibrationScale, PixelTrace, Template

__all__ = [
    "RunReport",
    "ComparisonRow",
    "simulate_motion",
    "run_scenario",
    "run_suite",
    "analyze_from_artifacts",
    "compare_runs",
    "format_comparison",
]


@dataclass(frozen=True)
class RunReport:
    """Per-case result; serializes to report.json."""

    case_id: str
    condition: str
    frequency_hz: float
    peak_power: float
    resolution_hz: float
    band_hz: tuple[float, float]
    percent_error: float | None
    reference_hz: float | None
    fps: float
    n_frames: int
    config_hash: str
    artifacts: dict[str, str]

    def modal_estimate(self) -> ModalEstimate:
        return ModalEstimate(
            frequency=self.frequency_hz,
            peak_power=self.peak_power,
            resolution=self.resolution_hz,
            band=tuple(self.band_hz),
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["band_hz"] = list(self.band_hz)
        return d

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        d = dict(d)
        d["band_hz"] = tuple(d["band_hz"])
        return cls(**d)

    @classmethod
    def load(cls, path: str | Path) -> "RunReport":
        return cls.from_dict(json.loads(Path(path).read_text()))


def simulate_motion(config: ScenarioConfig) -> TimeSeries:
    """Roof displacement (meters) sampled on the camera frame grid."""
    model = config.model
    fps = config.scene.fps
    if config.excitation_kind == "free":
        return structsim.free_vibration_analytic(
            model, config.initial_conditions, fps, config.duration_s
        )
    # Chirp response: integrate on a finer grid that strides down to the fps grid.
    f_n = structsim.natural_frequency(model)
    target = max(40.0 * f_n, 3.0 * max(config.chirp.f_start, config.chirp.f_end), fps)
    factor = max(1, math.ceil(target / fps))
    sim_rate = factor * fps
    base = structsim.chirp_excitation(config.chirp, sim_rate, config.duration_s)
    disp, _, _ = structsim.newmark_response(model, base, config.initial_conditions)
    return TimeSeries(disp.values[::factor], fps, t0=disp.t0, unit="m")


def _uav_camera_offsets(config: ScenarioConfig, n_frames: int) -> np.ndarray:
    uav = config.uav
    cfg = uav.alignment
    tag = (uav.initial_distance_m, 0.0, uav.altitude_m)
    initial = uavsim.UavState(
        x=0.0, y=0.0, z=uav.altitude_m, yaw=uav.initial_yaw_offset_rad
    )
    approach = math.pi / cfg.search_yaw_rate + uavsim.settling_time_bound(cfg)
    max_time = approach + (n_frames + 2) * cfg.control_period
    result = uavsim.run_alignment(initial, tag, cfg, max_time, seed=uav.seed)
    if result.timed_out or result.hold_offset_u is None:
        raise VibracamError("UAV alignment never reached a usable hold segment")
    if len(result.hold_offset_u) < n_frames:
        raise VibracamError(
            f"hold segment holds {len(result.hold_offset_u)} frames, "
            f"need {n_frames}"
        )
    offsets = np.column_stack([
        result.hold_offset_u.values[:n_frames],
        result.hold_offset_v.values[:n_frames],
    ])
    return offsets


def _template_rect(center: tuple[float, float], half: int,
                   width: int, height: int) -> tuple[int, int, int, int]:
    x = int(round(center[0])) - half
    y = int(round(center[1])) - half
    side = 2 * half
    x = min(max(x, 0), width - side)
    y = min(max(y, 0), height - side)
    return (x, y, side, side)


def _analysis_series(trace: PixelTrace, config: ScenarioConfig) -> dict:
    """Calibrate, detrend and optionally double-differentiate a pixel trace."""
    scene = config.scene
    scale = CalibrationScale(scene.meters_per_pixel, axis=scene.motion_axis)
    displacement = tracker.calibrate_trace(trace, scale, scene.fps)
    conditioned = signalkit.detrend(displacement, config.analysis.detrend) \
        if config.analysis.detrend != "none" else displacement
    out = {"displacement": displacement}
    if config.analysis.use_acceleration:
        diff_cfg = DiffConfig("smoothed", config.analysis.diff_window(scene.fps))
        velocity = signalkit.differentiate(conditioned, diff_cfg)
        acceleration = signalkit.differentiate(velocity, diff_cfg)
        out["analysis_signal"] = acceleration
        out["acceleration"] = acceleration
    else:
        out["analysis_signal"] = conditioned
    return out


def _analyze_trace(trace: PixelTrace, config: ScenarioConfig, out_dir: Path) -> RunReport:
    series = _analysis_series(trace, config)
    signalkit.write_timeseries_csv(series["displacement"], out_dir / "displacement.csv")
    artifacts = {
        "trace": "trace.csv",
        "displacement": "displacement.csv",
        "spectrum": "spectrum.csv",
    }
    if "acceleration" in series:
        signalkit.write_timeseries_csv(series["acceleration"], out_dir / "accel.csv")
        artifacts["acceleration"] = "accel.csv"

    sig = series["analysis_signal"]
    welch_cfg = config.analysis.welch_config(len(sig))
    spectrum = signalkit.welch_psd(sig, welch_cfg)
    signalkit.write_spectrum_csv(spectrum, out_dir / "spectrum.csv")

    band = config.analysis.band(spectrum.nyquist)
    estimate = signalkit.find_fundamental(spectrum, band)

    reference = config.reference_hz
    error = signalkit.percent_error(estimate.frequency, reference) \
        if reference is not None else None
    if (out_dir / "ground_truth.csv").exists():
        artifacts["ground_truth"] = "ground_truth.csv"
    if (out_dir / "reference_trace.csv").exists():
        artifacts["reference_trace"] = "reference_trace.csv"
        artifacts["compensated_trace"] = "compensated_trace.csv"
    if (out_dir / "frames" / "manifest.json").exists():
        artifacts["manifest"] = "frames/manifest.json"

    return RunReport(
        case_id=config.case_id,
        condition=config.condition,
        frequency_hz=estimate.frequency,
        peak_power=estimate.peak_power,
        resolution_hz=estimate.resolution,
        band_hz=tuple(estimate.band),
        percent_error=error,
        reference_hz=reference,
        fps=config.scene.fps,
        n_frames=len(trace),
        config_hash=config_hash(config.raw),
        artifacts=artifacts,
    )


def run_scenario(config: ScenarioConfig | str | Path, out_dir: str | Path,
                 seed: int | None = None) -> RunReport:
    """Execute simulate -> render -> track -> analyze for one case.

    All intermediate artifacts land in `out_dir`; stage failures raise
    StageError carrying the stage name while retaining whatever artifacts
    were already written.
    """
    if not isinstance(config, ScenarioConfig):
        config = load_scenario(config, seed_override=seed)
    elif seed is not None and seed != config.seed:
        raise ScenarioError("pass seed overrides through load_scenario")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    case = config.case_id

    try:
        motion = simulate_motion(config)
    except Exception as exc:
        raise StageError("simulate", case, exc) from exc

    try:
        camera_offsets = None
        if config.uav is not None:
            camera_offsets = _uav_camera_offsets(config, len(motion))
        seq, truth = scenegen.render_frames(
            config.scene, motion,
            disturbance=config.disturbance,
            camera_offsets=camera_offsets,
        )
        scenegen.write_ground_truth_csv(truth, out_dir / "ground_truth.csv")
        if config.save_frames:
            scenegen.write_frame_files(seq, out_dir / "frames")
    except Exception as exc:
        raise StageError("render", case, exc) from exc

    try:
        marker_half = int(math.ceil(config.scene.marker.radius)) + config.tracking.template_margin_px
        rect = _template_rect(
            tuple(truth.marker_centers[0]), marker_half,
            config.scene.frame_width, config.scene.frame_height,
        )
        template = Template.from_frame(seq, rect)
        trace = tracker.track_marker(
            seq, template,
            search_radius=config.tracking.search_radius_px,
            score_threshold=config.tracking.score_threshold,
        )
        tracker.write_trace_csv(trace, out_dir / "trace.csv")

        analysis_trace = trace
        if config.scene.reference_tag is not None:
            tag_center0 = (
                config.scene.reference_tag.center[0] + truth.camera_offsets[0, 0],
                config.scene.reference_tag.center[1] + truth.camera_offsets[0, 1],
            )
            tag_half = int(math.ceil(config.scene.reference_tag.size / 2.0)) \
                + config.tracking.template_margin_px
            tag_rect = _template_rect(
                tag_center0, tag_half,
                config.scene.frame_width, config.scene.frame_height,
            )
            tag_template = Template.from_frame(seq, tag_rect)
            reference_trace = tracker.track_marker(
                seq, tag_template,
                search_radius=config.tracking.search_radius_px,
                score_threshold=config.tracking.score_threshold,
            )
            tracker.write_trace_csv(reference_trace, out_dir / "reference_trace.csv")
            analysis_trace = tracker.compensate_reference(trace, reference_trace)
            tracker.write_trace_csv(analysis_trace, out_dir / "compensated_trace.csv")
    except Exception as exc:
        raise StageError("track", case, exc) from exc

    try:
        report = _analyze_trace(analysis_trace, config, out_dir)
        report.save(out_dir / "report.json")
    except Exception as exc:
        raise StageError("analyze", case, exc) from exc
    return report


def analyze_from_artifacts(out_dir: str | Path, config: ScenarioConfig) -> RunReport:
    """Recompute the analysis stage from stored trace artifacts.

    Regenerating the report from an untouched output directory reproduces
    report.json byte for byte.
    """
    out_dir = Path(out_dir)
    trace_name = "compensated_trace.csv" \
        if (out_dir / "compensated_trace.csv").exists() else "trace.csv"
    trace = tracker.read_trace_csv(out_dir / trace_name)
    return _analyze_trace(trace, config, out_dir)


# ---------------------------------------------------------------------------
# Suites and comparisons.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    healthy_id: str | None
    f_healthy: float | None
    error_healthy: float | None
    damaged_id: str | None
    f_damaged: float | None
    error_damaged: float | None


def compare_runs(
    reports: list[RunReport],
    reference_healthy: float,
    reference_damaged: float,
) -> tuple[list[ComparisonRow], list[str]]:
    """Pair healthy/damaged reports into a reference-error table.

    Cases pair by id convention: a leading H pairs with the same id led by
    D. Unpaired cases produce rows with the counterpart columns blank plus
    a warning.
    """
    if not reports:
        raise ValueError("need at least one report")
    healthy = {r.case_id: r for r in reports if r.condition == "healthy"}
    damaged = {r.case_id: r for r in reports if r.condition == "damaged"}
    other = [r for r in reports if r.condition not in ("healthy", "damaged")]

    rows: list[ComparisonRow] = []
    warnings: list[str] = []
    used_damaged = set()
    for case_id in sorted(healthy):
        r = healthy[case_id]
        mate_id = "D" + case_id[1:] if case_id[:1].upper() == "H" else None
        mate = damaged.get(mate_id)
        if mate is None:
            warnings.append(f"no damaged counterpart for {case_id}")
            rows.append(ComparisonRow(
                case_id, r.frequency_hz,
                signalkit.percent_error(r.frequency_hz, reference_healthy),
                None, None, None,
            ))
        else:
            used_damaged.add(mate.case_id)
            rows.append(ComparisonRow(
                case_id, r.frequency_hz,
                signalkit.percent_error(r.frequency_hz, reference_healthy),
                mate.case_id, mate.frequency_hz,
                signalkit.percent_error(mate.frequency_hz, reference_damaged),
            ))
    for case_id in sorted(damaged):
        if case_id in used_damaged:
            continue
        warnings.append(f"no healthy counterpart for {case_id}")
        r = damaged[case_id]
        rows.append(ComparisonRow(
            None, None, None,
            case_id, r.frequency_hz,
            signalkit.percent_error(r.frequency_hz, reference_damaged),
        ))
    for r in other:
        warnings.append(f"case {r.case_id} has no healthy/damaged condition; skipped")
    return rows, warnings


_COMPARISON_HEADER = ("case_healthy", "f_h_hz", "err_h_pct",
                      "case_damaged", "f_d_hz", "err_d_pct")


def _row_cells(row: ComparisonRow) -> tuple[str, ...]:
    return (
        row.healthy_id or "",
        "" if row.f_healthy is None else f"{row.f_healthy:.2f}",
        "" if row.error_healthy is None else f"{row.error_healthy:.1f}",
        row.damaged_id or "",
        "" if row.f_damaged is None else f"{row.f_damaged:.2f}",
        "" if row.error_damaged is None else f"{row.error_damaged:.1f}",
    )


def format_comparison(rows: list[ComparisonRow], fmt: str = "console") -> str:
    """Render comparison rows as CSV or an aligned console table."""
    cells = [_COMPARISON_HEADER] + [_row_cells(r) for r in rows]
    if fmt == "csv":
        return "\n".join(",".join(row) for row in cells) + "\n"
    if fmt != "console":
        raise ValueError(f"unknown format {fmt!r}")
    widths = [max(len(row[i]) for row in cells) for i in range(len(_COMPARISON_HEADER))]
    lines = []
    for i, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def run_suite(suite: SuiteConfig, out_root: str | Path,
              seed: int | None = None) -> dict:
    """Run every case of a suite, then assess the configured pairs."""
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    reports: dict[str, RunReport] = {}
    configs: dict[str, ScenarioConfig] = {}
    for case_path in suite.case_paths:
        config = load_scenario(case_path, seed_override=seed)
        report = run_scenario(config, out_root / config.case_id)
        reports[config.case_id] = report
        configs[config.case_id] = config

    assessments = {}
    for healthy_id, damaged_id in suite.pairs:
        if healthy_id not in reports or damaged_id not in reports:
            raise ScenarioError(
                f"suite pair ({healthy_id}, {damaged_id}) references unknown cases"
            )
        cfg = configs[healthy_id]
        if cfg.reference_healthy_hz is None or cfg.reference_damaged_hz is None:
            raise ScenarioError(
                f"case {healthy_id} lacks references needed for damage assessment"
            )
        assessment = assess_damage(
            reports[healthy_id].modal_estimate(),
            reports[damaged_id].modal_estimate(),
            cfg.reference_healthy_hz,
            cfg.reference_damaged_hz,
            detection_threshold=cfg.analysis.damage_threshold_hz,
        )
        assessments[f"{healthy_id}/{damaged_id}"] = asdict(assessment)

    summary = {
        "cases": {cid: reports[cid].to_dict() for cid in sorted(reports)},
        "assessments": {k: assessments[k] for k in sorted(assessments)},
    }
    (out_root / "suite_report.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    return summary
