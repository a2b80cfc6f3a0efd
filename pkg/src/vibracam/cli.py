"""Command-line front end.

Exit codes: 0 on success, 1 for configuration/validation problems, 2 for
pipeline stage failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import pipeline, scenario, signalkit, svgplot, tracker
from .errors import (
    FrameLoadError,
    MalformedArtifactError,
    ScenarioError,
    StageError,
    VibracamError,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_STAGE = 2


def _cmd_simulate(args) -> int:
    config = scenario.load_scenario(args.config, seed_override=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    motion = pipeline.simulate_motion(config)
    signalkit.write_timeseries_csv(motion, out / "sim_displacement.csv")
    print(f"{config.case_id}: wrote {len(motion)} samples at {motion.sample_rate} Hz "
          f"to {out / 'sim_displacement.csv'}")
    return EXIT_OK


def _cmd_render(args) -> int:
    from . import scenegen

    config = scenario.load_scenario(args.config, seed_override=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    motion = pipeline.simulate_motion(config)
    camera_offsets = None
    if config.uav is not None:
        camera_offsets = pipeline._uav_camera_offsets(config, len(motion))
    seq, truth = scenegen.render_frames(
        config.scene, motion, disturbance=config.disturbance,
        camera_offsets=camera_offsets,
    )
    scenegen.write_ground_truth_csv(truth, out / "ground_truth.csv")
    manifest = scenegen.write_frame_files(seq, out / "frames")
    print(f"{config.case_id}: rendered {len(seq)} frames, manifest {manifest}")
    return EXIT_OK


def _cmd_track(args) -> int:
    import math

    config = scenario.load_scenario(args.config, seed_override=args.seed)
    out = Path(args.out)
    seq = tracker.load_frames(out / "frames" / "manifest.json")
    marker_half = int(math.ceil(config.scene.marker.radius)) \
        + config.tracking.template_margin_px
    rect = pipeline._template_rect(
        config.scene.marker.center, marker_half,
        config.scene.frame_width, config.scene.frame_height,
    )
    trace = tracker.track_marker(
        seq, tracker.Template.from_frame(seq, rect),
        search_radius=config.tracking.search_radius_px,
        score_threshold=config.tracking.score_threshold,
    )
    tracker.write_trace_csv(trace, out / "trace.csv")
    if config.scene.reference_tag is not None:
        tag_half = int(math.ceil(config.scene.reference_tag.size / 2.0)) \
            + config.tracking.template_margin_px
        tag_rect = pipeline._template_rect(
            config.scene.reference_tag.center, tag_half,
            config.scene.frame_width, config.scene.frame_height,
        )
        reference = tracker.track_marker(
            seq, tracker.Template.from_frame(seq, tag_rect),
            search_radius=config.tracking.search_radius_px,
            score_threshold=config.tracking.score_threshold,
        )
        tracker.write_trace_csv(reference, out / "reference_trace.csv")
        compensated = tracker.compensate_reference(trace, reference)
        tracker.write_trace_csv(compensated, out / "compensated_trace.csv")
    print(f"{config.case_id}: tracked {len(trace)} frames into {out / 'trace.csv'}")
    return EXIT_OK


def _cmd_analyze(args) -> int:
    config = scenario.load_scenario(args.config, seed_override=args.seed)
    out = Path(args.out)
    report = pipeline.analyze_from_artifacts(out, config)
    report.save(out / "report.json")
    err = "" if report.percent_error is None else f" (error {report.percent_error:.1f}%)"
    print(f"{config.case_id}: fundamental {report.frequency_hz:.2f} Hz{err}")
    return EXIT_OK


def _cmd_assess(args) -> int:
    healthy = pipeline.RunReport.load(args.healthy)
    damaged = pipeline.RunReport.load(args.damaged)
    if args.reference:
        ref_h, ref_d = args.reference
    else:
        ref_h, ref_d = healthy.reference_hz, damaged.reference_hz
        if ref_h is None or ref_d is None:
            raise ScenarioError(
                "reports carry no reference frequencies; pass --reference F_H F_D"
            )
    assessment = signalkit.assess_damage(
        healthy.modal_estimate(), damaged.modal_estimate(), ref_h, ref_d,
        detection_threshold=args.threshold,
    )
    if args.format == "csv":
        print("f_h_hz,err_h_pct,f_d_hz,err_d_pct,shift_hz,damage_detected")
        print(f"{assessment.f_healthy:.2f},{assessment.percent_error_healthy:.1f},"
              f"{assessment.f_damaged:.2f},{assessment.percent_error_damaged:.1f},"
              f"{assessment.shift:.2f},{assessment.damage_detected}")
    else:
        print(f"healthy  {assessment.f_healthy:.2f} Hz "
              f"(error {assessment.percent_error_healthy:.1f}%)")
        print(f"damaged  {assessment.f_damaged:.2f} Hz "
              f"(error {assessment.percent_error_damaged:.1f}%)")
        print(f"shift    {assessment.shift:.2f} Hz "
              f"(threshold {assessment.detection_threshold:.3f} Hz)")
        print(f"damage detected: {assessment.damage_detected}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        from dataclasses import asdict
        (out / "assessment.json").write_text(
            json.dumps(asdict(assessment), indent=2, sort_keys=True) + "\n"
        )
    return EXIT_OK


def _cmd_run(args) -> int:
    out = Path(args.out)
    if scenario.is_suite(args.config):
        suite = scenario.load_suite(args.config)
        summary = pipeline.run_suite(suite, out, seed=args.seed)
        for cid, rep in summary["cases"].items():
            err = rep["percent_error"]
            suffix = "" if err is None else f" (error {err:.1f}%)"
            print(f"{cid}: {rep['frequency_hz']:.2f} Hz{suffix}")
        for pair, assessment in summary["assessments"].items():
            print(f"{pair}: shift {assessment['shift']:.2f} Hz, "
                  f"damage_detected={assessment['damage_detected']}")
    else:
        report = pipeline.run_scenario(args.config, out, seed=args.seed)
        err = "" if report.percent_error is None else f" (error {report.percent_error:.1f}%)"
        print(f"{report.case_id}: fundamental {report.frequency_hz:.2f} Hz{err}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    reports = [pipeline.RunReport.load(p) for p in args.reports]
    rows, warnings = pipeline.compare_runs(reports, args.reference[0], args.reference[1])
    sys.stdout.write(pipeline.format_comparison(rows, args.format))
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def _cmd_plot(args) -> int:
    out = svgplot.plot(args.artifact, args.kind, args.out)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vibracam",
        description="Synthetic camera-based vibration measurement and damage detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="scenario config JSON")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")

    p = sub.add_parser("simulate", help="structural response only")
    add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("render", help="simulate and render frames")
    add_common(p)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("track", help="track markers in rendered frames")
    add_common(p)
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("analyze", help="spectral analysis of stored traces")
    add_common(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("assess", help="compare a healthy and a damaged report")
    p.add_argument("--healthy", required=True, help="healthy report.json")
    p.add_argument("--damaged", required=True, help="damaged report.json")
    p.add_argument("--reference", type=float, nargs=2, metavar=("F_H", "F_D"))
    p.add_argument("--threshold", type=float, default=None, help="shift threshold in Hz")
    p.add_argument("--format", choices=("csv", "console"), default="console")
    p.add_argument("--out", default=None, help="directory for assessment.json")
    p.set_defaults(func=_cmd_assess)

    p = sub.add_parser("run", help="full pipeline for a case or suite config")
    add_common(p)
    p.add_argument("--format", choices=("csv", "console"), default="console")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="reference-error table across reports")
    p.add_argument("--reports", nargs="+", required=True, help="report.json paths")
    p.add_argument("--reference", type=float, nargs=2, required=True,
                   metavar=("F_H", "F_D"))
    p.add_argument("--format", choices=("csv", "console"), default="console")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("plot", help="render an artifact CSV to SVG")
    p.add_argument("--artifact", required=True, help="artifact CSV path")
    p.add_argument("--kind", required=True,
                   choices=("timeseries", "spectrum", "trajectory"))
    p.add_argument("--out", required=True, help="output SVG path")
    p.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage problems count as validation errors (exit 1); --help exits 0
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    try:
        return args.func(args)
    except (ScenarioError, MalformedArtifactError, FrameLoadError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except VibracamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
