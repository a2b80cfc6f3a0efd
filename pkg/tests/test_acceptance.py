"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. The suite builds every
scenario it needs from scratch and is fully deterministic (all seeds fixed).
"""

import math
import time

import numpy as np
import pytest

from conftest import scenario_dict
from vibracam import pipeline, scenario, signalkit
from vibracam.pipeline import RunReport, compare_runs
from vibracam.scenegen import MarkerSpec, ReferenceTagSpec, SceneConfig, render_frames
from vibracam.signalkit import TimeSeries, WelchConfig, find_fundamental, welch_psd
from vibracam.structsim import (
    ChirpParams,
    InitialConditions,
    chirp_excitation,
    chirp_instantaneous_frequency,
    free_vibration_analytic,
    natural_frequency,
    newmark_response,
)
from vibracam.tracker import Template, track_marker
from vibracam.uavsim import (
    AlignmentConfig,
    Command,
    Phase,
    TagObservation,
    UavState,
    alignment_step,
    run_alignment,
    settling_time_bound,
)

# Table of published case frequencies and one-decimal reference errors.
TABLE_CASES = [
    ("HSC1", 5.10, "0.2", "DSC1", 4.51, "0.0"),
    ("HSC2", 5.12, "0.6", "DSC2", 4.52, "0.2"),
    ("HIC1", 5.10, "0.2", "DIC1", 4.51, "0.0"),
    ("HIC2", 5.10, "0.2", "DIC2", 4.52, "0.2"),
    ("HUC1", 5.01, "1.6", "DUC1", 4.43, "1.8"),
    ("HUC2", 5.00, "1.8", "DUC2", 4.45, "1.3"),
    ("HAC1", 5.38, "5.7", "DAC1", 4.75, "5.3"),
    ("HAC2", 5.35, "5.1", "DAC2", 4.76, "5.5"),
]
REF_HEALTHY = 5.09
REF_DAMAGED = 4.51


def announce(criterion: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[{criterion}] {status}: {detail}")


def clean_scenario_dict(case_id, condition, added_mass, seed, duration=60.0):
    raw = scenario_dict(case_id, condition=condition, seed=seed,
                        duration_s=duration)
    raw["model"]["added_mass_kg"] = added_mass
    raw["camera"].update({"fps": 60.0, "meters_per_pixel": 0.002,
                          "save_frames": False})
    raw["analysis"] = {"segment_length": 1024}
    return raw


def uav_scenario_dict(case_id, condition, added_mass, seed):
    raw = scenario_dict(case_id, condition=condition, seed=seed, duration_s=30.0)
    raw["model"]["added_mass_kg"] = added_mass
    raw["camera"].update({"fps": 30.0, "meters_per_pixel": 0.012,
                          "noise_sigma": 8.0, "save_frames": False})
    raw["disturbance"] = {"drift_sigma_px": 0.1, "rotor_amplitude_px": 1.0,
                          "rotor_frequency_hz": 14.0, "jitter_sigma_px": 0.2}
    raw["analysis"] = {}
    return raw


@pytest.fixture(scope="module")
def clean_healthy(tmp_path_factory):
    out = tmp_path_factory.mktemp("clean_healthy")
    cfg = scenario.parse_scenario(clean_scenario_dict("HB1", "healthy", 0.0, 7))
    started = time.monotonic()
    report = pipeline.run_scenario(cfg, out / "HB1")
    runtime = time.monotonic() - started
    return report, runtime


def test_criterion_1_table_arithmetic():
    started = time.monotonic()
    reports = []
    for h_id, f_h, _, d_id, f_d, _ in TABLE_CASES:
        for cid, f, cond in ((h_id, f_h, "healthy"), (d_id, f_d, "damaged")):
            reports.append(RunReport(
                case_id=cid, condition=cond, frequency_hz=f, peak_power=1.0,
                resolution_hz=0.01, band_hz=(0.5, 13.5), percent_error=None,
                reference_hz=None, fps=30.0, n_frames=901, config_hash="",
                artifacts={}))
    rows, warnings = compare_runs(reports, REF_HEALTHY, REF_DAMAGED)
    elapsed = time.monotonic() - started

    by_healthy = {r.healthy_id: r for r in rows}
    cells_checked = 0
    for h_id, _, err_h, d_id, _, err_d in TABLE_CASES:
        row = by_healthy[h_id]
        assert row.damaged_id == d_id
        assert f"{row.error_healthy:.1f}" == err_h, (h_id, row.error_healthy)
        assert f"{row.error_damaged:.1f}" == err_d, (d_id, row.error_damaged)
        cells_checked += 2
    assert not warnings
    assert elapsed < 1.0
    announce("criterion 1", True,
             f"all {cells_checked} error cells exact at one decimal "
             f"({elapsed * 1000:.0f} ms)")


def test_criterion_2_end_to_end_healthy(clean_healthy):
    report, runtime = clean_healthy
    error = abs(report.frequency_hz - REF_HEALTHY)
    ok = error <= 0.06 and runtime < 60.0
    announce("criterion 2", ok,
             f"identified {report.frequency_hz:.4f} Hz "
             f"(|error| {error:.4f} Hz <= 0.06, runtime {runtime:.1f} s < 60)")
    assert report.resolution_hz == pytest.approx(60.0 / 1024)
    assert error <= 0.06
    assert runtime < 60.0


def test_criterion_3_damage_detection(clean_healthy, tmp_path):
    healthy_report, _ = clean_healthy
    cfg_d = scenario.parse_scenario(clean_scenario_dict("DB1", "damaged", 0.24, 7))
    damaged_report = pipeline.run_scenario(cfg_d, tmp_path / "DB1")
    assessment = signalkit.assess_damage(
        healthy_report.modal_estimate(), damaged_report.modal_estimate(),
        REF_HEALTHY, REF_DAMAGED)
    shift_ok = abs(assessment.shift - 0.58) <= 0.12 and assessment.damage_detected

    identified = []
    for i, dm in enumerate((0.1, 0.24, 0.5)):
        raw = clean_scenario_dict(f"DM{i}", "damaged", dm, 7, duration=20.0)
        raw["camera"]["fps"] = 30.0
        raw["analysis"] = {}
        rep = pipeline.run_scenario(scenario.parse_scenario(raw), tmp_path / f"DM{i}")
        identified.append(rep.frequency_hz)
    monotone = identified[0] > identified[1] > identified[2]

    announce("criterion 3", shift_ok and monotone,
             f"shift {assessment.shift:.3f} Hz (0.58 +/- 0.12), detected="
             f"{assessment.damage_detected}; added-mass sweep "
             f"{[f'{f:.3f}' for f in identified]} strictly decreasing={monotone}")
    assert shift_ok
    assert monotone


def test_criterion_4_uav_disturbance_robustness(clean_healthy, tmp_path):
    clean_report, _ = clean_healthy
    clean_error = abs(clean_report.frequency_hz - REF_HEALTHY)

    detections = 0
    errors = []
    for seed in range(20):
        raw_h = uav_scenario_dict("HAV", "healthy", 0.0, seed)
        raw_d = uav_scenario_dict("DAV", "damaged", 0.24, seed)
        rep_h = pipeline.run_scenario(scenario.parse_scenario(raw_h),
                                      tmp_path / f"h{seed}")
        rep_d = pipeline.run_scenario(scenario.parse_scenario(raw_d),
                                      tmp_path / f"d{seed}")
        assessment = signalkit.assess_damage(
            rep_h.modal_estimate(), rep_d.modal_estimate(),
            REF_HEALTHY, REF_DAMAGED)
        detections += int(assessment.damage_detected)
        errors.append(abs(rep_h.frequency_hz - REF_HEALTHY))
        errors.append(abs(rep_d.frequency_hz - REF_DAMAGED))

    median_error = float(np.median(errors))
    ok = detections >= 19 and median_error > clean_error
    announce("criterion 4", ok,
             f"shift detected in {detections}/20 seeds (need >= 19); median "
             f"|error| {median_error:.5f} Hz > clean-scene {clean_error:.5f} Hz")
    assert detections >= 19
    assert median_error > clean_error


def test_criterion_5_subpixel_tracking():
    scene = SceneConfig(128, 96, 60.0, 0.002, MarkerSpec((40.0, 48.0), 8.0),
                        ReferenceTagSpec((96.0, 48.0), 24.0), seed=3)
    t = np.arange(240) / 60.0
    motion = TimeSeries(0.006 * np.sin(2 * np.pi * 5.0 * t), 60.0, unit="m")
    seq, truth = render_frames(scene, motion)
    trace = track_marker(seq, Template.from_frame(seq, (28, 36, 24, 24)))
    rms = float(np.sqrt(np.mean(
        (trace.u - truth.true_u) ** 2 + (trace.v - truth.true_v) ** 2)))
    announce("criterion 5", rms < 0.05,
             f"3 px sinusoid tracked with RMS error {rms:.4f} px < 0.05")
    assert rms < 0.05


def test_criterion_6_spectral_estimator():
    t = np.arange(3601) / 60.0
    x = TimeSeries(np.sin(2 * np.pi * 5.0 * t), 60.0)
    s = welch_psd(x, WelchConfig(1024))
    power = float(np.sum(s.psd) * s.resolution)
    parseval_ok = abs(power - 0.5) / 0.5 <= 0.02
    peak_bin = float(s.frequencies[np.argmax(s.psd)])
    peak_ok = abs(peak_bin - 5.0) <= s.resolution

    rng = np.random.default_rng(123)
    nonneg_checked = scale_checked = 0
    for _ in range(500):
        n = int(rng.integers(64, 1200))
        fs = float(rng.uniform(20.0, 200.0))
        sig = TimeSeries(rng.normal(0, rng.uniform(0.1, 30.0), n), fs)
        spectrum = welch_psd(sig, signalkit.default_welch_config(n))
        assert np.all(spectrum.psd >= 0.0)
        nonneg_checked += 1
    base = TimeSeries(np.sin(2 * np.pi * 5.0 * np.arange(1800) / 60.0)
                      + 0.2 * rng.normal(size=1800), 60.0)
    s_base = welch_psd(base, WelchConfig(512))
    f_base = find_fundamental(s_base, (1.0, 15.0)).frequency
    for _ in range(500):
        c = float(rng.uniform(1e-3, 1e3))
        s_scaled = welch_psd(TimeSeries(c * base.values, 60.0), WelchConfig(512))
        f_scaled = find_fundamental(s_scaled, (1.0, 15.0)).frequency
        assert f_scaled == pytest.approx(f_base, abs=1e-9)
        scale_checked += 1

    ok = parseval_ok and peak_ok
    announce("criterion 6", ok,
             f"Parseval {power:.4f} vs 0.5 (within 2%); peak bin {peak_bin:.3f} Hz; "
             f"non-negativity x{nonneg_checked}, scale-invariance x{scale_checked}")
    assert parseval_ok
    assert peak_ok


def test_criterion_7_integrator_correctness(calibrated_model):
    m = calibrated_model
    f_n = natural_frequency(m)
    fs = 100.0 * f_n  # dt = T_n / 100
    n = int(round(20.0 / f_n * fs))
    base = TimeSeries(np.zeros(n + 1), fs, unit="m/s^2")
    u, _, _ = newmark_response(m, base, InitialConditions(1.0, 0.0))
    ua = free_vibration_analytic(m, InitialConditions(1.0, 0.0), fs, 20.0 / f_n)
    rel = float(np.sqrt(np.mean((u.values - ua.values) ** 2))
                / np.sqrt(np.mean(ua.values ** 2)))
    newmark_ok = rel < 0.005

    zeta = m.damping_ratio
    f_d = f_n * math.sqrt(1.0 - zeta**2)
    x = free_vibration_analytic(m, InitialConditions(1.0, 0.0), 128.0 * f_d, 20.0 / f_d)
    from scipy.signal import argrelmax
    peaks = x.values[argrelmax(x.values)[0]]
    ratios = peaks[1:] / peaks[:-1]
    expected = math.exp(-2.0 * math.pi * zeta / math.sqrt(1.0 - zeta**2))
    logdec_err = float(np.max(np.abs(ratios - expected)))
    logdec_ok = logdec_err < 1e-6

    announce("criterion 7", newmark_ok and logdec_ok,
             f"Newmark vs analytic at dt=T_n/100 over 20 cycles: rel RMS {rel:.4f} "
             f"(tolerance 0.005; constant-average-acceleration period elongation "
             f"(w*dt)^2/12 makes ~0.016 the attainable figure); "
             f"log-decrement max deviation {logdec_err:.2e} < 1e-6")
    assert logdec_ok
    # Faithful to the stated tolerance: the constant-average-acceleration
    # scheme accumulates ~0.04 rad of phase over 20 cycles at this step size,
    # so this assertion fails by construction of the tolerance. See the
    # convergence study in tests/test_structsim.py for the passing
    # second-order behavior (0.5% is met from dt = T_n/250).
    assert newmark_ok, (
        f"relative RMS {rel:.4%} exceeds the stated 0.5% at dt = T_n/100; "
        f"attainable only below ~T_n/220 for this scheme"
    )


def test_criterion_8_alignment_state_machine():
    cfg = AlignmentConfig()
    tag = (3.0, 0.0, 1.5)
    bound = math.pi / cfg.search_yaw_rate + settling_time_bound(cfg)
    rng = np.random.default_rng(0)
    held = 0
    worst = 0.0
    for _ in range(100):
        yaw = float(rng.uniform(-math.pi, math.pi))
        result = run_alignment(UavState(0.0, 0.0, 1.5, yaw), tag, cfg, 40.0)
        assert not result.timed_out
        assert result.time_to_hold <= bound
        held += 1
        worst = max(worst, result.time_to_hold)
        # HOLD passivity on every step of every run
        for state, command in zip(result.states, result.commands):
            if state.phase is Phase.HOLD:
                assert command == Command()

    legal = {
        (Phase.SEARCH, Phase.SEARCH), (Phase.SEARCH, Phase.ALIGN),
        (Phase.ALIGN, Phase.ALIGN), (Phase.ALIGN, Phase.HOLD),
        (Phase.HOLD, Phase.HOLD), (Phase.HOLD, Phase.ALIGN),
    }
    state = UavState(0.0, 0.0, 1.5, 0.0)
    streak = 0
    transitions = 0
    for _ in range(1000):
        if rng.uniform() < 0.3:
            obs = TagObservation(False, 0.0, 0.0, 1.0, 0.0, 0.0)
        else:
            obs = TagObservation(
                True, float(rng.uniform(-0.6, 0.6)), float(rng.uniform(-0.4, 0.4)),
                float(rng.uniform(0.3, 6.0)),
                float(rng.uniform(-300, 300)), float(rng.uniform(-200, 200)))
        out = alignment_step(state, obs, cfg, streak)
        assert (state.phase, out.state.phase) in legal
        state, streak = out.state, out.in_band_streak
        transitions += 1

    announce("criterion 8", True,
             f"HOLD reached in {held}/100 random-yaw runs within "
             f"{bound:.1f} s (worst {worst:.1f} s); passivity held on every "
             f"HOLD step; {transitions} randomized transitions all legal")


def test_criterion_9_chirp_verification(calibrated_model):
    p = ChirpParams(1.0, 1.0, 10.0, 30.0)
    x = chirp_excitation(p, 2000.0, 30.0)
    v, t = x.values, x.times
    idx = np.nonzero(np.diff(np.sign(v)) != 0)[0]
    crossings = t[idx] - v[idx] * (t[idx + 1] - t[idx]) / (v[idx + 1] - v[idx])
    tail = crossings[crossings > 29.5]
    f_end = 1.0 / (2.0 * float(np.mean(np.diff(tail))))
    freq_ok = abs(f_end - 10.0) / 10.0 < 0.02

    sweep = ChirpParams(1.0, 1.0, 10.0, 120.0)
    base = chirp_excitation(sweep, 500.0, 120.0)
    u, _, _ = newmark_response(calibrated_model, base)
    k = int(np.argmax(np.abs(u.values)))
    f_at_peak = float(chirp_instantaneous_frequency(sweep, u.times[k]))
    resonance_ok = abs(f_at_peak - 5.09) / 5.09 < 0.05

    announce("criterion 9", freq_ok and resonance_ok,
             f"zero-crossing frequency at sweep end {f_end:.3f} Hz (within 2% of 10); "
             f"envelope max at instantaneous {f_at_peak:.3f} Hz (within 5% of 5.09)")
    assert freq_ok
    assert resonance_ok
