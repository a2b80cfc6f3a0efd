"""Tag-referenced UAV behavior and measurement under platform disturbance.

Part 1 runs the search/align/hold state machine from a deliberately bad
initial heading and plots the phase-colored flight path. Part 2 renders a
scene whose camera follows a disturbed hold (drift, rotor vibration,
jitter), then shows why the stationary reference tag matters: the platform
motion is common to both targets, so subtracting the tag trace removes it.

Run from the repository root:  python demos/04_uav_alignment.py
"""

import math
from pathlib import Path

import numpy as np

from vibracam import TimeSeries, detrend, find_fundamental, welch_psd
from vibracam.scenegen import (
    DisturbanceModel,
    MarkerSpec,
    ReferenceTagSpec,
    SceneConfig,
    render_frames,
)
from vibracam.signalkit import WelchConfig
from vibracam.svgplot import plot
from vibracam.tracker import Template, compensate_reference, track_marker
from vibracam.uavsim import (
    AlignmentConfig,
    Phase,
    UavState,
    run_alignment,
    settling_time_bound,
    write_trajectory_csv,
)

OUT = Path(__file__).parent / "out" / "04_uav_alignment"
OUT.mkdir(parents=True, exist_ok=True)

# --- Part 1: search, align, hold -----------------------------------------
cfg = AlignmentConfig(obs_noise_sigma_px=0.5,
                      drift=DisturbanceModel(drift_sigma_px=0.05, seed=2))
tag_position = (3.0, 0.0, 1.5)
start = UavState(x=0.0, y=0.0, z=1.5, yaw=math.pi)  # facing away from the tag

result = run_alignment(start, tag_position, cfg, max_time=60.0, seed=2)
bound = math.pi / cfg.search_yaw_rate + settling_time_bound(cfg)
print(f"time to hold     : {result.time_to_hold:.2f} s (documented bound {bound:.1f} s)")
phases = [s.phase for s in result.states]
print(f"phase breakdown  : search {phases.count(Phase.SEARCH)}, "
      f"align {phases.count(Phase.ALIGN)}, hold {phases.count(Phase.HOLD)} steps")
hold_cmds = [c for s, c in zip(result.states, result.commands) if s.phase is Phase.HOLD]
print(f"hold passivity   : {len(hold_cmds)} hold-phase steps, "
      f"all commands zero = {all(c.is_zero for c in hold_cmds)}")

write_trajectory_csv(result, OUT / "trajectory.csv")
plot(OUT / "trajectory.csv", "trajectory", OUT / "trajectory.svg")
print(f"flight path      : {OUT / 'trajectory.svg'}")

# --- Part 2: measuring through the disturbance ----------------------------
scene = SceneConfig(
    frame_width=128, frame_height=96, fps=30.0, meters_per_pixel=0.002,
    marker=MarkerSpec(center=(40.0, 48.0), radius=8.0),
    reference_tag=ReferenceTagSpec(center=(96.0, 48.0), size=24.0),
    seed=5,
)
disturbance = DisturbanceModel(drift_sigma_px=0.1, rotor_amplitude_px=1.0,
                               rotor_frequency_hz=14.0, jitter_sigma_px=0.2, seed=5)

t = np.arange(901) / scene.fps
motion = TimeSeries(0.006 * np.sin(2 * np.pi * 5.0 * t)
                    * np.exp(-0.32 * t), scene.fps, unit="m")
frames, truth = render_frames(scene, motion, disturbance)

marker = track_marker(frames, Template.from_frame(frames, (28, 36, 24, 24)),
                      search_radius=10)
tag0 = (96.0 + truth.camera_offsets[0, 0], 48.0 + truth.camera_offsets[0, 1])
tag_rect = (int(round(tag0[0])) - 16, int(round(tag0[1])) - 16, 32, 32)
reference = track_marker(frames, Template.from_frame(frames, tag_rect),
                         search_radius=10)
compensated = compensate_reference(marker, reference)

for label, u in (("uncompensated", marker.u), ("compensated", compensated.u)):
    series = detrend(TimeSeries(u, scene.fps, unit="px"), "linear")
    spectrum = welch_psd(series, WelchConfig(256, detrend="none"))
    estimate = find_fundamental(spectrum, (0.5, 13.5))
    low = spectrum.frequencies < 0.5
    low_power = float(np.sum(spectrum.psd[low]) * spectrum.resolution)
    print(f"{label:14s}: peak {estimate.frequency:.3f} Hz, "
          f"sub-0.5 Hz drift power {low_power:.3e} px^2")
