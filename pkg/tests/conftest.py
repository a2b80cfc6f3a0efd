import numpy as np
import pytest

from vibracam.scenegen import MarkerSpec, ReferenceTagSpec, SceneConfig
from vibracam.signalkit import TimeSeries


def default_scene(**overrides) -> SceneConfig:
    kwargs = dict(
        frame_width=128,
        frame_height=96,
        fps=60.0,
        meters_per_pixel=0.002,
        marker=MarkerSpec((40.0, 48.0), 8.0),
        reference_tag=ReferenceTagSpec((96.0, 48.0), 24.0),
        seed=0,
    )
    kwargs.update(overrides)
    return SceneConfig(**kwargs)


def sine_series(freq_hz: float, fs: float, duration: float,
                amplitude: float = 1.0, unit: str = "") -> TimeSeries:
    n = int(round(fs * duration)) + 1
    t = np.arange(n) / fs
    return TimeSeries(amplitude * np.sin(2 * np.pi * freq_hz * t), fs, unit=unit)


def scenario_dict(case_id="HX1", condition=None, **overrides) -> dict:
    raw = {
        "case_id": case_id,
        "seed": 0,
        "duration_s": 10.0,
        "model": {
            "calibration": {"f_healthy_hz": 5.09, "f_damaged_hz": 4.51,
                            "delta_mass_kg": 0.24},
            "damping_ratio": 0.01,
            "added_mass_kg": 0.0,
        },
        "excitation": {"kind": "free", "displacement_m": 0.006},
        "camera": {"fps": 30.0, "frame_width": 128, "frame_height": 96,
                   "meters_per_pixel": 0.002, "save_frames": False},
        "analysis": {},
        "tracking": {"search_radius_px": 10},
        "references": {"healthy_hz": 5.09, "damaged_hz": 4.51},
    }
    if condition is not None:
        raw["condition"] = condition
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(raw.get(key), dict):
            raw[key].update(value)
        else:
            raw[key] = value
    return raw


@pytest.fixture
def calibrated_model():
    from vibracam.structsim import calibrate_to_frequencies

    return calibrate_to_frequencies(5.09, 4.51, 0.240)
