"""Single-degree-of-freedom frame model under base excitation.

The four-column frame prototype is reduced to one effective mass/stiffness
pair whose fundamental sway mode matches measured frequencies; added proof
mass stands in for damage. Serves as the analytic ground truth for the
vision pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .signalkit import TimeSeries

__all__ = [
    "SdofModel",
    "ChirpParams",
    "InitialConditions",
    "chirp_excitation",
    "natural_frequency",
    "calibrate_to_frequencies",
    "newmark_response",
    "free_vibration_analytic",
]

DEFAULT_DAMPING_RATIO = 0.01  # light damping typical of a bolted steel lab frame


@dataclass(frozen=True)
class SdofModel:
    """Effective mass/stiffness/damping of the frame's first sway mode."""

    mass: float
    stiffness: float
    damping_ratio: float = DEFAULT_DAMPING_RATIO
    added_mass: float = 0.0

    def __post_init__(self):
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not (self.stiffness > 0 and math.isfinite(self.stiffness)):
            raise ValueError(f"stiffness must be positive, got {self.stiffness}")
        if not (0.0 <= self.damping_ratio < 1.0):
            raise ValueError(f"damping_ratio must lie in [0, 1), got {self.damping_ratio}")
        if not (self.added_mass >= 0 and math.isfinite(self.added_mass)):
            raise ValueError(f"added_mass must be non-negative, got {self.added_mass}")

    @property
    def total_mass(self) -> float:
        return self.mass + self.added_mass

    def with_added_mass(self, added_mass: float) -> "SdofModel":
        return replace(self, added_mass=added_mass)


@dataclass(frozen=True)
class ChirpParams:
    """Linear frequency sweep of the base acceleration."""

    amplitude: float
    f_start: float
    f_end: float
    duration: float

    def __post_init__(self):
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if self.f_start < 0 or self.f_end < 0:
            raise ValueError("sweep frequencies must be non-negative")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")


@dataclass(frozen=True)
class InitialConditions:
    displacement: float = 0.0
    velocity: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.displacement) and math.isfinite(self.velocity)):
            raise ValueError("initial conditions must be finite")


def natural_frequency(m: SdofModel) -> float:
    """Undamped natural frequency in Hz, including any added proof mass."""
    return math.sqrt(m.stiffness / m.total_mass) / (2.0 * math.pi)


def calibrate_to_frequencies(f_healthy: float, f_damaged: float, delta_mass: float) -> SdofModel:
    """Solve mass and stiffness from a healthy/damaged frequency pair.

    With the damaged state produced by adding `delta_mass`, the effective
    modal mass is delta_mass / ((f_healthy/f_damaged)^2 - 1) and the
    stiffness follows from the healthy frequency. The returned model carries
    no added mass; set `added_mass=delta_mass` to reproduce `f_damaged`.
    """
    if not f_healthy > f_damaged > 0:
        raise ValueError(
            f"need f_healthy > f_damaged > 0 (added mass can only lower the "
            f"frequency), got {f_healthy} and {f_damaged}"
        )
    if not delta_mass > 0:
        raise ValueError(f"delta_mass must be positive, got {delta_mass}")
    mass = delta_mass / ((f_healthy / f_damaged) ** 2 - 1.0)
    stiffness = mass * (2.0 * math.pi * f_healthy) ** 2
    return SdofModel(mass=mass, stiffness=stiffness)


def chirp_excitation(p: ChirpParams, sample_rate: float, duration: float) -> TimeSeries:
    """Base acceleration a(t) = A0 * sin(2*pi*(f_start + (f_end-f_start)/(2T) * t) * t).

    The instantaneous frequency sweeps linearly from f_start at t=0 to
    f_end at t=T.
    """
    f_max = max(p.f_start, p.f_end)
    if sample_rate <= 2.0 * f_max:
        raise ValueError(
            f"sample_rate {sample_rate} Hz violates Nyquist for sweep up to {f_max} Hz"
        )
    if not duration > 0:
        raise ValueError("duration must be positive")
    n = int(round(duration * sample_rate)) + 1
    t = np.arange(n) / sample_rate
    phase = 2.0 * math.pi * (p.f_start + (p.f_end - p.f_start) / (2.0 * p.duration) * t) * t
    return TimeSeries(p.amplitude * np.sin(phase), sample_rate, unit="m/s^2")


def chirp_instantaneous_frequency(p: ChirpParams, t: float | np.ndarray):
    """Phase derivative / 2*pi: f_start + (f_end - f_start)/duration * t."""
    return p.f_start + (p.f_end - p.f_start) / p.duration * np.asarray(t, dtype=float)


def newmark_response(
    m: SdofModel,
    base_accel: TimeSeries,
    ic: InitialConditions = InitialConditions(),
) -> tuple[TimeSeries, TimeSeries, TimeSeries]:
    """Integrate M*u'' + c*u' + k*u = -M*a_base(t) in relative coordinates.

    Uses the constant-average-acceleration Newmark scheme (gamma=1/2,
    beta=1/4). Returns (displacement, velocity, acceleration) sampled at the
    input rate; the acceleration is relative to the base.
    """
    f_n = natural_frequency(m)
    if base_accel.sample_rate < 20.0 * f_n:
        raise ValueError(
            f"sample_rate {base_accel.sample_rate} Hz is below 20x the natural "
            f"frequency {f_n:.3f} Hz"
        )
    gamma, beta = 0.5, 0.25
    mass = m.total_mass
    k = m.stiffness
    c = 2.0 * m.damping_ratio * math.sqrt(k * mass)
    dt = base_accel.dt
    force = -mass * base_accel.values
    n = force.size

    u = np.empty(n)
    v = np.empty(n)
    a = np.empty(n)
    u[0] = ic.displacement
    v[0] = ic.velocity
    a[0] = (force[0] - c * v[0] - k * u[0]) / mass

    k_eff = k + gamma * c / (beta * dt) + mass / (beta * dt * dt)
    c1 = mass / (beta * dt * dt) + gamma * c / (beta * dt)
    c2 = mass / (beta * dt) + (gamma / beta - 1.0) * c
    c3 = (0.5 / beta - 1.0) * mass + dt * (0.5 * gamma / beta - 1.0) * c
    for i in range(n - 1):
        rhs = force[i + 1] + c1 * u[i] + c2 * v[i] + c3 * a[i]
        u[i + 1] = rhs / k_eff
        a[i + 1] = (
            (u[i + 1] - u[i]) / (beta * dt * dt)
            - v[i] / (beta * dt)
            - (0.5 / beta - 1.0) * a[i]
        )
        v[i + 1] = v[i] + dt * ((1.0 - gamma) * a[i] + gamma * a[i + 1])

    fs = base_accel.sample_rate
    t0 = base_accel.t0
    return (
        TimeSeries(u, fs, t0=t0, unit="m"),
        TimeSeries(v, fs, t0=t0, unit="m/s"),
        TimeSeries(a, fs, t0=t0, unit="m/s^2"),
    )


def free_vibration_analytic(
    m: SdofModel,
    ic: InitialConditions,
    sample_rate: float,
    duration: float,
) -> TimeSeries:
    """Closed-form underdamped free response.

    u(t) = exp(-zeta*w*t) * [u0*cos(wd*t) + (v0 + zeta*w*u0)/wd * sin(wd*t)]
    with w = 2*pi*f_n and wd = w*sqrt(1 - zeta^2).
    """
    zeta = m.damping_ratio
    if zeta >= 1.0:
        raise ValueError("analytic free vibration requires an underdamped model")
    if not (sample_rate > 0 and duration > 0):
        raise ValueError("sample_rate and duration must be positive")
    omega = 2.0 * math.pi * natural_frequency(m)
    omega_d = omega * math.sqrt(1.0 - zeta * zeta)
    n = int(round(duration * sample_rate)) + 1
    t = np.arange(n) / sample_rate
    envelope = np.exp(-zeta * omega * t)
    u = envelope * (
        ic.displacement * np.cos(omega_d * t)
        + (ic.velocity + zeta * omega * ic.displacement) / omega_d * np.sin(omega_d * t)
    )
    return TimeSeries(u, sample_rate, unit="m")
