"""Kinematic simulation of the tag-referenced UAV alignment behavior.

The vehicle searches for the tag by yawing, aligns by proportional velocity
commands on bearing, image offset and stand-off range, then holds position
with corrections disabled so that recording is not polluted by control
micro-adjustments. Position drift accumulates freely during the hold and
re-triggers alignment only when the tag leaves a generous exit band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import MalformedArtifactError
from .scenegen import DisturbanceModel, disturbance_offsets
from .signalkit import TimeSeries

__all__ = [
    "Phase",
    "UavState",
    "TagObservation",
    "Command",
    "AlignmentConfig",
    "StepResult",
    "AlignmentResult",
    "observe_tag",
    "alignment_step",
    "run_alignment",
    "settling_time_bound",
    "write_trajectory_csv",
]


class Phase(Enum):
    SEARCH = "SEARCH"
    ALIGN = "ALIGN"
    HOLD = "HOLD"


def wrap_angle(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class UavState:
    x: float
    y: float
    z: float
    yaw: float
    phase: Phase = Phase.SEARCH
    time: float = 0.0

    def __post_init__(self):
        if self.z <= 0:
            raise ValueError("z must be positive while in flight")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))


@dataclass(frozen=True)
class TagObservation:
    """Camera-frame view of the tag.

    `bearing` is the horizontal angle of the tag from the optical axis,
    positive counterclockwise (tag to the left); the pixel offset follows
    du = -focal_px * tan(bearing), so du and bearing carry opposite signs.
    Angles and offsets are zero when the tag is not visible.
    """

    visible: bool
    bearing: float
    elevation: float
    range: float
    du: float
    dv: float

    def __post_init__(self):
        if self.range <= 0:
            raise ValueError("range must be positive")


@dataclass(frozen=True)
class Command:
    """Body-frame velocity setpoints issued for one control period."""

    forward: float = 0.0
    right: float = 0.0
    up: float = 0.0
    yaw_rate: float = 0.0

    @property
    def is_zero(self) -> bool:
        return self.forward == 0.0 and self.right == 0.0 and self.up == 0.0 \
            and self.yaw_rate == 0.0


@dataclass(frozen=True)
class AlignmentConfig:
    fov: float = math.pi / 2.0
    image_width: int = 1280
    image_height: int = 720
    search_yaw_rate: float = 0.5
    gain_yaw: float = 1.5
    gain_lateral: float = 0.8
    gain_range: float = 0.8
    standoff: float = 2.0
    tolerance_px: float = 15.0
    tolerance_range_m: float = 0.1
    hold_entry_steps: int = 10
    exit_band_factor: float = 3.0
    control_period: float = 0.05
    obs_noise_sigma_px: float = 0.0
    drift: DisturbanceModel | None = None

    def __post_init__(self):
        if not 0 < self.fov < math.pi:
            raise ValueError("fov must lie in (0, pi)")
        for name in ("search_yaw_rate", "gain_yaw", "gain_lateral", "gain_range",
                     "standoff", "tolerance_px", "tolerance_range_m",
                     "control_period"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.hold_entry_steps < 1:
            raise ValueError("hold_entry_steps must be at least 1")
        if self.exit_band_factor <= 1:
            raise ValueError("exit_band_factor must exceed 1")
        if self.obs_noise_sigma_px < 0:
            raise ValueError("obs_noise_sigma_px must be non-negative")

    @property
    def focal_px(self) -> float:
        return (self.image_width / 2.0) / math.tan(self.fov / 2.0)


@dataclass(frozen=True)
class StepResult:
    state: UavState
    command: Command
    in_band_streak: int


def observe_tag(
    state: UavState,
    tag_position: tuple[float, float, float],
    cfg: AlignmentConfig,
    noise_seed: int | None = None,
) -> TagObservation:
    """Pinhole projection of the tag center from the current state.

    The tag is visible when it lies in front of the camera and its
    projection falls inside the image. Gaussian pixel noise of
    cfg.obs_noise_sigma_px is applied deterministically per seed; bearing
    and elevation are re-derived from the noisy pixels so the observation
    stays self-consistent.
    """
    dx = tag_position[0] - state.x
    dy = tag_position[1] - state.y
    dz = tag_position[2] - state.z
    ground = math.hypot(dx, dy)
    rng_3d = math.sqrt(dx * dx + dy * dy + dz * dz)
    bearing = wrap_angle(math.atan2(dy, dx) - state.yaw)
    elevation = math.atan2(dz, ground) if ground > 0 else math.copysign(math.pi / 2, dz)

    f = cfg.focal_px
    if abs(bearing) >= math.pi / 2.0:
        return TagObservation(False, 0.0, 0.0, rng_3d, 0.0, 0.0)
    du = -f * math.tan(bearing)
    dv = -f * math.tan(elevation)
    if abs(du) > cfg.image_width / 2.0 or abs(dv) > cfg.image_height / 2.0:
        return TagObservation(False, 0.0, 0.0, rng_3d, 0.0, 0.0)

    if cfg.obs_noise_sigma_px > 0 and noise_seed is not None:
        rng = np.random.default_rng(noise_seed)
        du += cfg.obs_noise_sigma_px * rng.standard_normal()
        dv += cfg.obs_noise_sigma_px * rng.standard_normal()
        du = float(np.clip(du, -cfg.image_width / 2.0, cfg.image_width / 2.0))
        dv = float(np.clip(dv, -cfg.image_height / 2.0, cfg.image_height / 2.0))
        bearing = -math.atan(du / f)
        elevation = -math.atan(dv / f)
    return TagObservation(True, bearing, elevation, rng_3d, du, dv)


def _integrate(state: UavState, cmd: Command, dt: float, phase: Phase) -> UavState:
    cos_yaw = math.cos(state.yaw)
    sin_yaw = math.sin(state.yaw)
    # forward = optical axis, right = starboard, z up.
    x = state.x + (cmd.forward * cos_yaw + cmd.right * sin_yaw) * dt
    y = state.y + (cmd.forward * sin_yaw - cmd.right * cos_yaw) * dt
    z = state.z + cmd.up * dt
    yaw = wrap_angle(state.yaw + cmd.yaw_rate * dt)
    return UavState(x, y, z, yaw, phase=phase, time=state.time + dt)


def alignment_step(
    state: UavState,
    obs: TagObservation,
    cfg: AlignmentConfig,
    in_band_streak: int = 0,
) -> StepResult:
    """Advance the SEARCH/ALIGN/HOLD machine by one control period.

    Transitions follow SEARCH->ALIGN, ALIGN->HOLD and HOLD->ALIGN only.
    Inside HOLD no correcting command is ever issued; the machine leaves
    HOLD when the pixel offset exceeds exit_band_factor times the tolerance
    (or the tag is lost entirely).
    """
    dt = cfg.control_period

    if state.phase is Phase.SEARCH:
        if obs.visible:
            return StepResult(_integrate(state, Command(), dt, Phase.ALIGN), Command(), 0)
        cmd = Command(yaw_rate=cfg.search_yaw_rate)
        return StepResult(_integrate(state, cmd, dt, Phase.SEARCH), cmd, 0)

    if state.phase is Phase.ALIGN:
        if not obs.visible:
            # Hold position until the tag reappears; SEARCH is never re-entered.
            return StepResult(_integrate(state, Command(), dt, Phase.ALIGN), Command(), 0)
        range_error = obs.range - cfg.standoff
        cmd = Command(
            forward=cfg.gain_range * range_error,
            right=cfg.gain_lateral * (obs.du / cfg.focal_px) * obs.range,
            up=-cfg.gain_lateral * (obs.dv / cfg.focal_px) * obs.range,
            yaw_rate=cfg.gain_yaw * obs.bearing,
        )
        in_band = (
            math.hypot(obs.du, obs.dv) <= cfg.tolerance_px
            and abs(range_error) <= cfg.tolerance_range_m
        )
        streak = in_band_streak + 1 if in_band else 0
        next_phase = Phase.HOLD if streak >= cfg.hold_entry_steps else Phase.ALIGN
        return StepResult(_integrate(state, cmd, dt, next_phase), cmd, streak)

    # HOLD: corrections are deliberately withheld while recording.
    exit_band = cfg.exit_band_factor * cfg.tolerance_px
    if obs.visible and math.hypot(obs.du, obs.dv) <= exit_band:
        return StepResult(_integrate(state, Command(), dt, Phase.HOLD), Command(), 0)
    return StepResult(_integrate(state, Command(), dt, Phase.ALIGN), Command(), 0)


def settling_time_bound(cfg: AlignmentConfig) -> float:
    """Documented worst-case time from first detection to HOLD entry.

    Covers three closed-loop time constants for each of the yaw, lateral
    and range loops, the mandatory in-band dwell, one second of margin,
    plus the extra search rotation beyond a half turn that a one-directional
    yaw sweep may need before the tag first enters the field of view
    (2*pi - fov total in the worst case).
    """
    align = (
        3.0 / cfg.gain_yaw
        + 3.0 / cfg.gain_lateral
        + 3.0 / cfg.gain_range
        + cfg.hold_entry_steps * cfg.control_period
        + 1.0
    )
    wrap_excess = max(0.0, (2.0 * math.pi - cfg.fov) - math.pi) / cfg.search_yaw_rate
    return align + wrap_excess


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    """Trajectory plus the image-plane camera offsets of the hold segment."""

    states: tuple[UavState, ...]
    commands: tuple[Command, ...]
    pixel_offsets: np.ndarray  # noise-free (du, dv) per state, nan when invisible
    time_to_hold: float | None
    timed_out: bool
    hold_offset_u: TimeSeries | None
    hold_offset_v: TimeSeries | None


def run_alignment(
    initial: UavState,
    tag_position: tuple[float, float, float],
    cfg: AlignmentConfig,
    max_time: float,
    seed: int = 0,
) -> AlignmentResult:
    """Iterate observe/step at the control period until max_time.

    Returns the full state trajectory, the time of first HOLD entry and the
    camera offset series over the first contiguous HOLD stretch (pixel
    offsets relative to the entry step, for scene rendering). When HOLD is
    never reached the result carries timed_out=True and the trajectory for
    inspection.
    """
    if max_time <= 0:
        raise ValueError("max_time must be positive")
    n_steps = int(round(max_time / cfg.control_period))
    rng = np.random.default_rng(seed)

    drift_m = None
    if cfg.drift is not None:
        offsets_px = disturbance_offsets(cfg.drift, n_steps + 1, 1.0 / cfg.control_period)
        # px-equivalent platform wander mapped to meters at the standoff range
        drift_m = np.diff(offsets_px, axis=0) * (cfg.standoff / cfg.focal_px)

    states = [initial]
    commands: list[Command] = []
    clean_offsets = np.full((n_steps + 1, 2), np.nan)
    state = initial
    streak = 0
    time_to_hold = None

    def record_clean(index: int, st: UavState) -> None:
        clean = observe_tag(st, tag_position, cfg, noise_seed=None)
        if clean.visible:
            clean_offsets[index] = (clean.du, clean.dv)

    record_clean(0, state)
    for k in range(n_steps):
        noise_seed = int(rng.integers(0, 2**63 - 1))
        obs = observe_tag(state, tag_position, cfg, noise_seed=noise_seed)
        result = alignment_step(state, obs, cfg, streak)
        state, streak = result.state, result.in_band_streak
        if drift_m is not None:
            cos_yaw = math.cos(state.yaw)
            sin_yaw = math.sin(state.yaw)
            du_m, dv_m = (float(v) for v in drift_m[k])
            state = replace(
                state,
                x=state.x + du_m * sin_yaw,
                y=state.y - du_m * cos_yaw,
                z=state.z + dv_m,
            )
        commands.append(result.command)
        states.append(state)
        record_clean(k + 1, state)
        if time_to_hold is None and state.phase is Phase.HOLD:
            time_to_hold = state.time

    hold_u = hold_v = None
    if time_to_hold is not None:
        phases = [s.phase for s in states]
        start = phases.index(Phase.HOLD)
        stop = start
        while stop < len(states) and phases[stop] is Phase.HOLD:
            stop += 1
        segment = clean_offsets[start:stop]
        if segment.shape[0] >= 2 and np.all(np.isfinite(segment)):
            rel = segment - segment[0]
            fs = 1.0 / cfg.control_period
            t0 = states[start].time
            hold_u = TimeSeries(rel[:, 0], fs, t0=t0, unit="px")
            hold_v = TimeSeries(rel[:, 1], fs, t0=t0, unit="px")

    return AlignmentResult(
        states=tuple(states),
        commands=tuple(commands),
        pixel_offsets=clean_offsets,
        time_to_hold=time_to_hold,
        timed_out=time_to_hold is None,
        hold_offset_u=hold_u,
        hold_offset_v=hold_v,
    )


# ---------------------------------------------------------------------------
# Trajectory CSV: `t,x,y,z,yaw,phase,du_px,dv_px`.
# ---------------------------------------------------------------------------

_TRAJ_HEADER = "t,x,y,z,yaw,phase,du_px,dv_px"


def write_trajectory_csv(result: AlignmentResult, path: str | Path) -> None:
    lines = [_TRAJ_HEADER]
    for i, s in enumerate(result.states):
        du, dv = (float(x) for x in result.pixel_offsets[i])
        row = [float(s.time), float(s.x), float(s.y), float(s.z), float(s.yaw)]
        lines.append(
            ",".join(repr(v) for v in row) + f",{s.phase.value},{du!r},{dv!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_trajectory_csv(path: str | Path) -> list[dict]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or lines[0].strip() != _TRAJ_HEADER:
        raise MalformedArtifactError(f"{path}: expected header {_TRAJ_HEADER!r}")
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 8:
            raise MalformedArtifactError(f"{path}: expected eight columns")
        try:
            rows.append({
                "t": float(parts[0]), "x": float(parts[1]), "y": float(parts[2]),
                "z": float(parts[3]), "yaw": float(parts[4]), "phase": parts[5],
                "du_px": float(parts[6]), "dv_px": float(parts[7]),
            })
        except ValueError as exc:
            raise MalformedArtifactError(f"{path}: {exc}") from exc
    return rows
