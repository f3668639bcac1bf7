"""On-board subsystems: obstacle-detection gate, drive-mode automaton, actuation limits.

The automaton is a pure function of (state, inputs); the simulation loop owns
sequencing. Stop modes latch: speed is non-increasing until the release
condition for that mode holds (see vcu_step).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .geometry import Pose, point_rect_distance, polyline_point_at
from .world import VEHICLE_LENGTH_M, VEHICLE_WIDTH_M, stopping_distance


class DriveMode(str, Enum):
    IDLE = "Idle"
    FOLLOWING = "Following"
    AEB_STOP = "AebStop"
    COMM_LOSS_STOP = "CommLossStop"
    FAULT_STOP = "FaultStop"
    ESTOP_STOP = "EstopStop"
    AT_STATION = "AtStation"


STOP_MODES = frozenset(
    {DriveMode.AEB_STOP, DriveMode.COMM_LOSS_STOP, DriveMode.FAULT_STOP, DriveMode.ESTOP_STOP}
)


@dataclass(frozen=True)
class HealthStatus:
    brake_primary_ok: bool = True
    brake_secondary_ok: bool = True
    power_ok: bool = True
    aodca_ok: bool = True

    def significant_failure(self, secondary_available: bool = True) -> bool:
        secondary = self.brake_secondary_ok and secondary_available
        return (not self.power_ok) or (not self.brake_primary_ok and not secondary)

    def brake_authority(self, secondary_available: bool = True) -> bool:
        return self.brake_primary_ok or (self.brake_secondary_ok and secondary_available)


@dataclass(frozen=True)
class Limits:
    service_decel: float = 4.0
    aeb_decel: float = 6.0
    max_accel: float = 2.5


@dataclass(frozen=True)
class AodcaConfig:
    range: float = 10.0
    fov: float = 2.0 * math.pi
    aeb_decel: float = 6.0
    margin: float = 1.0

    def __post_init__(self):
        if self.range <= 0:
            raise ValueError("sensing range must be positive")


@dataclass(frozen=True)
class TrajectoryPoint:
    x: float
    y: float
    heading: float
    target_speed: float
    tick_offset: int


@dataclass(frozen=True)
class Trajectory:
    issued_tick: int
    points: tuple[TrajectoryPoint, ...]
    horizon_ticks: int

    def __post_init__(self):
        if not self.points:
            raise ValueError("trajectory needs at least one point")
        offsets = [p.tick_offset for p in self.points]
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValueError("tick offsets must be strictly increasing")
        if any(p.target_speed < 0 for p in self.points):
            raise ValueError("target speeds must be non-negative")

    def polyline(self) -> list[tuple[float, float]]:
        return [(p.x, p.y) for p in self.points]


@dataclass
class VehicleState:
    id: str
    pose: Pose
    speed: float = 0.0
    accel: float = 0.0
    mode: DriveMode = DriveMode.IDLE
    health: HealthStatus = HealthStatus()
    last_traj_tick: Optional[int] = None
    active_traj: Optional[Trajectory] = None
    arc_s: float = 0.0
    lights: str = "Off"
    doors: str = "Closed"
    warnings: list[str] = field(default_factory=list)
    estop_latched: bool = False
    docked: bool = False


def aodca_scan(
    state: VehicleState,
    obstacles: list[tuple[tuple[float, float], float]],
    cfg: AodcaConfig,
    service_decel: float = 4.0,
) -> tuple[bool, Optional[float]]:
    """Detection gate: an obstacle whose center-to-footprint distance is within
    min(range, stopping envelope + obstacle radius + margin) triggers the flag.

    Returns (detected, nearest obstacle footprint distance). Callers must not
    invoke this when the sensing unit is failed; the simulation loop owns that.
    """
    detected = False
    nearest: Optional[float] = None
    envelope = stopping_distance(state.speed, service_decel)
    px, py = state.pose.x, state.pose.y
    half_fov = cfg.fov / 2.0
    full_circle = cfg.fov >= 2.0 * math.pi - 1e-9
    for (ox, oy), radius in obstacles:
        d = point_rect_distance(
            (ox, oy), px, py, state.pose.heading, VEHICLE_LENGTH_M, VEHICLE_WIDTH_M
        )
        if nearest is None or d < nearest:
            nearest = d
        if not full_circle:
            bearing = math.atan2(oy - py, ox - px) - state.pose.heading
            bearing = math.atan2(math.sin(bearing), math.cos(bearing))
            if abs(bearing) > half_fov:
                continue
        gate = min(cfg.range, envelope + radius + cfg.margin)
        if d <= gate:
            detected = True
    return detected, nearest


def speed_limiter(commanded_speed: float, cap: float) -> float:
    if cap <= 0:
        raise ValueError("cap must be positive")
    return min(commanded_speed, cap)


def clamp_accel(accel: float, limits: Limits) -> float:
    return max(-limits.service_decel, min(limits.max_accel, accel))


@dataclass(frozen=True)
class VcuInputs:
    traj_age_ticks: Optional[int]
    aodca_detected: bool
    estop_latched: bool
    station_docked: bool
    health: HealthStatus
    has_trajectory: bool
    tracking_accel: float = 0.0
    watchdog_enabled: bool = True
    aeb_enabled: bool = True
    secondary_brake_available: bool = True
    watchdog_ticks: int = 30


def vcu_step(state: VehicleState, inputs: VcuInputs, limits: Limits, now: int) -> tuple[DriveMode, float]:
    """One decision step. Priority: EstopStop > FaultStop > AebStop > CommLossStop
    > AtStation > Following > Idle. Returns the mode and commanded acceleration;
    braking commands are desired values, brake authority is applied by the caller.
    """
    health = inputs.health
    sig_fail = health.significant_failure(inputs.secondary_brake_available)

    if inputs.estop_latched:
        return DriveMode.ESTOP_STOP, -limits.aeb_decel

    if sig_fail or (state.mode == DriveMode.FAULT_STOP and state.speed > 1e-9):
        return DriveMode.FAULT_STOP, -limits.service_decel

    if inputs.aeb_enabled and (
        inputs.aodca_detected or (state.mode == DriveMode.AEB_STOP and state.speed > 1e-9)
    ):
        return DriveMode.AEB_STOP, -limits.aeb_decel

    if (
        inputs.watchdog_enabled
        and inputs.traj_age_ticks is not None
        and inputs.traj_age_ticks > inputs.watchdog_ticks
    ):
        return DriveMode.COMM_LOSS_STOP, -limits.service_decel

    if inputs.station_docked:
        return DriveMode.AT_STATION, (-limits.service_decel if state.speed > 1e-9 else 0.0)

    if inputs.has_trajectory:
        return DriveMode.FOLLOWING, clamp_accel(inputs.tracking_accel, limits)

    return DriveMode.IDLE, (-limits.service_decel if state.speed > 1e-9 else 0.0)


def follow_speed(traj: Trajectory, arc_s: float, arc_table: list[float],
                 service_decel: float) -> float:
    """Commanded speed at arc position arc_s: the braking envelope into every
    knot ahead, capped per segment by the bracketing knot speeds (so an edge's
    speed limit, baked into its knot speeds, holds between knots too)."""
    v_cmd: Optional[float] = None
    prev_speed = traj.points[0].target_speed
    next_speed: Optional[float] = None
    for point, s_m in zip(traj.points, arc_table):
        if s_m < arc_s - 1e-9:
            prev_speed = point.target_speed
            continue
        if next_speed is None:
            next_speed = point.target_speed
        gap = max(0.0, s_m - arc_s)
        envelope = math.sqrt(point.target_speed**2 + 2.0 * service_decel * gap)
        v_cmd = envelope if v_cmd is None else min(v_cmd, envelope)
    if v_cmd is None:
        return 0.0
    return min(v_cmd, max(prev_speed, next_speed if next_speed is not None else 0.0))


def arc_lengths(traj: Trajectory) -> list[float]:
    """Cumulative arc length at each trajectory point."""
    out = [0.0]
    pts = traj.points
    for a, b in zip(pts, pts[1:]):
        out.append(out[-1] + math.hypot(b.x - a.x, b.y - a.y))
    return out


def integrate(state: VehicleState, accel: float, dt: float,
              brake_authority: bool = True) -> VehicleState:
    """Advance one tick: Euler speed update, trapezoidal displacement along the
    active trajectory polyline. Without brake authority, decel commands have no
    effect and the vehicle coasts straight past the path end."""
    if accel < 0 and not brake_authority:
        accel = 0.0
    new_speed = max(0.0, state.speed + accel * dt)
    step = (state.speed + new_speed) / 2.0 * dt

    if state.active_traj is not None and len(state.active_traj.points) >= 1:
        poly = state.active_traj.polyline()
        total = sum(
            math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(poly, poly[1:])
        )
        new_arc = state.arc_s + step
        if new_arc <= total or not brake_authority and new_arc > total:
            if new_arc > total and not brake_authority:
                # runaway: continue straight beyond the path end
                over = new_arc - total
                x, y, h = polyline_point_at(poly, total)
                state.pose = Pose(x + over * math.cos(h), y + over * math.sin(h), h)
                state.arc_s = new_arc
            else:
                x, y, h = polyline_point_at(poly, new_arc)
                state.pose = Pose(x, y, h if len(poly) > 1 else state.pose.heading)
                state.arc_s = new_arc
        else:
            x, y, h = polyline_point_at(poly, total)
            state.pose = Pose(x, y, h if len(poly) > 1 else state.pose.heading)
            state.arc_s = total
            new_speed = 0.0
    elif step > 0:
        h = state.pose.heading
        state.pose = Pose(state.pose.x + step * math.cos(h), state.pose.y + step * math.sin(h), h)

    state.speed = new_speed
    state.accel = accel
    return state


def report_payload(state: VehicleState) -> dict:
    """Upstream state report: position, speed, drive mode, warnings, lights, doors."""
    return {
        "id": state.id,
        "x": round(state.pose.x, 6),
        "y": round(state.pose.y, 6),
        "heading": round(state.pose.heading, 6),
        "speed": round(state.speed, 6),
        "mode": state.mode.value,
        "warnings": list(state.warnings),
        "lights": state.lights,
        "doors": state.doors,
    }


def lights_for(mode: DriveMode) -> str:
    if mode in STOP_MODES:
        return "Hazard"
    if mode in (DriveMode.FOLLOWING, DriveMode.AT_STATION):
        return "Running"
    return "Off"
