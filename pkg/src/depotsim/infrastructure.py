"""Infrastructure sensing/compute layer.

Sensing is ideal within coverage while healthy; prediction is constant
velocity over a 3 s horizon; planning runs every tick but rebuilds trajectory
content only when a plan actually changes. Also owns vehicle onboarding, the
operational-hazard protocol, and the 10 s snapshot ring buffer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .geometry import dist, point_polyline_distance, project_onto_polyline
from .planner import (
    ARRIVAL_SPEED,
    ARRIVAL_TOL_M,
    HEADWAY_CLEAR_M,
    NoRouteError,
    Planner,
    PlannerOverload,
    PlanState,
)
from .vehicle import Limits
from .world import (
    DepotMap,
    PREDICTION_HORIZON_TICKS,
    BUFFER_TICKS,
    REQUIRED_CAPABILITIES,
    ScenarioConfig,
)

DEVIATION_ALERT_M = 1.0
DEVIATION_CLEAR_M = 0.8

HAZARD_EVENTS = ("Fire", "Smoke", "Flood", "Earthquake", "Accident")


@dataclass(frozen=True)
class TrackedObject:
    id: str
    cls: str                      # Vehicle | Pedestrian | Unknown
    position: tuple[float, float]
    velocity: tuple[float, float]
    last_seen_tick: int


def ix_sense(actors: list[tuple[str, str, tuple[float, float], tuple[float, float]]],
             depot: DepotMap, healthy: bool, now: int) -> list[TrackedObject]:
    """Ideal sensing: every actor inside coverage, exact state. Unhealthy -> blind."""
    if not healthy:
        return []
    out = []
    for aid, cls, pos, vel in actors:
        if depot.in_coverage(pos):
            out.append(TrackedObject(aid, cls, pos, vel, now))
    out.sort(key=lambda t: t.id)
    return out


def predict(tracked: list[TrackedObject], horizon: int = PREDICTION_HORIZON_TICKS,
            tick_s: float = 0.1, velocity_scale: float = 1.0) -> dict[str, list[tuple[float, float]]]:
    """Constant-velocity extrapolation, offsets 0..horizon (0 = current position).
    velocity_scale != 1 models a corrupted prediction feed."""
    preds: dict[str, list[tuple[float, float]]] = {}
    for obj in tracked:
        vx = obj.velocity[0] * velocity_scale
        vy = obj.velocity[1] * velocity_scale
        px, py = obj.position
        preds[obj.id] = [(px + vx * k * tick_s, py + vy * k * tick_s) for k in range(horizon + 1)]
    return preds


@dataclass(frozen=True)
class OnboardingRecord:
    vehicle_id: str
    capabilities: frozenset[str]
    accepted: bool
    reason: str
    tick: int

    def to_dict(self) -> dict:
        return {
            "vehicle_id": self.vehicle_id,
            "capabilities": sorted(self.capabilities),
            "accepted": self.accepted,
            "reason": self.reason,
            "tick": self.tick,
        }


def onboard(vehicle_id: str, declared: frozenset[str], now: int,
            already_onboarded: bool = False) -> OnboardingRecord:
    if already_onboarded:
        raise ValueError(f"vehicle {vehicle_id} is already onboarded")
    missing = sorted(REQUIRED_CAPABILITIES - declared)
    if missing:
        return OnboardingRecord(
            vehicle_id, declared, False, "missing capabilities: " + ", ".join(missing), now
        )
    return OnboardingRecord(vehicle_id, declared, True, "ok", now)


class RollingBuffer:
    """Ring of the newest BUFFER_TICKS consecutive snapshots."""

    def __init__(self, capacity: int = BUFFER_TICKS):
        self.capacity = capacity
        self.snaps: list[dict] = []

    def push(self, snap: dict) -> None:
        if self.snaps and snap["tick"] != self.snaps[-1]["tick"] + 1:
            raise ValueError("snapshots must be pushed with consecutive ticks")
        self.snaps.append(snap)
        if len(self.snaps) > self.capacity:
            del self.snaps[0]

    def restore(self) -> dict:
        if not self.snaps:
            raise ValueError("cannot restore from an empty buffer")
        return self.snaps[-1]

    def __len__(self) -> int:
        return len(self.snaps)


def operational_hazard_protocol(event: str) -> dict:
    """Depot-wide response to an operational hazard: stop everything, hold planning."""
    if event not in HAZARD_EVENTS:
        raise ValueError(f"unknown operational hazard {event!r}")
    return {"broadcast_estop": True, "suspend_planning": True}


class Infrastructure:
    def __init__(self, scenario: ScenarioConfig, limits: Limits):
        self.scenario = scenario
        self.depot = scenario.map
        self.limits = limits
        self.planner = Planner(
            scenario.map, scenario.mode.speed_cap, limits, tick_s=scenario.tick_s
        )
        self.onboarded: dict[str, dict] = {}
        self.rejected: dict[str, dict] = {}
        self.latest_report: dict[str, dict] = {}
        self.emergency_event: Optional[str] = None
        self.deviation_latched: dict[str, bool] = {}
        self.spawn_node: dict[str, Optional[str]] = {}
        self._traj_cache: dict[str, dict] = {}   # vid -> payload dict (rebuilt on version change)

    # -- onboarding -----------------------------------------------------------

    def handle_onboard_request(self, vehicle_id: str, declared: frozenset[str], now: int) -> dict:
        record = onboard(vehicle_id, declared, now, already_onboarded=vehicle_id in self.onboarded)
        rd = record.to_dict()
        if record.accepted:
            self.onboarded[vehicle_id] = rd
            spec = next(v for v in self.scenario.vehicles if v.id == vehicle_id)
            node = None
            if spec.spawn_zone is not None:
                zone = self.depot.zone_by_id(spec.spawn_zone)
                slots = self.depot.zone_slots(zone)
                idx = [v.id for v in self.scenario.vehicles if v.spawn_zone == spec.spawn_zone].index(vehicle_id)
                if slots:
                    node = slots[idx % len(slots)]
                    self.planner.slot_owner[node] = vehicle_id
            self.spawn_node[vehicle_id] = node
        else:
            self.rejected[vehicle_id] = rd
        return rd

    # -- emergency protocol ----------------------------------------------------

    def raise_hazard(self, event: str) -> dict:
        action = operational_hazard_protocol(event)
        self.emergency_event = event
        return action

    def clear_hazard(self) -> None:
        self.emergency_event = None

    # -- per-tick planning -------------------------------------------------------

    def step(self, now: int, tracked: list[TrackedObject],
             predictions: dict[str, list[tuple[float, float]]],
             planner_avoidance: bool, traj_offset: float) -> tuple[list[tuple[str, str, dict]], list[dict], list[str]]:
        """Run mission/hold/reservation logic; returns (outgoing messages as
        (recipient, kind, payload) triples, deviation alerts, planner errors)."""
        outgoing: list[tuple[str, str, dict]] = []
        alerts: list[dict] = []
        errors: list[str] = []

        sensed_vehicle = {t.id: t for t in tracked if t.cls == "Vehicle"}
        ped_preds = {
            t.id: predictions.get(t.id, [])
            for t in tracked
            if t.cls in ("Pedestrian", "Unknown")
        }
        ped_radius = {t.id: 0.3 for t in tracked if t.cls in ("Pedestrian", "Unknown")}

        if self.emergency_event is not None:
            return outgoing, alerts, errors

        planner = self.planner
        order = sorted(self.onboarded)
        for vid in order:
            ps = planner.plans.get(vid)
            spec = next(v for v in self.scenario.vehicles if v.id == vid)
            if ps is None:
                ps = PlanState(vehicle_id=vid, mission=spec.mission)
                if len(spec.mission) < 2:
                    ps.phase = "done"
                    ps.completed_tick = now
                planner.plans[vid] = ps

            obj = sensed_vehicle.get(vid)
            if obj is not None and ps.leg_coords:
                arc = project_onto_polyline(obj.position, ps.leg_coords)
                ps.progress_arc = max(ps.progress_arc, arc)
                ps.progress_speed = dist(obj.velocity, (0.0, 0.0))

            report = self.latest_report.get(vid, {})
            stopped_mode = report.get("mode") in ("EstopStop", "FaultStop")

            if ps.phase == "idle" and not stopped_mode:
                start = self.spawn_node.get(vid)
                if start is not None and ps.mission_idx < len(ps.mission):
                    try:
                        planner.begin_leg(ps, start)
                        if ps.phase == "to_zone":
                            planner.release_slots(vid, keep=ps.target_slot)
                    except (NoRouteError, PlannerOverload) as exc:
                        errors.append(str(exc))
                        ps.phase = "done"
                elif ps.mission_idx >= len(ps.mission):
                    ps.phase = "done"

            elif ps.phase == "waiting_slot" and not stopped_mode:
                try:
                    planner.begin_leg(ps, ps.leg_nodes[-1] if ps.leg_nodes else self.spawn_node[vid])
                    if ps.phase == "to_zone":
                        planner.release_slots(vid, keep=ps.target_slot)
                except (NoRouteError, PlannerOverload) as exc:
                    errors.append(str(exc))
                    ps.phase = "done"

            elif ps.phase == "to_zone":
                arrived = False
                if obj is not None:
                    slot_pos = self.depot.nodes[ps.target_slot]
                    arrived = (
                        dist(obj.position, slot_pos) <= ARRIVAL_TOL_M
                        and ps.progress_speed <= ARRIVAL_SPEED
                    )
                if arrived:
                    ps.phase = "servicing"
                    ps.service_left = self.scenario.station_service_ticks
                    ps.hold_arc = None
                    ps.hold_reason = ""
                    ps.version += 1
                    outgoing.append(
                        (vid, "StationCommand", {"action": "enter", "zone": ps.target_zone})
                    )

            elif ps.phase == "servicing" and not stopped_mode:
                ps.service_left -= 1
                if ps.service_left <= 0:
                    outgoing.append(
                        (vid, "StationCommand", {"action": "exit", "zone": ps.target_zone})
                    )
                    ps.mission_idx += 1
                    if ps.mission_idx >= len(ps.mission):
                        ps.phase = "done"
                        ps.completed_tick = now
                    else:
                        slot = ps.target_slot
                        try:
                            planner.begin_leg(ps, slot)
                            if ps.phase == "to_zone":
                                planner.release_slots(vid, keep=ps.target_slot)
                        except (NoRouteError, PlannerOverload) as exc:
                            errors.append(str(exc))
                            ps.phase = "done"

            # dynamic holds
            if ps.phase == "to_zone":
                blocked_ped = planner_avoidance and planner.pedestrian_block(ps, ped_preds, ped_radius)
                leader_arc = planner.headway_block(
                    ps, {v: t.position for v, t in sensed_vehicle.items()}
                )
                if blocked_ped:
                    if ps.hold_reason != "pedestrian":
                        planner.clear_hold(ps, ("headway",))
                    planner.set_hold(ps, "pedestrian")
                elif leader_arc is not None:
                    if ps.hold_reason != "headway":
                        planner.clear_hold(ps, ("pedestrian",))
                    planner.set_hold(ps, "headway", want_arc=leader_arc - HEADWAY_CLEAR_M)
                else:
                    planner.clear_hold(ps, ("pedestrian", "headway"))

        try:
            planner.apply_reservations(order, now)
        except PlannerOverload as exc:
            errors.append(str(exc))

        # trajectory payloads (content cached per plan version)
        for vid in order:
            ps = planner.plans.get(vid)
            if ps is None:
                continue
            report = self.latest_report.get(vid, {})
            if report.get("mode") == "EstopStop":
                continue
            if ps.phase in ("to_zone", "servicing", "done", "waiting_slot") and ps.leg_coords:
                cached = self._traj_cache.get(vid)
                if cached is None or cached["version"] != ps.version:
                    cached = self._build_payload(ps)
                    self._traj_cache[vid] = cached
                payload = cached
                if traj_offset:
                    payload = self._corrupt_payload(cached, traj_offset)
                outgoing.append((vid, "TrajectoryUpdate", payload))

        # deviation alerts against the planned (uncorrupted) path
        for vid in order:
            ps = planner.plans.get(vid)
            obj = sensed_vehicle.get(vid)
            if ps is None or obj is None or len(ps.leg_coords) < 2:
                continue
            cross = point_polyline_distance(obj.position, ps.leg_coords)
            latched = self.deviation_latched.get(vid, False)
            if cross > DEVIATION_ALERT_M and not latched:
                self.deviation_latched[vid] = True
                alerts.append({"vehicle": vid, "cross_track": round(cross, 3)})
            elif cross < DEVIATION_CLEAR_M and latched:
                self.deviation_latched[vid] = False

        return outgoing, alerts, errors

    def _build_payload(self, ps: PlanState) -> dict:
        pts = self.planner.effective_points(ps)
        import math

        knots = []
        arc = 0.0
        t_off = 0.0
        prev = None
        for i, (x, y, v) in enumerate(pts):
            if prev is not None:
                seg = dist((prev[0], prev[1]), (x, y))
                arc += seg
                t_off += seg / max((prev[2] + v) / 2.0, 0.25) / self.scenario.tick_s
            if i + 1 < len(pts):
                heading = math.atan2(pts[i + 1][1] - y, pts[i + 1][0] - x)
            elif prev is not None:
                heading = math.atan2(y - prev[1], x - prev[0])
            else:
                heading = 0.0
            offset = max(int(math.ceil(t_off)), knots[-1]["dt"] + 1 if knots else 0)
            knots.append(
                {
                    "x": round(x, 6),
                    "y": round(y, 6),
                    "heading": round(heading, 6),
                    "speed": round(v, 6),
                    "dt": offset,
                }
            )
        return {"points": knots, "horizon": knots[-1]["dt"] if knots else 0, "version": ps.version}

    @staticmethod
    def _corrupt_payload(payload: dict, offset: float) -> dict:
        """Lateral shift of every waypoint after the first: an incorrect update
        that drags the vehicle off the planned path."""
        import math

        pts = payload["points"]
        out = [dict(pts[0])]
        for p in pts[1:]:
            h = p["heading"]
            out.append(
                {
                    "x": round(p["x"] - offset * math.sin(h), 6),
                    "y": round(p["y"] + offset * math.cos(h), 6),
                    "heading": p["heading"],
                    "speed": p["speed"],
                    "dt": p["dt"],
                }
            )
        return {"points": out, "horizon": payload["horizon"], "version": payload["version"]}

    # -- snapshots ---------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "onboarded": {k: dict(v) for k, v in self.onboarded.items()},
            "rejected": {k: dict(v) for k, v in self.rejected.items()},
            "latest_report": {k: dict(v) for k, v in self.latest_report.items()},
            "emergency_event": self.emergency_event,
            "deviation_latched": dict(self.deviation_latched),
            "spawn_node": dict(self.spawn_node),
            "planner": self.planner.to_dict(),
        }

    def restore(self, d: dict) -> None:
        self.onboarded = {k: dict(v) for k, v in d["onboarded"].items()}
        self.rejected = {k: dict(v) for k, v in d["rejected"].items()}
        self.latest_report = {k: dict(v) for k, v in d["latest_report"].items()}
        self.emergency_event = d["emergency_event"]
        self.deviation_latched = dict(d["deviation_latched"])
        self.spawn_node = dict(d["spawn_node"])
        self.planner.restore(d["planner"])
        self._traj_cache = {}
