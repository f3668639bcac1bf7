"""Deterministic 10 Hz simulation loop.

Per-tick order is fixed: channel deliveries, operator/world events, depot
sensing + planning + message dispatch, vehicle automata (ascending id),
pedestrians, collision and envelope checks, trace record, snapshot. Every
random draw comes from a named counter stream, so a snapshot (plain JSON data)
restores to a bit-identical continuation.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from .geometry import Pose, circle_rect_intersect, point_segment_distance
from .infrastructure import Infrastructure, RollingBuffer, TrackedObject, ix_sense, predict
from .network import Channel, LinkFaults, Message, MsgKind, derive_key, verify
from .rng import DetRng
from .safety import InjectionState, MonitorReport, check_collisions, evaluate_goals
from .trace import TraceLog
from .vehicle import (
    AodcaConfig,
    DriveMode,
    HealthStatus,
    Limits,
    STOP_MODES,
    Trajectory,
    TrajectoryPoint,
    VcuInputs,
    VehicleState,
    aodca_scan,
    arc_lengths,
    follow_speed,
    integrate,
    lights_for,
    report_payload,
    speed_limiter,
    vcu_step,
)
from .world import (
    DEFAULT_PED_RADIUS_M,
    ESTOP_RADIUS_M,
    ScenarioConfig,
    TrafficSituation,
    VEHICLE_LENGTH_M,
    VEHICLE_WIDTH_M,
    serialize_scenario,
)

VEHICLE_OBSTACLE_RADIUS = VEHICLE_LENGTH_M / 2.0
PED_STANDOFF = 0.05
# Forward cone for the braking gate: wide enough to cover everything the
# footprint can sweep into, narrow enough not to latch on traffic parked in
# adjacent slots (the config type itself defaults to a full circle).
AEB_FOV = 2.0 * math.pi / 3.0


@dataclass
class VehicleExtra:
    start_tick: int
    capabilities: frozenset[str]
    onboard_state: str = "none"          # none | requested | accepted | rejected
    traj_payload: Optional[dict] = None
    arc_table: list[float] = field(default_factory=list)
    checked_out: bool = False
    logged_traj: str = ""


@dataclass
class PedRuntime:
    id: str
    x: float
    y: float
    speed: float
    radius: float
    kind: str                            # walker | scripted
    waypoints: list[tuple[float, float]] = field(default_factory=list)
    wp_idx: int = 0
    target: Optional[tuple[float, float]] = None
    start_tick: int = 0
    vx: float = 0.0
    vy: float = 0.0


class Simulation:
    def __init__(self, scenario: ScenarioConfig, limits: Limits = Limits(),
                 aodca: AodcaConfig = AodcaConfig(fov=AEB_FOV), snapshot_data: Optional[dict] = None,
                 buffer_capacity: int = 100):
        self.scenario = scenario
        self.limits = limits
        self.aodca_cfg = aodca
        self.dt = scenario.tick_s
        self.duration = scenario.duration_ticks
        self.injections = InjectionState(scenario.injections)
        self.keys = {v.id: derive_key(scenario.seed, v.id) for v in scenario.vehicles}
        self.channel = Channel(
            scenario.seed,
            scenario.channel.base_delay_ticks,
            scenario.channel.drop_probability,
            scenario.channel.jitter_ticks,
        )
        self.ped_rng = DetRng(scenario.seed, "pedestrians")
        self.infra = Infrastructure(scenario, limits)
        self.buffer = RollingBuffer(buffer_capacity)
        self.obstacles = [
            (str(o["id"]), float(o["position"][0]), float(o["position"][1]), float(o.get("radius", 0.5)))
            for o in scenario.obstacles
        ]
        self.lane_segments = [
            (scenario.map.nodes[e.src], scenario.map.nodes[e.dst]) for e in scenario.map.edges
        ]
        self.extra_events: list[dict] = []
        self.contacts: set[tuple[str, str]] = set()
        self.overspeed_latch: set[str] = set()
        self.watchdog_latch: set[str] = set()
        self.security_rejects = 0
        self.collision_count = 0
        self.violation_count = 0
        self.last_tracked: list[TrackedObject] = []
        self.on_tick: Optional[Callable[[dict], None]] = None   # serve hook
        self.pending_alerts: list[dict] = []

        if snapshot_data is None:
            self.tick = 0
            self.trace = TraceLog()
            self.vehicles = self._spawn_vehicles()
            self.extra = {
                s.id: VehicleExtra(start_tick=s.start_tick, capabilities=s.capabilities)
                for s in scenario.vehicles
            }
            self.peds = self._spawn_pedestrians()
            self.trace.append(
                0,
                "header",
                scenario_id=scenario.id,
                seed=scenario.seed,
                cap=scenario.mode.speed_cap,
                mode=scenario.mode.tag.value,
                traffic=scenario.traffic.value,
                mitigations=dict(scenario.mitigations),
                limits={
                    "service_decel": limits.service_decel,
                    "aeb_decel": limits.aeb_decel,
                    "max_accel": limits.max_accel,
                },
                config_digest=self.config_digest(scenario),
                scenario=self.static_config_doc(scenario),
            )
            for ev in self._events_at(0):
                self._apply_event(ev, 0)
            self._tick_record(0)
            self.buffer.push(self.snapshot())
        else:
            self._restore(snapshot_data)

    # -- construction helpers ----------------------------------------------

    @staticmethod
    def static_config_doc(scenario: ScenarioConfig) -> dict:
        """Scenario serialization minus operator events: commands are traced as
        cmd records when applied, so a live run and a scheduled replay of its
        command log hash identically."""
        doc = serialize_scenario(scenario)
        doc.pop("events", None)
        return doc

    @classmethod
    def config_digest(cls, scenario: ScenarioConfig) -> str:
        doc = json.dumps(cls.static_config_doc(scenario), sort_keys=True, separators=(",", ":"))
        return hashlib.blake2b(doc.encode("utf-8"), digest_size=8).hexdigest()

    def _spawn_vehicles(self) -> dict[str, VehicleState]:
        out: dict[str, VehicleState] = {}
        depot = self.scenario.map
        slot_cursor: dict[str, int] = {}
        for spec in self.scenario.vehicles:
            if spec.spawn_pose is not None:
                pose = Pose(*spec.spawn_pose)
            else:
                zone = depot.zone_by_id(spec.spawn_zone)
                slots = depot.zone_slots(zone)
                idx = slot_cursor.get(spec.spawn_zone, 0)
                slot_cursor[spec.spawn_zone] = idx + 1
                node = slots[idx % len(slots)]
                x, y = depot.nodes[node]
                heading = 0.0
                for e in depot.out_edges(node):
                    tx, ty = depot.nodes[e.dst]
                    heading = math.atan2(ty - y, tx - x)
                    break
                pose = Pose(x, y, heading)
            out[spec.id] = VehicleState(id=spec.id, pose=pose)
        return dict(sorted(out.items()))

    def _lane_clear(self, point: tuple[float, float], clearance: float) -> bool:
        return all(
            point_segment_distance(point, a, b) > clearance for a, b in self.lane_segments
        )

    def _sample_ped_point(self, area: tuple[float, float, float, float],
                          clearance: Optional[float]) -> tuple[float, float]:
        x0, y0, x1, y1 = area
        for _ in range(60):
            x = self.ped_rng.uniform(x0, x1)
            y = self.ped_rng.uniform(y0, y1)
            if clearance is None or self._lane_clear((x, y), clearance):
                return (x, y)
        return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)

    def _map_bounds(self) -> tuple[float, float, float, float]:
        xs = [v[0] for poly in self.scenario.map.sensor_coverage for v in poly]
        ys = [v[1] for poly in self.scenario.map.sensor_coverage for v in poly]
        return min(xs), min(ys), max(xs), max(ys)

    def _spawn_pedestrians(self) -> list[PedRuntime]:
        peds: list[PedRuntime] = []
        spec = self.scenario.pedestrians
        controlled = self.scenario.traffic == TrafficSituation.CONTROLLED
        area = spec.area or self._map_bounds()
        for i in range(spec.count):
            radius = DEFAULT_PED_RADIUS_M
            clearance = (self.scenario.map.lane_half_width + radius) if controlled else None
            x, y = self._sample_ped_point(area, clearance)
            target = self._sample_ped_point(area, clearance)
            peds.append(
                PedRuntime(
                    id=f"P{i + 1}", x=x, y=y, speed=spec.speed, radius=radius,
                    kind="walker", target=target,
                )
            )
        for s in spec.scripted:
            peds.append(
                PedRuntime(
                    id=str(s["id"]),
                    x=float(s["start"][0]),
                    y=float(s["start"][1]),
                    speed=float(s["speed"]),
                    radius=float(s.get("radius", DEFAULT_PED_RADIUS_M)),
                    kind="scripted",
                    waypoints=[(float(w[0]), float(w[1])) for w in s["waypoints"]],
                    start_tick=int(s.get("start_tick", 0)),
                )
            )
        peds.sort(key=lambda p: p.id)
        return peds

    # -- event handling ------------------------------------------------------

    def _events_at(self, tick: int) -> list[dict]:
        evs = [e for e in self.scenario.events if int(e["tick"]) == tick]
        evs += [e for e in self.extra_events if int(e["tick"]) == tick]
        return evs

    def inject_command(self, command: dict) -> int:
        """External (dashboard/driver) command; applied at the next tick boundary."""
        at = self.tick + 1
        self.extra_events.append({**command, "tick": at})
        return at

    def _estop_available(self, tick: int) -> bool:
        return self.scenario.mitigations.get("estop_path", True) and not self.injections.estop_blocked(tick)

    def _apply_event(self, ev: dict, now: int) -> None:
        kind = ev["kind"]
        self.trace.append(now, "cmd", cmd={k: v for k, v in ev.items() if k != "tick"})
        if kind == "estop_button":
            pos = next(p for b, p in self.scenario.map.estop_buttons if b == ev["button"])
            members = sorted(
                vid
                for vid, v in self.vehicles.items()
                if math.hypot(v.pose.x - pos[0], v.pose.y - pos[1]) <= ESTOP_RADIUS_M + 1e-12
            )
            blocked = not self._estop_available(now)
            self.trace.append(now, "estop", source=f"button:{ev['button']}", members=members, blocked=blocked)
            if blocked:
                self._violation(now, "SG6", detail="e-stop press not deliverable")
            else:
                for vid in members:
                    self.vehicles[vid].estop_latched = True
        elif kind == "estop":
            target = str(ev.get("target", "all"))
            members = sorted(self.vehicles) if target == "all" else [target]
            members = [m for m in members if m in self.vehicles]
            blocked = not self._estop_available(now)
            self.trace.append(now, "estop", source="operator", members=members, blocked=blocked)
            if blocked:
                self._violation(now, "SG6", detail="e-stop command not deliverable")
            else:
                for vid in members:
                    self.vehicles[vid].estop_latched = True
        elif kind == "estop_release":
            target = str(ev.get("target", "all"))
            members = sorted(self.vehicles) if target == "all" else [target]
            for vid in members:
                if vid in self.vehicles:
                    self.vehicles[vid].estop_latched = False
        elif kind == "hazard_event":
            event = str(ev["event"])
            self.infra.raise_hazard(event)
            self.trace.append(now, "hazard_event", event=event)
            for vid in sorted(self.vehicles):
                self._send("ix", vid, MsgKind.EMERGENCY_STOP, {"reason": event}, now)
        elif kind == "hazard_clear":
            self.infra.clear_hazard()
            self.trace.append(now, "hazard_clear")
            for vid in sorted(self.vehicles):
                self._send("ix", vid, MsgKind.ESTOP_RELEASE, {"reason": "hazard_clear"}, now)
        elif kind in ("checkin", "checkout"):
            driver = str(ev.get("driver", ""))
            token = str(ev.get("token", ""))
            vid = str(ev.get("vehicle", ""))
            ok = self.scenario.drivers.get(driver) == token and token != ""
            reason = "ok" if ok else "invalid credentials"
            if ok and kind == "checkout":
                ps = self.infra.planner.plans.get(vid)
                ok = ps is not None and ps.phase == "done" and ps.completed_tick is not None
                if not ok:
                    reason = "vehicle not ready for pick-up"
                elif self.extra[vid].checked_out:
                    ok = False
                    reason = "already checked out"
            if ok and kind == "checkout":
                self.extra[vid].checked_out = True
            self.trace.append(
                now, "driver", action=kind, driver=driver, vehicle=vid, accepted=ok, reason=reason
            )

    def _violation(self, now: int, goal: str, **detail) -> None:
        self.violation_count += 1
        self.trace.append(now, "violation", goal=goal, **detail)

    # -- messaging -----------------------------------------------------------

    def _link_faults(self, vid: str, now: int) -> LinkFaults:
        f = self.injections.link_faults(vid, now)
        blocked = f.blocked
        for a, b, sel in self.scenario.channel.disconnect_windows:
            if a <= now <= b and sel in ("all", vid):
                blocked = True
        return LinkFaults(blocked, f.drop_probability, f.jitter_ticks)

    def _send(self, sender: str, recipient: str, kind: MsgKind, payload: dict, now: int) -> None:
        vid = recipient if sender == "ix" else sender
        if vid not in self.keys:
            return
        msg = Message(kind, sender, recipient, payload, now).sign(self.keys[vid])
        when = self.channel.send(msg, now, self._link_faults(vid, now))
        if kind == MsgKind.TRAJECTORY_UPDATE:
            sig = f"{payload.get('version')}|{payload.get('inflated', '')}|{payload.get('offset', '')}"
            ex = self.extra[recipient]
            if ex.logged_traj != sig:
                ex.logged_traj = sig
                self.trace.append(now, "traj_content", vid=recipient, pl=payload)
            mirror: dict = {"ver": payload.get("version"), "n": len(payload["points"])}
        else:
            mirror = payload
        self.trace.append(
            now, "msg", kind=kind.value, s=sender, r=recipient,
            when=when if when is not None else -1, pl=mirror,
        )

    # -- main loop -------------------------------------------------------------

    def step(self) -> None:
        now = self.tick + 1
        scn = self.scenario
        inj = self.injections

        prev_active = set(inj.active_set(self.tick))
        cur_active = set(inj.active_set(now))
        for hz, tgt in sorted(cur_active - prev_active):
            self.trace.append(now, "inj", hazard=hz, target=tgt, on=True)
        for hz, tgt in sorted(prev_active - cur_active):
            self.trace.append(now, "inj", hazard=hz, target=tgt, on=False)

        # 1. channel deliveries
        delivered = self.channel.deliver_due(now)
        veh_inbox: dict[str, list[Message]] = {}
        ix_inbox: list[Message] = []
        for msg in delivered:
            if msg.recipient == "ix":
                ix_inbox.append(msg)
            else:
                veh_inbox.setdefault(msg.recipient, []).append(msg)

        # 2. operator / world events
        for ev in self._events_at(now):
            self._apply_event(ev, now)

        # 3. depot-side message handling
        for msg in ix_inbox:
            if not verify(msg, self.keys.get(msg.sender, b"\x00" * 32)):
                self.security_rejects += 1
                self.trace.append(now, "auth_reject", s=msg.sender, kind=msg.kind.value)
                continue
            if msg.kind == MsgKind.VEHICLE_STATE_REPORT:
                self.infra.latest_report[msg.sender] = msg.payload
            elif msg.kind == MsgKind.ONBOARD_REQUEST:
                record = self.infra.handle_onboard_request(
                    msg.sender, frozenset(msg.payload["capabilities"]), now
                )
                self.trace.append(now, "onboard", vid=msg.sender,
                                  accepted=record["accepted"], reason=record["reason"])
                self._send("ix", msg.sender, MsgKind.ONBOARD_ACK, dict(record), now)

        # 4. sensing + prediction over the pre-move world
        frozen_veh = {
            vid: (v.pose.x, v.pose.y, v.pose.heading,
                  (v.speed * math.cos(v.pose.heading), v.speed * math.sin(v.pose.heading)))
            for vid, v in self.vehicles.items()
        }
        actors = [
            (vid, "Vehicle", (x, y), vel) for vid, (x, y, _h, vel) in sorted(frozen_veh.items())
        ]
        actors += [(p.id, "Pedestrian", (p.x, p.y), (p.vx, p.vy)) for p in self.peds]
        actors += [(oid, "Unknown", (x, y), (0.0, 0.0)) for oid, x, y, _r in self.obstacles]
        healthy = not inj.ix_blind(now)
        tracked = ix_sense(actors, scn.map, healthy, now)
        self.last_tracked = tracked
        preds = predict(tracked, tick_s=self.dt, velocity_scale=inj.prediction_scale(now))

        # 5. planning and dispatch
        outgoing, alerts, errors = self.infra.step(
            now, tracked, preds,
            planner_avoidance=scn.mitigations.get("planner_avoidance", True),
            traj_offset=inj.trajectory_offset(now),
        )
        for recipient, kind, payload in outgoing:
            if kind == "TrajectoryUpdate":
                h3 = inj.h3(recipient, now)
                if h3 is not None:
                    payload = self._inflate_payload(payload, h3[0])
            self._send("ix", recipient, MsgKind(kind), payload, now)
        for alert in alerts:
            self.trace.append(now, "alert", **alert)
            self.pending_alerts.append({**alert, "tick": now})
        for err in errors:
            self.trace.append(now, "planner_err", detail=err)

        # 6. vehicles, ascending id
        ped_frozen = [(p.id, (p.x, p.y), p.radius) for p in self.peds]
        records = []
        for vid in sorted(self.vehicles):
            v = self.vehicles[vid]
            ex = self.extra[vid]

            for msg in veh_inbox.get(vid, []):
                if not verify(msg, self.keys[vid]):
                    self.security_rejects += 1
                    self.trace.append(now, "auth_reject", s=msg.sender, kind=msg.kind.value)
                    continue
                self._vehicle_receive(v, ex, msg, now)

            if ex.onboard_state == "none" and now >= ex.start_tick:
                ex.onboard_state = "requested"
                self._send(vid, "ix", MsgKind.ONBOARD_REQUEST,
                           {"capabilities": sorted(ex.capabilities)}, now)

            brake_fail = inj.brake_failure(vid, now)
            v.health = HealthStatus(
                brake_primary_ok=brake_fail is None,
                brake_secondary_ok=brake_fail != "both",
                power_ok=True,
                aodca_ok=not inj.aodca_failed(vid, now),
            )

            detected = False
            nearest = None
            if v.health.aodca_ok:
                obstacles = [
                    ((x, y), VEHICLE_OBSTACLE_RADIUS)
                    for ovid, (x, y, _h, _vel) in frozen_veh.items()
                    if ovid != vid
                ]
                obstacles += [((px, py), pr) for _pid, (px, py), pr in ped_frozen]
                obstacles += [((ox, oy), orad) for _oid, ox, oy, orad in self.obstacles]
                detected, nearest = aodca_scan(v, obstacles, self.aodca_cfg, self.limits.service_decel)

            age = now - v.last_traj_tick if v.last_traj_tick is not None else None

            limiter_on = scn.mitigations.get("speed_limiter", True)
            h3 = inj.h3(vid, now)
            if h3 is not None and h3[1]:
                limiter_on = False
            tracking = 0.0
            if v.active_traj is not None:
                v_cmd = follow_speed(v.active_traj, v.arc_s, ex.arc_table, self.limits.service_decel)
                if limiter_on:
                    v_cmd = speed_limiter(v_cmd, scn.mode.speed_cap)
                tracking = (v_cmd - v.speed) / self.dt

            inputs = VcuInputs(
                traj_age_ticks=age,
                aodca_detected=detected,
                estop_latched=v.estop_latched,
                station_docked=v.docked,
                health=v.health,
                has_trajectory=v.active_traj is not None,
                tracking_accel=tracking,
                watchdog_enabled=scn.mitigations.get("watchdog", True),
                aeb_enabled=scn.mitigations.get("aeb", True),
                secondary_brake_available=scn.mitigations.get("secondary_brake", True),
            )
            mode, accel = vcu_step(v, inputs, self.limits, now)
            if mode != v.mode:
                self.trace.append(now, "mode", vid=vid, frm=v.mode.value, to=mode.value)
                v.mode = mode

            authority = v.health.brake_authority(scn.mitigations.get("secondary_brake", True))
            integrate(v, accel, self.dt, brake_authority=authority)
            v.lights = lights_for(mode)
            v.doors = "Open" if (v.docked and v.speed <= 1e-9) else "Closed"
            v.warnings = self._warnings(v, age)

            report = report_payload(v)
            report["sensing"] = {
                "detected": detected,
                "nearest_m": round(nearest, 3) if nearest is not None else None,
            }
            self._send(vid, "ix", MsgKind.VEHICLE_STATE_REPORT, report, now)

            records.append(
                {
                    "id": vid,
                    "x": round(v.pose.x, 6),
                    "y": round(v.pose.y, 6),
                    "h": round(v.pose.heading, 6),
                    "v": round(v.speed, 6),
                    "m": v.mode.value,
                    "age": age,
                    "det": 1 if detected else 0,
                    "ao": 1 if v.health.aodca_ok else 0,
                    "ba": 1 if authority else 0,
                }
            )

        # 7. pedestrians
        self._step_pedestrians(now)

        # 8. collisions (rising edge per pair)
        self._check_collisions(now)

        # 9. live envelope checks
        for rec in records:
            vid = rec["id"]
            v = self.vehicles[vid]
            if v.speed > scn.mode.speed_cap + 1e-9:
                if vid not in self.overspeed_latch:
                    self.overspeed_latch.add(vid)
                    self._violation(now, "SG3", vehicle=vid, speed=round(v.speed, 6))
            else:
                self.overspeed_latch.discard(vid)
            age = rec["age"]
            stale_moving = (
                age is not None and age > 30 and v.speed > 0.01
                and v.mode not in STOP_MODES
            )
            if stale_moving:
                if vid not in self.watchdog_latch:
                    self.watchdog_latch.add(vid)
                    self._violation(now, "SG4", vehicle=vid, age=age)
            else:
                self.watchdog_latch.discard(vid)

        # 10. trace + snapshot
        self._tick_record(now, records)
        self.tick = now
        snap = self.snapshot()
        self.buffer.push(snap)
        if self.on_tick is not None:
            self.on_tick(snap)

    def _warnings(self, v: VehicleState, age: Optional[int]) -> list[str]:
        out = []
        if not v.health.brake_primary_ok:
            out.append("BRAKE_PRIMARY")
        if not v.health.brake_secondary_ok:
            out.append("BRAKE_SECONDARY")
        if not v.health.aodca_ok:
            out.append("AODCA_FAULT")
        if age is not None and age > 30:
            out.append("COMM_LOSS")
        if v.mode == DriveMode.AEB_STOP:
            out.append("AEB_ACTIVE")
        return out

    def _vehicle_receive(self, v: VehicleState, ex: VehicleExtra, msg: Message, now: int) -> None:
        if msg.kind == MsgKind.TRAJECTORY_UPDATE:
            pts = tuple(
                TrajectoryPoint(p["x"], p["y"], p["heading"], p["speed"], p["dt"])
                for p in msg.payload["points"]
            )
            traj = Trajectory(issued_tick=msg.sent_tick, points=pts,
                              horizon_ticks=msg.payload["horizon"])
            v.active_traj = traj
            ex.traj_payload = msg.payload
            ex.arc_table = arc_lengths(traj)
            poly = traj.polyline()
            if len(poly) > 1:
                from .geometry import project_onto_polyline

                v.arc_s = project_onto_polyline((v.pose.x, v.pose.y), poly)
            else:
                v.arc_s = 0.0
            v.last_traj_tick = now
        elif msg.kind == MsgKind.EMERGENCY_STOP:
            if self._estop_available(now):
                v.estop_latched = True
            else:
                self.trace.append(now, "estop", source="v2i", members=[v.id], blocked=True)
                self._violation(now, "SG6", vehicle=v.id, detail="e-stop message blocked")
        elif msg.kind == MsgKind.ESTOP_RELEASE:
            v.estop_latched = False
        elif msg.kind == MsgKind.STATION_COMMAND:
            v.docked = msg.payload["action"] == "enter"
        elif msg.kind == MsgKind.ONBOARD_ACK:
            ex.onboard_state = "accepted" if msg.payload["accepted"] else "rejected"

    @staticmethod
    def _inflate_payload(payload: dict, factor: float) -> dict:
        pts = [
            {**p, "speed": round(p["speed"] * factor, 6)} for p in payload["points"]
        ]
        return {**payload, "points": pts, "inflated": round(factor, 6)}

    def _step_pedestrians(self, now: int) -> None:
        controlled = self.scenario.traffic == TrafficSituation.CONTROLLED
        area = self.scenario.pedestrians.area or self._map_bounds()
        step = self.dt
        rects = [
            (v.pose.x, v.pose.y, v.pose.heading) for _vid, v in sorted(self.vehicles.items())
        ]
        for p in self.peds:
            p.vx = p.vy = 0.0
            if now < p.start_tick:
                continue
            if p.kind == "scripted":
                if p.wp_idx >= len(p.waypoints):
                    continue
                target = p.waypoints[p.wp_idx]
            else:
                target = p.target
            if target is None:
                continue
            dx, dy = target[0] - p.x, target[1] - p.y
            d = math.hypot(dx, dy)
            move = p.speed * step
            if d <= move:
                nx, ny = target
                if p.kind == "scripted":
                    p.wp_idx += 1
                else:
                    clearance = (self.scenario.map.lane_half_width + p.radius) if controlled else None
                    p.target = self._sample_ped_point(area, clearance)
            else:
                nx, ny = p.x + dx / d * move, p.y + dy / d * move
            if controlled and p.kind == "walker" and not self._lane_clear(
                (nx, ny), self.scenario.map.lane_half_width + p.radius
            ):
                clearance = self.scenario.map.lane_half_width + p.radius
                p.target = self._sample_ped_point(area, clearance)
                continue
            blocked = any(
                circle_rect_intersect(
                    (nx, ny), p.radius + PED_STANDOFF, rx, ry, rh,
                    VEHICLE_LENGTH_M, VEHICLE_WIDTH_M,
                )
                for rx, ry, rh in rects
            )
            if blocked:
                continue
            p.vx, p.vy = (nx - p.x) / step, (ny - p.y) / step
            p.x, p.y = nx, ny

    def _check_collisions(self, now: int) -> None:
        vehicles = [
            (vid, v.pose.x, v.pose.y, v.pose.heading,
             (v.speed * math.cos(v.pose.heading), v.speed * math.sin(v.pose.heading)))
            for vid, v in sorted(self.vehicles.items())
        ]
        peds = [(p.id, p.x, p.y, p.radius, (p.vx, p.vy)) for p in self.peds]
        events = check_collisions(vehicles, peds, self.obstacles, now)
        live = set()
        for e in events:
            pair = (e.vehicle, e.other)
            live.add(pair)
            if pair not in self.contacts:
                self.contacts.add(pair)
                self.collision_count += 1
                self.trace.append(
                    now, "collision", vehicle=e.vehicle, other=e.other,
                    kind=e.kind, rel=round(e.relative_speed, 4),
                )
        self.contacts = {p for p in self.contacts if p in live}

    def _tick_record(self, now: int, records: Optional[list[dict]] = None) -> None:
        if records is None:
            records = [
                {
                    "id": vid,
                    "x": round(v.pose.x, 6),
                    "y": round(v.pose.y, 6),
                    "h": round(v.pose.heading, 6),
                    "v": round(v.speed, 6),
                    "m": v.mode.value,
                    "age": None,
                    "det": 0,
                    "ao": 1,
                    "ba": 1,
                }
                for vid, v in sorted(self.vehicles.items())
            ]
        self.trace.append(
            now, "tick",
            sh=0 if self.injections.ix_blind(now) else 1,
            veh=records,
            ped=[[p.id, round(p.x, 3), round(p.y, 3)] for p in self.peds],
        )

    # -- run helpers -------------------------------------------------------------

    def run(self, until: Optional[int] = None) -> None:
        limit = self.duration if until is None else min(until, self.duration)
        while self.tick < limit:
            self.step()

    def report(self) -> MonitorReport:
        return evaluate_goals(self.trace.records, self.scenario)

    def mission_completion(self) -> dict[str, Optional[int]]:
        return {
            vid: ps.completed_tick for vid, ps in sorted(self.infra.planner.plans.items())
        }

    # -- snapshot / restore --------------------------------------------------------

    def snapshot(self) -> dict:
        vehicles = []
        for vid in sorted(self.vehicles):
            v = self.vehicles[vid]
            ex = self.extra[vid]
            vehicles.append(
                {
                    "id": vid,
                    "x": v.pose.x,
                    "y": v.pose.y,
                    "heading": v.pose.heading,
                    "speed": v.speed,
                    "accel": v.accel,
                    "mode": v.mode.value,
                    "last_traj_tick": v.last_traj_tick,
                    "arc_s": v.arc_s,
                    "estop_latched": v.estop_latched,
                    "docked": v.docked,
                    "onboard_state": ex.onboard_state,
                    "traj": ex.traj_payload,
                    "traj_issued": v.active_traj.issued_tick if v.active_traj else None,
                    "checked_out": ex.checked_out,
                    "logged_traj": ex.logged_traj,
                }
            )
        peds = [
            {
                "id": p.id, "x": p.x, "y": p.y, "speed": p.speed, "radius": p.radius,
                "kind": p.kind, "wp_idx": p.wp_idx,
                "target": list(p.target) if p.target else None,
                "start_tick": p.start_tick, "vx": p.vx, "vy": p.vy,
            }
            for p in self.peds
        ]
        return {
            "tick": self.tick,
            "vehicles": vehicles,
            "pedestrians": peds,
            "tracked": [
                {"id": t.id, "cls": t.cls, "pos": list(t.position),
                 "vel": list(t.velocity), "seen": t.last_seen_tick}
                for t in self.last_tracked
            ],
            "pending": self.channel.to_dict(),
            "active_injections": [list(x) for x in self.injections.active_set(self.tick)],
            "infra": self.infra.to_dict(),
            "ped_rng": self.ped_rng.state(),
            "contacts": sorted(list(c) for c in self.contacts),
            "overspeed": sorted(self.overspeed_latch),
            "watchdog_latch": sorted(self.watchdog_latch),
            "security_rejects": self.security_rejects,
            "collision_count": self.collision_count,
            "violation_count": self.violation_count,
            "trace_chain": self.trace.chain_state(),
            "extra_events": [dict(e) for e in self.extra_events],
        }

    def _restore(self, snap: dict) -> None:
        self.tick = snap["tick"]
        self.trace = TraceLog.from_chain_state(snap["trace_chain"])
        self.vehicles = {}
        self.extra = {}
        for vd in snap["vehicles"]:
            v = VehicleState(
                id=vd["id"],
                pose=Pose(vd["x"], vd["y"], vd["heading"]),
                speed=vd["speed"],
                accel=vd["accel"],
                mode=DriveMode(vd["mode"]),
                last_traj_tick=vd["last_traj_tick"],
                arc_s=vd["arc_s"],
                estop_latched=vd["estop_latched"],
                docked=vd["docked"],
            )
            spec = next(s for s in self.scenario.vehicles if s.id == vd["id"])
            ex = VehicleExtra(start_tick=spec.start_tick, capabilities=spec.capabilities)
            ex.onboard_state = vd["onboard_state"]
            ex.checked_out = vd["checked_out"]
            ex.logged_traj = vd["logged_traj"]
            if vd["traj"] is not None:
                pts = tuple(
                    TrajectoryPoint(p["x"], p["y"], p["heading"], p["speed"], p["dt"])
                    for p in vd["traj"]["points"]
                )
                v.active_traj = Trajectory(vd["traj_issued"], pts, vd["traj"]["horizon"])
                ex.traj_payload = vd["traj"]
                ex.arc_table = arc_lengths(v.active_traj)
            self.vehicles[vd["id"]] = v
            self.extra[vd["id"]] = ex
        self.peds = []
        scripted_by_id = {str(s["id"]): s for s in self.scenario.pedestrians.scripted}
        for pd in snap["pedestrians"]:
            p = PedRuntime(
                id=pd["id"], x=pd["x"], y=pd["y"], speed=pd["speed"], radius=pd["radius"],
                kind=pd["kind"], wp_idx=pd["wp_idx"],
                target=tuple(pd["target"]) if pd["target"] else None,
                start_tick=pd["start_tick"], vx=pd["vx"], vy=pd["vy"],
            )
            if p.kind == "scripted":
                s = scripted_by_id[p.id]
                p.waypoints = [(float(w[0]), float(w[1])) for w in s["waypoints"]]
            self.peds.append(p)
        self.channel.restore(snap["pending"])
        self.infra.restore(snap["infra"])
        self.ped_rng.restore(snap["ped_rng"])
        self.contacts = {tuple(c) for c in snap["contacts"]}
        self.overspeed_latch = set(snap["overspeed"])
        self.watchdog_latch = set(snap["watchdog_latch"])
        self.security_rejects = snap["security_rejects"]
        self.collision_count = snap["collision_count"]
        self.violation_count = snap["violation_count"]
        self.extra_events = [dict(e) for e in snap["extra_events"]]
        self.last_tracked = [
            TrackedObject(t["id"], t["cls"], tuple(t["pos"]), tuple(t["vel"]), t["seen"])
            for t in snap["tracked"]
        ]
        self.buffer.push(self.snapshot())
