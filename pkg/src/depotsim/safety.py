"""Hazard injection, collision detection, and runtime verification of the six
safety goals from the recorded trace.

Goal verdicts are pure functions of the trace records, so live evaluation and
offline replay of the persisted NDJSON file produce identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .geometry import circle_rect_intersect, rect_corners, rects_intersect
from .network import LinkFaults
from .vehicle import STOP_MODES
from .world import (
    Injection,
    ScenarioConfig,
    VEHICLE_LENGTH_M,
    VEHICLE_WIDTH_M,
    WATCHDOG_TICKS,
)

STOP_MODE_NAMES = frozenset(m.value for m in STOP_MODES)

# Injection semantics, one action per hazard tag:
#   H1 disables on-board obstacle detection; H2 fails brake channels
#   (params.channels: primary|both); H3 inflates commanded trajectory speeds
#   (params.inflate) and, unless params.disable_limiter is false, bypasses the
#   speed limiter; H4 blocks a vehicle's V2I links; H5 degrades them
#   (params.drop_probability / jitter_ticks); H6 blinds depot sensing;
#   H7 corrupts prediction (params.velocity_scale) and optionally the outgoing
#   trajectory (params.waypoint_offset_m); H8 makes e-stop commands
#   undeliverable.


class InjectionState:
    def __init__(self, schedule: tuple[Injection, ...]):
        self.schedule = schedule

    def _active(self, tick: int, hazard: str, target: Optional[str] = None) -> list[Injection]:
        out = []
        for inj in self.schedule:
            if inj.hazard != hazard or not inj.active(tick):
                continue
            if target is None or inj.target == "all" or inj.target == target:
                out.append(inj)
        return out

    def active_set(self, tick: int) -> list[tuple[str, str]]:
        return [(i.hazard, i.target) for i in self.schedule if i.active(tick)]

    def aodca_failed(self, vid: str, tick: int) -> bool:
        return bool(self._active(tick, "H1", vid))

    def brake_failure(self, vid: str, tick: int) -> Optional[str]:
        hits = self._active(tick, "H2", vid)
        if not hits:
            return None
        channels = {str(i.params.get("channels", "both")) for i in hits}
        return "both" if "both" in channels else "primary"

    def h3(self, vid: str, tick: int) -> Optional[tuple[float, bool]]:
        hits = self._active(tick, "H3", vid)
        if not hits:
            return None
        inj = hits[0]
        return float(inj.params.get("inflate", 2.0)), bool(inj.params.get("disable_limiter", True))

    def link_blocked(self, vid: str, tick: int) -> bool:
        return bool(self._active(tick, "H4", vid))

    def link_faults(self, vid: str, tick: int) -> LinkFaults:
        blocked = self.link_blocked(vid, tick)
        drop = 0.0
        jitter = 0
        for inj in self._active(tick, "H5", vid):
            drop = max(drop, float(inj.params.get("drop_probability", 0.5)))
            jitter = max(jitter, int(inj.params.get("jitter_ticks", 25)))
        return LinkFaults(blocked=blocked, drop_probability=drop, jitter_ticks=jitter)

    def ix_blind(self, tick: int) -> bool:
        return bool(self._active(tick, "H6"))

    def prediction_scale(self, tick: int) -> float:
        hits = self._active(tick, "H7")
        if not hits:
            return 1.0
        return float(hits[0].params.get("velocity_scale", -1.0))

    def trajectory_offset(self, tick: int) -> float:
        hits = self._active(tick, "H7")
        if not hits:
            return 0.0
        return float(hits[0].params.get("waypoint_offset_m", 0.0))

    def estop_blocked(self, tick: int) -> bool:
        return bool(self._active(tick, "H8"))


@dataclass(frozen=True)
class CollisionEvent:
    tick: int
    vehicle: str
    other: str
    relative_speed: float
    kind: str  # pedestrian | vehicle | obstacle

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "vehicle": self.vehicle,
            "other": self.other,
            "relative_speed": round(self.relative_speed, 4),
            "kind": self.kind,
        }


def check_collisions(
    vehicles: list[tuple[str, float, float, float, tuple[float, float]]],
    pedestrians: list[tuple[str, float, float, float, tuple[float, float]]],
    obstacles: list[tuple[str, float, float, float]],
    tick: int,
) -> list[CollisionEvent]:
    """Exact footprint intersections for one snapshot.

    vehicles: (id, x, y, heading, velocity vector); pedestrians/obstacles carry
    a circle radius. Tangency counts as contact (closed intersection).
    """
    events = []
    rects = {}
    for vid, x, y, h, vel in vehicles:
        rects[vid] = rect_corners(x, y, h, VEHICLE_LENGTH_M, VEHICLE_WIDTH_M)
    for i, (vid, x, y, h, vel) in enumerate(vehicles):
        for pid, px, py, pr, pvel in pedestrians:
            if circle_rect_intersect((px, py), pr, x, y, h, VEHICLE_LENGTH_M, VEHICLE_WIDTH_M):
                rel = math.hypot(vel[0] - pvel[0], vel[1] - pvel[1])
                events.append(CollisionEvent(tick, vid, pid, rel, "pedestrian"))
        for oid, ox, oy, orad in obstacles:
            if circle_rect_intersect((ox, oy), orad, x, y, h, VEHICLE_LENGTH_M, VEHICLE_WIDTH_M):
                events.append(CollisionEvent(tick, vid, oid, math.hypot(*vel), "obstacle"))
        for vid2, x2, y2, h2, vel2 in vehicles[i + 1:]:
            if rects_intersect(rects[vid], rects[vid2]):
                rel = math.hypot(vel[0] - vel2[0], vel[1] - vel2[1])
                events.append(CollisionEvent(tick, vid, vid2, rel, "vehicle"))
    return events


@dataclass
class GoalVerdict:
    passed: bool = True
    evidence: list = field(default_factory=list)

    def fail(self, item) -> None:
        self.passed = False
        self.evidence.append(item)


@dataclass
class MonitorReport:
    goals: dict[str, GoalVerdict]
    collision_count: int
    max_speed: float
    comm_stop_latencies: list[int]
    estop_latencies: list[int]
    security_rejects: int
    violation_count: int

    @property
    def all_pass(self) -> bool:
        return all(v.passed for v in self.goals.values())

    def to_dict(self) -> dict:
        return {
            "goals": {
                g: {"pass": v.passed, "evidence": v.evidence[:20]}
                for g, v in sorted(self.goals.items())
            },
            "collision_count": self.collision_count,
            "max_speed": round(self.max_speed, 6),
            "comm_stop_latencies": self.comm_stop_latencies,
            "estop_latencies": self.estop_latencies,
            "security_rejects": self.security_rejects,
            "violation_count": self.violation_count,
        }

    def text(self) -> str:
        lines = []
        for g, v in sorted(self.goals.items()):
            status = "PASS" if v.passed else "FAIL"
            extra = f"  ({v.evidence[0]})" if v.evidence else ""
            lines.append(f"{g}: {status}{extra}")
        lines.append(f"collisions: {self.collision_count}")
        lines.append(f"max speed: {self.max_speed:.3f} m/s")
        lines.append(f"envelope violations: {self.violation_count}")
        return "\n".join(lines)


def _stop_deadline(speed: float, decel: float, tick_s: float) -> int:
    return int(math.ceil(speed / (decel * tick_s))) + 2


def evaluate_goals(records: list[dict], scenario: ScenarioConfig) -> MonitorReport:
    """Recompute SG1..SG6 verdicts from the raw trace."""
    header = next((r for r in records if r["k"] == "header"), None)
    if header is None:
        raise ValueError("incomplete trace: missing header record")
    cap = header["cap"]
    limits = header["limits"]
    tick_s = scenario.tick_s
    mitigations = header["mitigations"]
    aeb_on = mitigations.get("aeb", True)
    watchdog_on = mitigations.get("watchdog", True)

    inj = InjectionState(scenario.injections)

    ticks = [r for r in records if r["k"] == "tick"]
    collisions = [r for r in records if r["k"] == "collision"]
    estops = [r for r in records if r["k"] == "estop"]
    violations = [r for r in records if r["k"] == "violation"]

    goals = {f"SG{i}": GoalVerdict() for i in range(1, 7)}
    max_speed = 0.0

    # per-vehicle timelines
    timeline: dict[str, list[dict]] = {}
    for rec in ticks:
        for v in rec["veh"]:
            timeline.setdefault(v["id"], []).append({**v, "t": rec["t"], "sh": rec["sh"]})

    for vid, steps in timeline.items():
        for i, s in enumerate(steps):
            max_speed = max(max_speed, s["v"])

            # SG1: detection inside the envelope must be answered by a stop mode
            if s["det"] and aeb_on:
                nxt = steps[i + 1] if i + 1 < len(steps) else None
                ok = s["m"] in STOP_MODE_NAMES or (nxt is not None and nxt["m"] in STOP_MODE_NAMES)
                if not ok:
                    goals["SG1"].fail({"vehicle": vid, "tick": s["t"], "mode": s["m"]})

            # SG3: speed cap (global; the limiter owns the cap at all times)
            if s["v"] > cap + 1e-9:
                goals["SG3"].fail({"vehicle": vid, "tick": s["t"], "speed": s["v"]})

            # SG4: watchdog must answer a >3 s trajectory gap within one tick
            if s["age"] is not None and s["age"] == WATCHDOG_TICKS + 1 and watchdog_on:
                nxt = steps[i + 1] if i + 1 < len(steps) else None
                ok = s["m"] in STOP_MODE_NAMES or (nxt is not None and nxt["m"] in STOP_MODE_NAMES)
                if not ok:
                    goals["SG4"].fail({"vehicle": vid, "tick": s["t"], "mode": s["m"]})
            if (
                not watchdog_on
                and s["age"] is not None
                and s["age"] > WATCHDOG_TICKS
                and s["v"] > 0.01
                and s["m"] not in STOP_MODE_NAMES
            ):
                goals["SG4"].fail({"vehicle": vid, "tick": s["t"], "detail": "moving with stale trajectory"})

    # SG2: every stop episode must reach standstill within the braking envelope
    # (an episode released early by a recovery event is not a failure)
    comm_latencies: list[int] = []
    for vid, steps in timeline.items():
        i = 0
        while i < len(steps):
            if steps[i]["m"] not in STOP_MODE_NAMES:
                i += 1
                continue
            start = i
            v0 = steps[i]["v"]
            mode = steps[i]["m"]
            decel = limits["aeb_decel"] if mode in ("AebStop", "EstopStop") else limits["service_decel"]
            deadline = _stop_deadline(v0, decel, tick_s)
            stopped_at = None
            j = i
            while j < len(steps) and steps[j]["m"] in STOP_MODE_NAMES:
                if stopped_at is None and steps[j]["v"] <= 1e-9:
                    stopped_at = j
                j += 1
            if stopped_at is None:
                if j - start > deadline:
                    goals["SG2"].fail({"vehicle": vid, "tick": steps[start]["t"], "mode": mode, "v0": v0})
            else:
                latency = stopped_at - start
                if latency > deadline:
                    goals["SG2"].fail({"vehicle": vid, "tick": steps[start]["t"], "latency": latency})
                elif mode == "CommLossStop":
                    comm_latencies.append(latency)
            i = j

    # SG5: no collision attributable to a planned trajectory while sensing healthy
    planner_avoid_on = mitigations.get("planner_avoidance", True)
    for c in collisions:
        if c["kind"] != "pedestrian":
            continue
        rec = next((r for r in ticks if r["t"] == c["t"]), None)
        healthy = bool(rec["sh"]) if rec is not None else True
        vstate = None
        if rec is not None:
            vstate = next((v for v in rec["veh"] if v["id"] == c["vehicle"]), None)
        moving_on_plan = vstate is None or vstate["m"] not in ("Idle",)
        if healthy and moving_on_plan:
            goals["SG5"].fail({"vehicle": c["vehicle"], "tick": c["t"], "other": c["other"]})
        # SG1's collision clause: vehicle-level detection was healthy yet contact happened
        if vstate is not None and vstate.get("ao") and aeb_on:
            goals["SG1"].fail({"vehicle": c["vehicle"], "tick": c["t"], "collision": c["other"]})

    if not planner_avoid_on and any(c["kind"] == "pedestrian" for c in collisions):
        goals["SG5"].fail({"detail": "collision with pedestrian avoidance disabled"})

    # SG6: every press stops the in-radius vehicles; deliverability only fails under H8
    estop_latencies: list[int] = []
    for e in estops:
        if e["blocked"]:
            goals["SG6"].fail({"tick": e["t"], "detail": "e-stop not deliverable"})
            continue
        for vid in e["members"]:
            steps = timeline.get(vid, [])
            at = [s for s in steps if s["t"] >= e["t"]]
            if not at:
                continue
            entered = next((s for s in at if s["m"] == "EstopStop"), None)
            if entered is None or entered["t"] > e["t"] + 1:
                goals["SG6"].fail({"tick": e["t"], "vehicle": vid, "detail": "no stop mode within 1 tick"})
                continue
            v0 = at[0]["v"]
            deadline = _stop_deadline(v0, limits["aeb_decel"], tick_s)
            stopped = next((s for s in at if s["v"] <= 1e-9), None)
            if stopped is None or stopped["t"] - e["t"] > deadline:
                goals["SG6"].fail({"tick": e["t"], "vehicle": vid, "detail": "did not reach standstill"})
            else:
                estop_latencies.append(stopped["t"] - e["t"])

    security_rejects = sum(1 for r in records if r["k"] == "auth_reject")

    return MonitorReport(
        goals=goals,
        collision_count=len(collisions),
        max_speed=max_speed,
        comm_stop_latencies=comm_latencies,
        estop_latencies=estop_latencies,
        security_rejects=security_rejects,
        violation_count=len(violations),
    )
