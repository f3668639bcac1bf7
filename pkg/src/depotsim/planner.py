"""Reservation-based route planning at 10 Hz.

Every vehicle gets a node-to-node leg toward its next mission zone, encoded as
sparse trajectory knots (position, target speed, planned tick offset). Safety
holds (predicted pedestrians in the swept corridor, reservation conflicts,
headway) truncate the active trajectory with an interpolated stop knot.
Vehicles plan in ascending-id order so reservation conflicts resolve by a
deterministic total priority.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

from .geometry import dist, point_segment_distance, polyline_point_at, project_onto_polyline
from .vehicle import Limits, Trajectory, TrajectoryPoint, arc_lengths, follow_speed
from .world import DepotMap, ZoneKind

PED_CLEARANCE_BUFFER = 1.0
HEADWAY_M = 10.0
HEADWAY_CLEAR_M = 7.0      # stop with this much path to the leader's center
NODE_CLEARANCE_M = 6.0     # hold clear of a contested edge's entry node
HOLD_MARGIN_M = 0.5
ARRIVAL_TOL_M = 0.6
ARRIVAL_SPEED = 0.05


class NoRouteError(Exception):
    def __init__(self, vehicle_id: str, zone_kind: str):
        self.vehicle_id = vehicle_id
        self.zone_kind = zone_kind
        super().__init__(f"no route for {vehicle_id} to a {zone_kind} zone")


class PlannerOverload(Exception):
    pass


@dataclass
class PlanState:
    vehicle_id: str
    mission: tuple[str, ...]
    mission_idx: int = 1          # mission[0] is the spawn zone
    phase: str = "idle"           # idle | to_zone | waiting_slot | servicing | done
    leg_nodes: list[str] = field(default_factory=list)
    leg_coords: list[tuple[float, float]] = field(default_factory=list)
    leg_arcs: list[float] = field(default_factory=list)
    base_speeds: list[float] = field(default_factory=list)
    target_zone: str = ""
    target_slot: str = ""
    hold_arc: Optional[float] = None
    hold_reason: str = ""
    service_left: int = 0
    progress_arc: float = 0.0
    progress_speed: float = 0.0
    completed_tick: Optional[int] = None
    version: int = 0              # bumped whenever trajectory content changes

    def to_dict(self) -> dict:
        return {
            "vehicle_id": self.vehicle_id,
            "mission": list(self.mission),
            "mission_idx": self.mission_idx,
            "phase": self.phase,
            "leg_nodes": list(self.leg_nodes),
            "leg_coords": [list(c) for c in self.leg_coords],
            "leg_arcs": list(self.leg_arcs),
            "base_speeds": list(self.base_speeds),
            "target_zone": self.target_zone,
            "target_slot": self.target_slot,
            "hold_arc": self.hold_arc,
            "hold_reason": self.hold_reason,
            "service_left": self.service_left,
            "progress_arc": self.progress_arc,
            "progress_speed": self.progress_speed,
            "completed_tick": self.completed_tick,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlanState":
        ps = cls(vehicle_id=d["vehicle_id"], mission=tuple(d["mission"]))
        ps.mission_idx = d["mission_idx"]
        ps.phase = d["phase"]
        ps.leg_nodes = list(d["leg_nodes"])
        ps.leg_coords = [tuple(c) for c in d["leg_coords"]]
        ps.leg_arcs = list(d["leg_arcs"])
        ps.base_speeds = list(d["base_speeds"])
        ps.target_zone = d["target_zone"]
        ps.target_slot = d["target_slot"]
        ps.hold_arc = d["hold_arc"]
        ps.hold_reason = d["hold_reason"]
        ps.service_left = d["service_left"]
        ps.progress_arc = d["progress_arc"]
        ps.progress_speed = d["progress_speed"]
        ps.completed_tick = d["completed_tick"]
        ps.version = d["version"]
        return ps


class Planner:
    def __init__(self, depot: DepotMap, mode_cap: float, limits: Limits,
                 tick_s: float = 0.1, horizon_ticks: int = 30,
                 reserve_horizon_ticks: int = 60,
                 expansion_budget: Optional[int] = None):
        self.depot = depot
        self.mode_cap = mode_cap
        self.limits = limits
        self.tick_s = tick_s
        self.horizon = horizon_ticks
        self.reserve_horizon = reserve_horizon_ticks
        self.expansion_budget = expansion_budget
        self.adjacency: dict[str, list] = {n: [] for n in depot.nodes}
        self.edge_cap: dict[tuple[str, str], float] = {}
        self.edge_id: dict[tuple[str, str], str] = {}
        for e in depot.edges:
            self.adjacency[e.src].append((e.dst, e.length))
            self.edge_cap[(e.src, e.dst)] = e.speed_cap
            self.edge_id[(e.src, e.dst)] = e.id
        for n in self.adjacency:
            self.adjacency[n].sort()
        self.closed_edges: set[str] = set()
        self.plans: dict[str, PlanState] = {}
        self.slot_owner: dict[str, Optional[str]] = {}   # slot node -> vehicle id
        for z in depot.zones:
            for s in depot.zone_slots(z):
                self.slot_owner[s] = None
        self.reservations: dict[tuple[str, int], str] = {}

    # -- routing ------------------------------------------------------------

    def route(self, src: str, dst: str) -> Optional[list[str]]:
        if src == dst:
            return [src]
        best: dict[str, float] = {src: 0.0}
        prev: dict[str, str] = {}
        heap: list[tuple[float, str]] = [(0.0, src)]
        pops = 0
        while heap:
            d, n = heapq.heappop(heap)
            pops += 1
            if self.expansion_budget is not None and pops > self.expansion_budget:
                raise PlannerOverload(f"route search exceeded {self.expansion_budget} expansions")
            if d > best.get(n, math.inf) + 1e-12:
                continue
            if n == dst:
                path = [dst]
                while path[-1] != src:
                    path.append(prev[path[-1]])
                return path[::-1]
            for m, length in self.adjacency[n]:
                if self.edge_id[(n, m)] in self.closed_edges:
                    continue
                nd = d + length
                if nd < best.get(m, math.inf) - 1e-12:
                    best[m] = nd
                    prev[m] = n
                    heapq.heappush(heap, (nd, m))
        return None

    # -- zone slots ---------------------------------------------------------

    def claim_slot(self, vehicle_id: str, zone_kind: str) -> Optional[tuple[str, str]]:
        """Smallest free slot across zones of the kind, by (zone id, slot id)."""
        kind = ZoneKind(zone_kind)
        for zone in sorted(self.depot.zones_of_kind(kind), key=lambda z: z.id):
            for slot in self.depot.zone_slots(zone):
                if self.slot_owner.get(slot) is None:
                    self.slot_owner[slot] = vehicle_id
                    return zone.id, slot
        return None

    def release_slots(self, vehicle_id: str, keep: str = "") -> None:
        for slot, owner in self.slot_owner.items():
            if owner == vehicle_id and slot != keep:
                self.slot_owner[slot] = None

    # -- leg construction ---------------------------------------------------

    def begin_leg(self, ps: PlanState, from_node: str) -> None:
        zone_kind = ps.mission[ps.mission_idx]
        claimed = self.claim_slot(ps.vehicle_id, zone_kind)
        if claimed is None:
            ps.phase = "waiting_slot"
            ps.version += 1
            return
        zone_id, slot = claimed
        path = self.route(from_node, slot)
        if path is None:
            self.slot_owner[slot] = None
            raise NoRouteError(ps.vehicle_id, zone_kind)
        ps.phase = "to_zone"
        ps.target_zone = zone_id
        ps.target_slot = slot
        ps.leg_nodes = path
        ps.leg_coords = [self.depot.nodes[n] for n in path]
        ps.leg_arcs = [0.0]
        for a, b in zip(ps.leg_coords, ps.leg_coords[1:]):
            ps.leg_arcs.append(ps.leg_arcs[-1] + dist(a, b))
        ps.base_speeds = self._speed_profile(ps)
        ps.hold_arc = None
        ps.hold_reason = ""
        ps.progress_arc = 0.0
        ps.version += 1

    def _speed_profile(self, ps: PlanState) -> list[float]:
        n = len(ps.leg_nodes)
        if n == 1:
            return [0.0]
        caps = []
        for i, node in enumerate(ps.leg_nodes):
            adj = []
            if i > 0:
                adj.append(self.edge_cap[(ps.leg_nodes[i - 1], node)])
            if i < n - 1:
                adj.append(self.edge_cap[(node, ps.leg_nodes[i + 1])])
            caps.append(min(min(adj), self.mode_cap))
        caps[0] = min(caps[0], self.mode_cap)
        caps[-1] = 0.0  # arrive stopped
        # forward (acceleration) and backward (braking) feasibility passes
        for i in range(1, n):
            d = ps.leg_arcs[i] - ps.leg_arcs[i - 1]
            caps[i] = min(caps[i], math.sqrt(caps[i - 1] ** 2 + 2 * self.limits.max_accel * d))
        for i in range(n - 2, -1, -1):
            d = ps.leg_arcs[i + 1] - ps.leg_arcs[i]
            caps[i] = min(caps[i], math.sqrt(caps[i + 1] ** 2 + 2 * self.limits.service_decel * d))
        return caps

    def effective_points(self, ps: PlanState) -> list[tuple[float, float, float]]:
        """Knots as (x, y, speed), truncated at the hold barrier if one is set."""
        pts = []
        for (x, y), v in zip(ps.leg_coords, ps.base_speeds):
            pts.append((x, y, v))
        if ps.hold_arc is None:
            return pts
        out = []
        for (x, y, v), s in zip(pts, ps.leg_arcs):
            if s < ps.hold_arc - 1e-9:
                out.append((x, y, v))
            else:
                break
        hx, hy, _ = polyline_point_at(ps.leg_coords, ps.hold_arc)
        out.append((hx, hy, 0.0))
        return out

    def build_trajectory(self, ps: PlanState, now: int) -> Trajectory:
        pts = self.effective_points(ps)
        if len(pts) == 1:
            x, y, _ = pts[0]
            return Trajectory(now, (TrajectoryPoint(x, y, 0.0, 0.0, 1),), 1)
        knots = []
        arc = 0.0
        t_off = 0.0
        prev = None
        for i, (x, y, v) in enumerate(pts):
            if prev is not None:
                seg = dist((prev[0], prev[1]), (x, y))
                arc += seg
                pair_avg = max((prev[2] + v) / 2.0, 0.25)
                t_off += seg / pair_avg / self.tick_s
            heading = 0.0
            if i + 1 < len(pts):
                heading = math.atan2(pts[i + 1][1] - y, pts[i + 1][0] - x)
            elif prev is not None:
                heading = math.atan2(y - prev[1], x - prev[0])
            offset = max(int(math.ceil(t_off)), knots[-1].tick_offset + 1 if knots else 0)
            knots.append(TrajectoryPoint(x, y, heading, v, offset))
            prev = (x, y, v)
        return Trajectory(now, tuple(knots), knots[-1].tick_offset)

    # -- hold logic ---------------------------------------------------------

    def stop_envelope(self, speed: float) -> float:
        return speed * speed / (2.0 * self.limits.service_decel)

    def _min_hold_arc(self, ps: PlanState) -> float:
        return min(
            ps.leg_arcs[-1],
            ps.progress_arc + self.stop_envelope(ps.progress_speed) + HOLD_MARGIN_M,
        )

    def pedestrian_block(self, ps: PlanState, predictions: dict[str, list[tuple[float, float]]],
                         ped_radius: dict[str, float]) -> bool:
        """True if a predicted pedestrian/unknown position lies in the swept corridor
        of the path ahead within the lookahead window."""
        if not ps.leg_coords or ps.progress_arc >= ps.leg_arcs[-1] - 1e-6:
            return False
        lookahead = max(
            ps.progress_speed * self.horizon * self.tick_s
            + self.stop_envelope(ps.progress_speed) + 2.0,
            6.0,
        )
        window_end = min(ps.leg_arcs[-1], ps.progress_arc + lookahead)
        segs = self._segments_between(ps, ps.progress_arc, window_end)
        if not segs:
            return False
        for oid, preds in predictions.items():
            corridor = 1.1 + ped_radius.get(oid, 0.3) + PED_CLEARANCE_BUFFER
            for px, py in preds:
                for a, b in segs:
                    if point_segment_distance((px, py), a, b) <= corridor:
                        return True
        return False

    def _segments_between(self, ps: PlanState, s0: float, s1: float):
        segs = []
        for i in range(len(ps.leg_coords) - 1):
            a0, a1 = ps.leg_arcs[i], ps.leg_arcs[i + 1]
            if a1 <= s0 or a0 >= s1:
                continue
            pa = polyline_point_at(ps.leg_coords, max(a0, s0))
            pb = polyline_point_at(ps.leg_coords, min(a1, s1))
            segs.append(((pa[0], pa[1]), (pb[0], pb[1])))
        return segs

    def headway_block(self, ps: PlanState, others: dict[str, tuple[float, float]]) -> Optional[float]:
        """Arc of the nearest leader on this vehicle's path within the headway
        gap, or None when the path ahead is clear."""
        if not ps.leg_coords or len(ps.leg_coords) < 2:
            return None
        nearest: Optional[float] = None
        for vid, pos in others.items():
            if vid == ps.vehicle_id:
                continue
            arc_o = project_onto_polyline(pos, ps.leg_coords)
            lateral = min(
                point_segment_distance(pos, a, b)
                for a, b in zip(ps.leg_coords, ps.leg_coords[1:])
            )
            gap = arc_o - ps.progress_arc
            if 0.0 < gap <= HEADWAY_M and lateral <= 2.2:
                if nearest is None or arc_o < nearest:
                    nearest = arc_o
        return nearest

    def edge_at_arc(self, ps: PlanState, arc: float) -> Optional[str]:
        for i in range(len(ps.leg_nodes) - 1):
            if ps.leg_arcs[i] - 1e-9 <= arc < ps.leg_arcs[i + 1] - 1e-9:
                return self.edge_id[(ps.leg_nodes[i], ps.leg_nodes[i + 1])]
        return None

    def simulate_occupancy(self, ps: PlanState, now: int,
                           horizon: Optional[int] = None) -> list[tuple[str, int]]:
        """Predicted (edge, tick) and (node, tick) cells under the current
        profile. Node cells carry a +-NODE_CLEARANCE_M window so merge points
        are mutually exclusive, not just the edges."""
        if len(ps.leg_coords) < 2:
            return []
        pts = self.effective_points(ps)
        if len(pts) < 2:
            return []
        knots = tuple(
            TrajectoryPoint(x, y, 0.0, v, i + 1) for i, (x, y, v) in enumerate(pts)
        )
        traj = Trajectory(now, knots, len(knots))
        table = arc_lengths(traj)
        cells = []
        s, v = ps.progress_arc, ps.progress_speed
        dt = self.tick_s
        span = self.reserve_horizon if horizon is None else horizon
        for k in range(span + 1):
            edge = self.edge_at_arc(ps, s)
            if edge is not None:
                cells.append((edge, now + k))
            for node, node_arc in zip(ps.leg_nodes, ps.leg_arcs):
                if abs(s - node_arc) <= NODE_CLEARANCE_M:
                    cells.append((f"n:{node}", now + k))
            v_cmd = min(follow_speed(traj, s, table, self.limits.service_decel), self.mode_cap)
            a = max(-self.limits.service_decel, min(self.limits.max_accel, (v_cmd - v) / dt))
            v_new = max(0.0, v + a * dt)
            s += (v + v_new) / 2.0 * dt
            v = v_new
        return cells

    def apply_reservations(self, order: list[str], now: int) -> None:
        """Rebuild the table in priority order; a conflict inserts a hold
        barrier clear of the contested edge's entry node for the lower-priority
        vehicle. Stable holds keep their plan version (no content churn)."""
        self.reservations = {}
        for vid in order:
            ps = self.plans.get(vid)
            if ps is None or ps.phase not in ("to_zone",):
                continue
            entry = (ps.hold_arc, ps.hold_reason, ps.version)
            if ps.hold_reason == "reservation":
                ps.hold_arc = None
                ps.hold_reason = ""
            for attempt in (0, 1):
                cells = self.simulate_occupancy(ps, now)
                conflict_edge = None
                for edge, tick in cells:
                    owner = self.reservations.get((edge, tick))
                    if owner is not None and owner != vid:
                        conflict_edge = edge
                        break
                if conflict_edge is None:
                    for cell in cells:
                        self.reservations.setdefault(cell, vid)
                    break
                # hold clear of the contested edge or merge node
                edge_start = None
                if conflict_edge.startswith("n:"):
                    node = conflict_edge[2:]
                    for nd, arc in zip(ps.leg_nodes, ps.leg_arcs):
                        if nd == node and arc >= ps.progress_arc - 1e-6:
                            edge_start = arc
                            break
                else:
                    for i in range(len(ps.leg_nodes) - 1):
                        if self.edge_id[(ps.leg_nodes[i], ps.leg_nodes[i + 1])] == conflict_edge:
                            if ps.leg_arcs[i] >= ps.progress_arc - 1e-6:
                                edge_start = ps.leg_arcs[i]
                                break
                want = (
                    edge_start - NODE_CLEARANCE_M
                    if edge_start is not None
                    else self._min_hold_arc(ps)
                )
                barrier = max(self._min_hold_arc(ps), min(want, ps.leg_arcs[-1]), 0.0)
                if ps.hold_arc is None or barrier < ps.hold_arc - 1e-6:
                    ps.hold_arc = barrier
                    ps.hold_reason = "reservation"
            new_state = (ps.hold_arc, ps.hold_reason)
            old_arc, old_reason, old_version = entry
            same = (
                new_state[1] == old_reason
                and (new_state[0] is None) == (old_arc is None)
                and (new_state[0] is None or abs(new_state[0] - old_arc) < 1e-6)
            )
            ps.version = old_version if same else old_version + 1

    def set_hold(self, ps: PlanState, reason: str, want_arc: Optional[float] = None) -> None:
        if ps.hold_arc is not None:
            return
        barrier = self._min_hold_arc(ps)
        if want_arc is not None:
            barrier = max(barrier, min(want_arc, ps.leg_arcs[-1]))
        ps.hold_arc = barrier
        ps.hold_reason = reason
        ps.version += 1

    def clear_hold(self, ps: PlanState, reasons: tuple[str, ...]) -> None:
        if ps.hold_arc is not None and ps.hold_reason in reasons:
            ps.hold_arc = None
            ps.hold_reason = ""
            ps.version += 1

    def plan_all(self, now: int) -> tuple[dict[str, Trajectory], dict[tuple[str, int], str]]:
        """One planning cycle over every active plan: rebuild the reservation
        table in ascending-id priority (conflicts hold the lower-priority
        vehicle) and emit each vehicle's effective trajectory."""
        order = sorted(self.plans)
        self.apply_reservations(order, now)
        trajectories = {}
        for vid in order:
            ps = self.plans[vid]
            if ps.leg_coords:
                trajectories[vid] = self.build_trajectory(ps, now)
        return trajectories, dict(self.reservations)

    # -- snapshot support ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "plans": {vid: ps.to_dict() for vid, ps in self.plans.items()},
            "slot_owner": dict(self.slot_owner),
            "closed_edges": sorted(self.closed_edges),
            "reservations": [[e, t, v] for (e, t), v in sorted(self.reservations.items())],
        }

    def restore(self, d: dict) -> None:
        self.plans = {vid: PlanState.from_dict(p) for vid, p in d["plans"].items()}
        self.slot_owner = dict(d["slot_owner"])
        self.closed_edges = set(d["closed_edges"])
        self.reservations = {(e, t): v for e, t, v in d["reservations"]}
