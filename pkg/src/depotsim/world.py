"""Depot geometry, zones, operating modes, scenario configuration and validation.

All distances are meters, speeds m/s, angles radians. Scenario files use the
same units everywhere; mph exists only behind mph_to_mps().
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from .geometry import (
    Pose,
    convex_overlap,
    dist,
    is_convex,
    point_in_convex,
)

TICK_S = 0.1
MPH_TO_MPS = 0.44704
NS_CAP_MPS = 4.4704          # 10 mph
HS_DEFAULT_CAP_MPS = 6.7056  # 15 mph
HS_MAX_CAP_MPS = 11.176      # 25 mph
PEDESTRIAN_MAX_SPEED = 2.0
WATCHDOG_TICKS = 30          # stop when trajectory age exceeds 3.0 s
PREDICTION_HORIZON_TICKS = 30
BUFFER_TICKS = 100           # 10 s of snapshots
ESTOP_RADIUS_M = 10.0
VEHICLE_LENGTH_M = 6.0
VEHICLE_WIDTH_M = 2.2
DEFAULT_PED_RADIUS_M = 0.3

REQUIRED_CAPABILITIES = frozenset(
    {"AODCA", "AEB", "V2I_10HZ", "WATCHDOG_3S", "FAULT_STOP", "AUTH"}
)


class ScenarioError(ValueError):
    """Scenario document rejected; `path` points into the offending JSON node."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def mph_to_mps(v_mph: float) -> float:
    if v_mph < 0:
        raise ValueError("speed in mph must be non-negative")
    return v_mph * MPH_TO_MPS


def stopping_distance(speed: float, decel: float) -> float:
    """Kinematic stopping distance v^2 / (2 a)."""
    if decel <= 0:
        raise ValueError("decel must be positive")
    if speed < 0:
        raise ValueError("speed must be non-negative")
    return speed * speed / (2.0 * decel)


class ZoneKind(str, Enum):
    DROP_OFF = "DropOff"
    WASH = "Wash"
    CALIBRATION = "Calibration"
    CHARGING = "Charging"
    LOADING = "Loading"
    PICK_UP = "PickUp"


@dataclass(frozen=True)
class Zone:
    id: str
    kind: ZoneKind
    footprint: tuple[tuple[float, float], ...]
    capacity: int

    def contains(self, point: tuple[float, float]) -> bool:
        return point_in_convex(point, list(self.footprint))

    def centroid(self) -> tuple[float, float]:
        xs = [v[0] for v in self.footprint]
        ys = [v[1] for v in self.footprint]
        return sum(xs) / len(xs), sum(ys) / len(ys)


@dataclass(frozen=True)
class LaneEdge:
    id: str
    src: str
    dst: str
    length: float
    speed_cap: float


@dataclass(frozen=True)
class DepotMap:
    zones: tuple[Zone, ...]
    nodes: dict[str, tuple[float, float]]
    edges: tuple[LaneEdge, ...]
    estop_buttons: tuple[tuple[str, tuple[float, float]], ...]
    sensor_coverage: tuple[tuple[tuple[float, float], ...], ...]
    lane_half_width: float = 2.0

    def zone_by_id(self, zone_id: str) -> Zone:
        for z in self.zones:
            if z.id == zone_id:
                return z
        raise KeyError(zone_id)

    def zones_of_kind(self, kind: ZoneKind) -> list[Zone]:
        return [z for z in self.zones if z.kind == kind]

    def zone_slots(self, zone: Zone) -> list[str]:
        """Lane-graph nodes inside the zone footprint, in sorted order."""
        return sorted(n for n, p in self.nodes.items() if zone.contains(p))

    def out_edges(self, node: str) -> list[LaneEdge]:
        return [e for e in self.edges if e.src == node]

    def in_coverage(self, point: tuple[float, float]) -> bool:
        return any(point_in_convex(point, list(poly)) for poly in self.sensor_coverage)


def zone_at(depot: DepotMap, point: tuple[float, float]) -> Optional[Zone]:
    """Unique zone containing the point; boundary ties go to the smallest zone id."""
    hits = [z for z in depot.zones if z.contains(point)]
    if not hits:
        return None
    return min(hits, key=lambda z: z.id)


class ModeTag(str, Enum):
    NOMINAL_SPEED = "NominalSpeed"
    HIGH_SPEED = "HighSpeed"


@dataclass(frozen=True)
class OperatingMode:
    tag: ModeTag
    speed_cap: float

    def __post_init__(self):
        if self.tag == ModeTag.NOMINAL_SPEED:
            if abs(self.speed_cap - NS_CAP_MPS) > 1e-9:
                raise ValueError("NominalSpeed cap must be 4.4704 m/s (10 mph)")
        else:
            if not (NS_CAP_MPS < self.speed_cap <= HS_MAX_CAP_MPS + 1e-9):
                raise ValueError("HighSpeed cap must lie in (4.4704, 11.176] m/s")


class TrafficSituation(str, Enum):
    CONTROLLED = "Controlled"
    UNCONTROLLED = "Uncontrolled"


@dataclass(frozen=True)
class PedestrianSpec:
    count: int = 0
    speed: float = 1.4
    area: Optional[tuple[float, float, float, float]] = None
    scripted: tuple[dict, ...] = ()


@dataclass(frozen=True)
class VehicleSpec:
    id: str
    spawn_zone: Optional[str]
    mission: tuple[str, ...]
    spawn_pose: Optional[tuple[float, float, float]] = None
    start_tick: int = 0
    capabilities: frozenset[str] = REQUIRED_CAPABILITIES


@dataclass(frozen=True)
class Injection:
    hazard: str
    target: str
    from_tick: int
    to_tick: int
    params: dict = field(default_factory=dict)

    def active(self, tick: int) -> bool:
        return self.from_tick <= tick <= self.to_tick


@dataclass(frozen=True)
class ChannelConfig:
    base_delay_ticks: int = 1
    drop_probability: float = 0.0
    jitter_ticks: int = 0
    disconnect_windows: tuple[tuple[int, int, str], ...] = ()


# Mitigation switches; unmitigated hazard-suite variants flip exactly one of these.
DEFAULT_MITIGATIONS = {
    "watchdog": True,
    "speed_limiter": True,
    "aeb": True,
    "secondary_brake": True,
    "planner_avoidance": True,
    "estop_path": True,
}

SEC_SCENARIOS = ("NS/C", "HS/C", "HS/UC")
GOAL_IDS = ("SG1", "SG2", "SG3", "SG4", "SG5", "SG6")
HAZARD_IDS = ("H1", "H2", "H3", "H4", "H5", "H6", "H7", "H8")


@dataclass(frozen=True)
class ScenarioConfig:
    id: str
    map: DepotMap
    mode: OperatingMode
    traffic: TrafficSituation
    duration_s: float
    tick_s: float
    seed: int
    vehicles: tuple[VehicleSpec, ...]
    pedestrians: PedestrianSpec
    injections: tuple[Injection, ...]
    sec_table: dict[str, dict[str, tuple[str, str, str]]]
    channel: ChannelConfig = ChannelConfig()
    events: tuple[dict, ...] = ()
    mitigations: dict = field(default_factory=lambda: dict(DEFAULT_MITIGATIONS))
    obstacles: tuple[dict, ...] = ()
    drivers: dict = field(default_factory=dict)
    station_service_ticks: int = 20
    mission_deadline_s: Optional[float] = None

    @property
    def duration_ticks(self) -> int:
        return int(round(self.duration_s / self.tick_s))


# ---------------------------------------------------------------------------
# scenario document parsing / validation


def _need(doc: dict, key: str, path: str) -> Any:
    if key not in doc:
        raise ScenarioError(f"{path}.{key}" if path else key, "missing required key")
    return doc[key]


def _parse_map(doc: dict, path: str) -> DepotMap:
    zones = []
    for i, zdoc in enumerate(_need(doc, "zones", path)):
        zpath = f"{path}.zones[{i}]"
        try:
            kind = ZoneKind(_need(zdoc, "kind", zpath))
        except ValueError:
            raise ScenarioError(f"{zpath}.kind", f"unknown zone kind {zdoc.get('kind')!r}")
        footprint = [tuple(map(float, v)) for v in _need(zdoc, "footprint", zpath)]
        if len(footprint) < 3 or not is_convex(footprint):
            raise ScenarioError(f"{zpath}.footprint", "footprint must be a convex polygon with >= 3 vertices")
        capacity = int(_need(zdoc, "capacity", zpath))
        if capacity < 1:
            raise ScenarioError(f"{zpath}.capacity", "capacity must be a positive integer")
        zones.append(Zone(str(_need(zdoc, "id", zpath)), kind, tuple(footprint), capacity))

    ids = [z.id for z in zones]
    if len(set(ids)) != len(ids):
        raise ScenarioError(f"{path}.zones", "zone ids must be unique")
    for i in range(len(zones)):
        for j in range(i + 1, len(zones)):
            if convex_overlap(list(zones[i].footprint), list(zones[j].footprint)):
                raise ScenarioError(
                    f"{path}.zones", f"zones {zones[i].id!r} and {zones[j].id!r} overlap"
                )

    nodes = {str(k): (float(v[0]), float(v[1])) for k, v in _need(doc, "nodes", path).items()}
    edges = []
    for i, edoc in enumerate(_need(doc, "edges", path)):
        epath = f"{path}.edges[{i}]"
        src, dst = str(_need(edoc, "from", epath)), str(_need(edoc, "to", epath))
        for end, node in (("from", src), ("to", dst)):
            if node not in nodes:
                raise ScenarioError(f"{epath}.{end}", f"unknown node {node!r}")
        length = float(edoc.get("length", dist(nodes[src], nodes[dst])))
        if length <= 0:
            raise ScenarioError(f"{epath}.length", "edge length must be positive")
        cap = float(_need(edoc, "speed_cap", epath))
        if cap <= 0:
            raise ScenarioError(f"{epath}.speed_cap", "edge speed cap must be positive")
        edges.append(LaneEdge(str(edoc.get("id", f"{src}->{dst}")), src, dst, length, cap))

    coverage = []
    for i, poly in enumerate(doc.get("sensor_coverage", [])):
        cpath = f"{path}.sensor_coverage[{i}]"
        pts = [tuple(map(float, v)) for v in poly]
        if len(pts) < 3 or not is_convex(pts):
            raise ScenarioError(cpath, "coverage polygon must be convex with >= 3 vertices")
        coverage.append(tuple(pts))
    if not coverage:
        raise ScenarioError(f"{path}.sensor_coverage", "at least one coverage polygon required")

    buttons = []
    for i, bdoc in enumerate(doc.get("estop_buttons", [])):
        bpath = f"{path}.estop_buttons[{i}]"
        pos = tuple(map(float, _need(bdoc, "position", bpath)))
        buttons.append((str(_need(bdoc, "id", bpath)), pos))

    depot = DepotMap(
        zones=tuple(zones),
        nodes=nodes,
        edges=tuple(edges),
        estop_buttons=tuple(buttons),
        sensor_coverage=tuple(coverage),
        lane_half_width=float(doc.get("lane_half_width", 2.0)),
    )
    _validate_map(depot, path)
    return depot


def _validate_map(depot: DepotMap, path: str) -> None:
    for e in depot.edges:
        a, b = depot.nodes[e.src], depot.nodes[e.dst]
        mid = ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0)
        for label, pt in (("midpoint", mid), ("endpoint", a), ("endpoint", b)):
            if not depot.in_coverage(pt):
                raise ScenarioError(
                    f"{path}.edges", f"edge {e.id!r} {label} lies outside sensor coverage"
                )

    adjacency: dict[str, list[str]] = {n: [] for n in depot.nodes}
    for e in depot.edges:
        adjacency[e.src].append(e.dst)

    def reachable_from(starts: list[str]) -> set[str]:
        seen = set(starts)
        stack = list(starts)
        while stack:
            n = stack.pop()
            for m in adjacency[n]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return seen

    dropoffs = depot.zones_of_kind(ZoneKind.DROP_OFF)
    pickups = depot.zones_of_kind(ZoneKind.PICK_UP)
    if not dropoffs or not pickups:
        raise ScenarioError(f"{path}.zones", "map requires at least one DropOff and one PickUp zone")
    drop_slots = [s for z in dropoffs for s in depot.zone_slots(z)]
    pick_slots = {s for z in pickups for s in depot.zone_slots(z)}
    if not drop_slots:
        raise ScenarioError(f"{path}.zones", "DropOff zone has no lane-graph node inside it")
    if not pick_slots:
        raise ScenarioError(f"{path}.zones", "PickUp zone has no lane-graph node inside it")

    from_drop = reachable_from(drop_slots)
    for z in depot.zones:
        slots = depot.zone_slots(z)
        if not slots:
            raise ScenarioError(f"{path}.zones", f"zone {z.id!r} has no lane-graph node inside it")
        if z.kind != ZoneKind.DROP_OFF and not any(s in from_drop for s in slots):
            raise ScenarioError(
                f"{path}.edges", f"zone {z.id!r} is not reachable from DropOff"
            )
        if z.kind != ZoneKind.PICK_UP:
            can_reach = reachable_from(list(slots))
            if not can_reach & pick_slots:
                raise ScenarioError(
                    f"{path}.edges", f"zone {z.id!r} cannot reach PickUp"
                )


def _parse_sec_table(doc: dict, path: str) -> dict[str, dict[str, tuple[str, str, str]]]:
    table: dict[str, dict[str, tuple[str, str, str]]] = {}
    for goal, cells in doc.items():
        gpath = f"{path}.{goal}"
        if goal not in GOAL_IDS:
            raise ScenarioError(gpath, f"unknown safety goal {goal!r}")
        table[goal] = {}
        for scenario, sec in cells.items():
            spath = f"{gpath}.{scenario}"
            if scenario not in SEC_SCENARIOS:
                raise ScenarioError(spath, f"unknown scenario column {scenario!r}")
            s, e, c = (str(v) for v in sec)
            if s not in {"S0", "S1", "S2", "S3"}:
                raise ScenarioError(spath, f"bad severity class {s!r}")
            if e not in {"E0", "E1", "E2", "E3", "E4"}:
                raise ScenarioError(spath, f"bad exposure class {e!r}")
            if c not in {"C0", "C1", "C2", "C3"}:
                raise ScenarioError(spath, f"bad controllability class {c!r}")
            table[goal][scenario] = (s, e, c)
    return table


def load_scenario(document: str | dict) -> ScenarioConfig:
    """Parse and fully validate a scenario document (UTF-8 JSON text or dict)."""
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ScenarioError("$", f"not valid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise ScenarioError("$", "top level must be an object")

    tick = float(_need(doc, "tick_s", ""))
    if abs(tick - TICK_S) > 1e-12:
        raise ScenarioError("tick_s", "tick must equal 0.1")
    duration = float(_need(doc, "duration_s", ""))
    n_ticks = round(duration / tick)
    if duration <= 0 or n_ticks < 1 or abs(n_ticks * tick - duration) > 1e-9:
        raise ScenarioError("duration_s", "duration must be a positive multiple of the tick")

    depot = _parse_map(_need(doc, "map", ""), "map")

    mdoc = _need(doc, "mode", "")
    try:
        tag = ModeTag(_need(mdoc, "tag", "mode"))
    except ValueError:
        raise ScenarioError("mode.tag", f"unknown mode {mdoc.get('tag')!r}")
    default_cap = NS_CAP_MPS if tag == ModeTag.NOMINAL_SPEED else HS_DEFAULT_CAP_MPS
    try:
        mode = OperatingMode(tag, float(mdoc.get("speed_cap", default_cap)))
    except ValueError as exc:
        raise ScenarioError("mode.speed_cap", str(exc))

    try:
        traffic = TrafficSituation(_need(doc, "traffic", ""))
    except ValueError:
        raise ScenarioError("traffic", f"unknown traffic situation {doc.get('traffic')!r}")

    seed = int(_need(doc, "seed", ""))

    vehicles = []
    seen_vids = set()
    for i, vdoc in enumerate(_need(doc, "vehicles", "")):
        vpath = f"vehicles[{i}]"
        vid = str(_need(vdoc, "id", vpath))
        if vid in seen_vids:
            raise ScenarioError(f"{vpath}.id", f"duplicate vehicle id {vid!r}")
        seen_vids.add(vid)
        mission = tuple(str(m) for m in _need(vdoc, "mission", vpath))
        for j, kind in enumerate(mission):
            if kind not in {k.value for k in ZoneKind}:
                raise ScenarioError(f"{vpath}.mission[{j}]", f"unknown zone kind {kind!r}")
            if not depot.zones_of_kind(ZoneKind(kind)):
                raise ScenarioError(f"{vpath}.mission[{j}]", f"map has no zone of kind {kind!r}")
        if mission:
            if mission[0] != ZoneKind.DROP_OFF.value:
                raise ScenarioError(f"{vpath}.mission", "mission must start at DropOff")
            if mission[-1] != ZoneKind.PICK_UP.value:
                raise ScenarioError(f"{vpath}.mission", "mission must end at PickUp")
        spawn_zone = vdoc.get("spawn_zone")
        spawn_pose = vdoc.get("spawn_pose")
        if spawn_zone is None and spawn_pose is None:
            raise ScenarioError(vpath, "vehicle needs spawn_zone or spawn_pose")
        if spawn_zone is not None:
            try:
                depot.zone_by_id(str(spawn_zone))
            except KeyError:
                raise ScenarioError(f"{vpath}.spawn_zone", f"unknown zone {spawn_zone!r}")
        caps = vdoc.get("capabilities")
        vehicles.append(
            VehicleSpec(
                id=vid,
                spawn_zone=str(spawn_zone) if spawn_zone is not None else None,
                mission=mission,
                spawn_pose=tuple(map(float, spawn_pose)) if spawn_pose is not None else None,
                start_tick=int(vdoc.get("start_tick", 0)),
                capabilities=frozenset(caps) if caps is not None else REQUIRED_CAPABILITIES,
            )
        )

    pdoc = _need(doc, "pedestrians", "")
    scripted = tuple(pdoc.get("scripted", []))
    for i, sdoc in enumerate(scripted):
        spath = f"pedestrians.scripted[{i}]"
        for key in ("id", "start", "waypoints", "speed"):
            _need(sdoc, key, spath)
        if float(sdoc["speed"]) > PEDESTRIAN_MAX_SPEED + 1e-12:
            raise ScenarioError(f"{spath}.speed", "pedestrian speed must be <= 2.0 m/s")
    speed = float(pdoc.get("speed", 1.4))
    if speed > PEDESTRIAN_MAX_SPEED + 1e-12:
        raise ScenarioError("pedestrians.speed", "pedestrian speed must be <= 2.0 m/s")
    peds = PedestrianSpec(
        count=int(pdoc.get("count", 0)),
        speed=speed,
        area=tuple(map(float, pdoc["area"])) if pdoc.get("area") else None,
        scripted=scripted,
    )

    injections = []
    for i, idoc in enumerate(_need(doc, "injections", "")):
        ipath = f"injections[{i}]"
        hazard = str(_need(idoc, "hazard", ipath))
        if hazard not in HAZARD_IDS:
            raise ScenarioError(f"{ipath}.hazard", f"unknown hazard {hazard!r}")
        from_tick = int(_need(idoc, "from_tick", ipath))
        to_tick = int(_need(idoc, "to_tick", ipath))
        if not (0 <= from_tick <= to_tick <= n_ticks):
            raise ScenarioError(ipath, "injection window must lie within the scenario duration")
        target = str(idoc.get("target", "all"))
        if target not in {"all", "ix"} and target not in seen_vids:
            raise ScenarioError(f"{ipath}.target", f"unknown target {target!r}")
        injections.append(Injection(hazard, target, from_tick, to_tick, dict(idoc.get("params", {}))))

    sec_table = _parse_sec_table(_need(doc, "sec_table", ""), "sec_table")

    cdoc = doc.get("channel", {})
    channel = ChannelConfig(
        base_delay_ticks=int(cdoc.get("base_delay_ticks", 1)),
        drop_probability=float(cdoc.get("drop_probability", 0.0)),
        jitter_ticks=int(cdoc.get("jitter_ticks", 0)),
        disconnect_windows=tuple(
            (int(w[0]), int(w[1]), str(w[2])) for w in cdoc.get("disconnect_windows", [])
        ),
    )
    if not (0.0 <= channel.drop_probability <= 1.0):
        raise ScenarioError("channel.drop_probability", "must lie in [0, 1]")
    if channel.base_delay_ticks < 0 or channel.jitter_ticks < 0:
        raise ScenarioError("channel", "delay and jitter must be >= 0")

    mitigations = dict(DEFAULT_MITIGATIONS)
    for key, val in doc.get("mitigations", {}).items():
        if key not in DEFAULT_MITIGATIONS:
            raise ScenarioError(f"mitigations.{key}", "unknown mitigation switch")
        mitigations[key] = bool(val)

    events = []
    button_ids = {b[0] for b in depot.estop_buttons}
    for i, edoc in enumerate(doc.get("events", [])):
        epath = f"events[{i}]"
        tick_at = int(_need(edoc, "tick", epath))
        kind = str(_need(edoc, "kind", epath))
        if not (0 <= tick_at <= n_ticks):
            raise ScenarioError(f"{epath}.tick", "event tick outside scenario duration")
        if kind == "estop_button" and str(edoc.get("button")) not in button_ids:
            raise ScenarioError(f"{epath}.button", f"unknown e-stop button {edoc.get('button')!r}")
        events.append(dict(edoc))

    return ScenarioConfig(
        id=str(doc.get("id", "scenario")),
        map=depot,
        mode=mode,
        traffic=traffic,
        duration_s=duration,
        tick_s=tick,
        seed=seed,
        vehicles=tuple(vehicles),
        pedestrians=peds,
        injections=tuple(injections),
        sec_table=sec_table,
        channel=channel,
        events=tuple(events),
        mitigations=mitigations,
        obstacles=tuple(dict(o) for o in doc.get("obstacles", [])),
        drivers=dict(doc.get("drivers", {})),
        station_service_ticks=int(doc.get("station_service_ticks", 20)),
        mission_deadline_s=(
            float(doc["mission_deadline_s"]) if doc.get("mission_deadline_s") is not None else None
        ),
    )


def serialize_scenario(cfg: ScenarioConfig) -> dict:
    """Inverse of load_scenario: emits a document that reloads to an equal config."""
    depot = cfg.map
    doc: dict[str, Any] = {
        "id": cfg.id,
        "map": {
            "zones": [
                {
                    "id": z.id,
                    "kind": z.kind.value,
                    "footprint": [list(v) for v in z.footprint],
                    "capacity": z.capacity,
                }
                for z in depot.zones
            ],
            "nodes": {n: list(p) for n, p in depot.nodes.items()},
            "edges": [
                {"id": e.id, "from": e.src, "to": e.dst, "length": e.length, "speed_cap": e.speed_cap}
                for e in depot.edges
            ],
            "estop_buttons": [{"id": b, "position": list(p)} for b, p in depot.estop_buttons],
            "sensor_coverage": [[list(v) for v in poly] for poly in depot.sensor_coverage],
            "lane_half_width": depot.lane_half_width,
        },
        "mode": {"tag": cfg.mode.tag.value, "speed_cap": cfg.mode.speed_cap},
        "traffic": cfg.traffic.value,
        "duration_s": cfg.duration_s,
        "tick_s": cfg.tick_s,
        "seed": cfg.seed,
        "vehicles": [],
        "pedestrians": {
            "count": cfg.pedestrians.count,
            "speed": cfg.pedestrians.speed,
            **({"area": list(cfg.pedestrians.area)} if cfg.pedestrians.area else {}),
            **({"scripted": [dict(s) for s in cfg.pedestrians.scripted]} if cfg.pedestrians.scripted else {}),
        },
        "injections": [
            {
                "hazard": inj.hazard,
                "target": inj.target,
                "from_tick": inj.from_tick,
                "to_tick": inj.to_tick,
                **({"params": inj.params} if inj.params else {}),
            }
            for inj in cfg.injections
        ],
        "sec_table": {g: {s: list(sec) for s, sec in cells.items()} for g, cells in cfg.sec_table.items()},
        "channel": {
            "base_delay_ticks": cfg.channel.base_delay_ticks,
            "drop_probability": cfg.channel.drop_probability,
            "jitter_ticks": cfg.channel.jitter_ticks,
            "disconnect_windows": [list(w) for w in cfg.channel.disconnect_windows],
        },
        "mitigations": dict(cfg.mitigations),
        "station_service_ticks": cfg.station_service_ticks,
    }
    for v in cfg.vehicles:
        vdoc: dict[str, Any] = {"id": v.id, "mission": list(v.mission)}
        if v.spawn_zone is not None:
            vdoc["spawn_zone"] = v.spawn_zone
        if v.spawn_pose is not None:
            vdoc["spawn_pose"] = list(v.spawn_pose)
        if v.start_tick:
            vdoc["start_tick"] = v.start_tick
        if v.capabilities != REQUIRED_CAPABILITIES:
            vdoc["capabilities"] = sorted(v.capabilities)
        doc["vehicles"].append(vdoc)
    if cfg.events:
        doc["events"] = [dict(e) for e in cfg.events]
    if cfg.obstacles:
        doc["obstacles"] = [dict(o) for o in cfg.obstacles]
    if cfg.drivers:
        doc["drivers"] = dict(cfg.drivers)
    if cfg.mission_deadline_s is not None:
        doc["mission_deadline_s"] = cfg.mission_deadline_s
    return doc
