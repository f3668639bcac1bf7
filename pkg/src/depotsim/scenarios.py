"""Bundled depot map and scenario documents.

The default map mirrors the reference depot layout: a drop-off row, wash /
calibration / charging bays along the top, a loading dock, and a pick-up row,
all connected by a one-way rectangular lane loop. Hazard-pair scenarios come
in mitigated/unmitigated variants used by the batch suite; the scripted
pedestrian timings are calibrated against the deterministic vehicle profile.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Optional

from .hara import default_sec_table_doc
from .world import HS_MAX_CAP_MPS, ScenarioConfig, load_scenario

RING_SPEED_CAP = 12.0
SPUR_SPEED_CAP = 5.0

# walker box in the courtyard between the loop lanes: far enough that neither
# the detection gate nor corridor-hold predictions can reach a confined walker
COURTYARD = (30.0, 27.5, 70.0, 32.5)


def default_map_doc() -> dict:
    zones = [
        {"id": "dropoff", "kind": "DropOff",
         "footprint": [[2, 2], [18, 2], [18, 14], [2, 14]], "capacity": 3},
        {"id": "wash", "kind": "Wash",
         "footprint": [[22, 46], [38, 46], [38, 58], [22, 58]], "capacity": 1},
        {"id": "calibration", "kind": "Calibration",
         "footprint": [[42, 46], [58, 46], [58, 58], [42, 58]], "capacity": 1},
        {"id": "charging", "kind": "Charging",
         "footprint": [[62, 46], [78, 46], [78, 58], [62, 58]], "capacity": 1},
        {"id": "loading", "kind": "Loading",
         "footprint": [[42, 2], [58, 2], [58, 14], [42, 14]], "capacity": 1},
        {"id": "pickup", "kind": "PickUp",
         "footprint": [[82, 2], [98, 2], [98, 14], [82, 14]], "capacity": 3},
    ]
    nodes = {
        "D1": [4, 8], "D2": [10, 8], "D3": [16, 8],
        "R1": [10, 20], "R2": [30, 20], "R3": [50, 20], "R4": [70, 20], "R5": [90, 20],
        "R6": [90, 40], "R7": [70, 40], "R8": [50, 40], "R9": [30, 40], "R10": [10, 40],
        "W": [30, 52], "C": [50, 52], "G": [70, 52], "L": [50, 8],
        "P1": [84, 8], "P2": [90, 8], "P3": [96, 8],
    }
    ring = ["R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8", "R9", "R10"]
    edges = [
        {"from": a, "to": b, "speed_cap": RING_SPEED_CAP}
        for a, b in zip(ring, ring[1:] + ring[:1])
    ]
    spurs = [
        ("D1", "R1"), ("D2", "R1"), ("D3", "R1"),
        ("R9", "W"), ("W", "R9"),
        ("R8", "C"), ("C", "R8"),
        ("R7", "G"), ("G", "R7"),
        ("R3", "L"), ("L", "R3"),
        ("R5", "P1"), ("R5", "P2"), ("R5", "P3"),
    ]
    edges += [{"from": a, "to": b, "speed_cap": SPUR_SPEED_CAP} for a, b in spurs]
    return {
        "zones": zones,
        "nodes": nodes,
        "edges": edges,
        "estop_buttons": [
            {"id": "B1", "position": [50, 26]},
            {"id": "B2", "position": [14, 16]},
        ],
        "sensor_coverage": [[[0, 0], [100, 0], [100, 60], [0, 60]]],
        "lane_half_width": 2.0,
    }


def _base_doc(scenario_id: str, *, mode: str = "NominalSpeed", cap: Optional[float] = None,
              traffic: str = "Controlled", duration_s: float = 30.0, seed: int = 7) -> dict:
    mdoc: dict = {"tag": mode}
    if cap is not None:
        mdoc["speed_cap"] = cap
    return {
        "id": scenario_id,
        "map": default_map_doc(),
        "mode": mdoc,
        "traffic": traffic,
        "duration_s": duration_s,
        "tick_s": 0.1,
        "seed": seed,
        "vehicles": [],
        "pedestrians": {"count": 0},
        "injections": [],
        "sec_table": default_sec_table_doc(),
    }


def _vehicle(vid: str, mission: list[str], **kw) -> dict:
    return {"id": vid, "spawn_zone": "dropoff", "mission": mission, **kw}


def _standing_ped(pid: str, x: float, lane_y_offset: float = 0.3, start_y: float = 27.0,
                  speed: float = 1.2, start_tick: int = 0) -> dict:
    """Walks from the courtyard edge into the eastbound lane and stands there."""
    return {
        "id": pid,
        "start": [x, start_y],
        "waypoints": [[x, 20.0 + lane_y_offset]],
        "speed": speed,
        "start_tick": start_tick,
    }


def ns_controlled() -> dict:
    doc = _base_doc("ns_controlled", duration_s=90.0, seed=7)
    doc["vehicles"] = [
        _vehicle("V1", ["DropOff", "Loading", "PickUp"]),
        _vehicle("V2", ["DropOff", "Wash", "PickUp"]),
    ]
    doc["pedestrians"] = {"count": 2, "speed": 1.4, "area": list(COURTYARD)}
    doc["mission_deadline_s"] = 85.0
    return doc


def hs_controlled() -> dict:
    doc = _base_doc("hs_controlled", mode="HighSpeed", duration_s=60.0, seed=11)
    doc["vehicles"] = [_vehicle("V1", ["DropOff", "Loading", "PickUp"])]
    doc["mission_deadline_s"] = 55.0
    return doc


def hs_comm_loss_25() -> dict:
    doc = _base_doc("hs_comm_loss_25", mode="HighSpeed", cap=HS_MAX_CAP_MPS, duration_s=25.0, seed=13)
    doc["vehicles"] = [_vehicle("V1", ["DropOff", "PickUp"])]
    doc["injections"] = [{"hazard": "H4", "target": "V1", "from_tick": 50, "to_tick": 250}]
    return doc


def estop_radius() -> dict:
    doc = _base_doc("estop_radius", duration_s=10.0, seed=3)
    doc["map"]["estop_buttons"] = [{"id": "BX", "position": [50, 20]}]
    doc["vehicles"] = [
        {"id": "V1", "spawn_pose": [59.9, 20.0, 0.0], "mission": []},
        {"id": "V2", "spawn_pose": [39.9, 20.0, 0.0], "mission": []},
    ]
    doc["events"] = [{"tick": 10, "kind": "estop_button", "button": "BX"}]
    return doc


def resume_fixture() -> dict:
    doc = _base_doc("resume_fixture", duration_s=30.0, seed=21)
    doc["vehicles"] = [
        _vehicle("V1", ["DropOff", "Loading", "PickUp"]),
        _vehicle("V2", ["DropOff", "PickUp"]),
    ]
    doc["pedestrians"] = {"count": 3, "speed": 1.4, "area": list(COURTYARD)}
    doc["channel"] = {"base_delay_ticks": 1, "drop_probability": 0.05, "jitter_ticks": 2}
    return doc


# -- hazard pairs ----------------------------------------------------------------
# Scripted timings below are calibrated against the deterministic speed profile
# of a DropOff->PickUp leg (see tests/test_scenarios.py for the assertions).

def h1_mitigated() -> dict:
    doc = _base_doc("h1_mitigated", traffic="Uncontrolled", duration_s=30.0, seed=7)
    doc["vehicles"] = [_vehicle("V1", ["DropOff", "PickUp"])]
    doc["injections"] = [{"hazard": "H1", "target": "V1", "from_tick": 0, "to_tick": 300}]
    doc["pedestrians"] = {"count": 0, "scripted": [_standing_ped("PX", 60.0)]}
    return doc


def h1_unmitigated() -> dict:
    doc = h1_mitigated()
    doc["id"] = "h1_unmitigated"
    doc["mitigations"] = {"planner_avoidance": False}
    return doc


def h2_mitigated() -> dict:
    doc = _base_doc("h2_mitigated", traffic="Uncontrolled", duration_s=30.0, seed=7)
    doc["vehicles"] = [_vehicle("V1", ["DropOff", "PickUp"])]
    doc["injections"] = [
        {"hazard": "H2", "target": "V1", "from_tick": 0, "to_tick": 300,
         "params": {"channels": "primary"}}
    ]
    doc["pedestrians"] = {"count": 0, "scripted": [_standing_ped("PX", 70.0)]}
    doc["mitigations"] = {"planner_avoidance": False}
    return doc


def h2_unmitigated() -> dict:
    doc = h2_mitigated()
    doc["id"] = "h2_unmitigated"
    doc["injections"] = [
        {"hazard": "H2", "target": "V1", "from_tick": 80, "to_tick": 300,
         "params": {"channels": "both"}}
    ]
    return doc


def h3_mitigated() -> dict:
    doc = _base_doc("h3_mitigated", mode="HighSpeed", duration_s=30.0, seed=7)
    doc["vehicles"] = [_vehicle("V1", ["DropOff", "PickUp"])]
    doc["injections"] = [
        {"hazard": "H3", "target": "V1", "from_tick": 50, "to_tick": 250,
         "params": {"inflate": 2.0, "disable_limiter": False}}
    ]
    return doc


def h3_unmitigated() -> dict:
    doc = h3_mitigated()
    doc["id"] = "h3_unmitigated"
    doc["injections"] = [
        {"hazard": "H3", "target": "V1", "from_tick": 50, "to_tick": 250,
         "params": {"inflate": 2.0, "disable_limiter": True}}
    ]
    return doc


def h4_comm_loss() -> dict:
    doc = _base_doc("h4_comm_loss", duration_s=30.0, seed=7)
    doc["vehicles"] = [_vehicle("V1", ["DropOff", "PickUp"])]
    doc["injections"] = [{"hazard": "H4", "target": "V1", "from_tick": 80, "to_tick": 300}]
    doc["pedestrians"] = {"count": 2, "speed": 1.4, "area": list(COURTYARD)}
    return doc


def h4_unmitigated() -> dict:
    doc = _base_doc("h4_unmitigated", traffic="Uncontrolled", duration_s=30.0, seed=7)
    doc["vehicles"] = [_vehicle("V1", ["DropOff", "PickUp"])]
    doc["injections"] = [{"hazard": "H4", "target": "V1", "from_tick": 80, "to_tick": 300}]
    doc["pedestrians"] = {"count": 0, "scripted": [_standing_ped("PX", 60.0, start_tick=60)]}
    doc["mitigations"] = {"watchdog": False}
    return doc


def h5_mitigated() -> dict:
    doc = _base_doc("h5_mitigated", duration_s=30.0, seed=7)
    doc["vehicles"] = [_vehicle("V1", ["DropOff", "PickUp"])]
    doc["injections"] = [
        {"hazard": "H5", "target": "V1", "from_tick": 60, "to_tick": 250,
         "params": {"jitter_ticks": 40, "drop_probability": 0.9}}
    ]
    doc["pedestrians"] = {"count": 2, "speed": 1.4, "area": list(COURTYARD)}
    return doc


def h5_unmitigated() -> dict:
    doc = _base_doc("h5_unmitigated", traffic="Uncontrolled", duration_s=30.0, seed=7)
    doc["vehicles"] = [_vehicle("V1", ["DropOff", "PickUp"])]
    doc["injections"] = [
        {"hazard": "H5", "target": "V1", "from_tick": 60, "to_tick": 250,
         "params": {"jitter_ticks": 40, "drop_probability": 0.9}}
    ]
    doc["pedestrians"] = {"count": 0, "scripted": [_standing_ped("PX", 60.0, start_tick=120)]}
    doc["mitigations"] = {"watchdog": False}
    return doc


def h6_mitigated() -> dict:
    doc = _base_doc("h6_mitigated", traffic="Uncontrolled", duration_s=30.0, seed=7)
    doc["vehicles"] = [_vehicle("V1", ["DropOff", "PickUp"])]
    doc["injections"] = [{"hazard": "H6", "target": "ix", "from_tick": 0, "to_tick": 300}]
    doc["pedestrians"] = {"count": 0, "scripted": [_standing_ped("PX", 60.0)]}
    return doc


def h6_unmitigated() -> dict:
    doc = h6_mitigated()
    doc["id"] = "h6_unmitigated"
    doc["mitigations"] = {"aeb": False}
    return doc


# the corrupted trajectory drags the vehicle 2.7 m off the planned lane, right
# over a pedestrian standing outside the planner's swept corridor (so the
# healthy avoidance layer rightly sees no conflict on the *planned* path)
H7_PATH_OFFSET_M = 2.7


def h7_mitigated() -> dict:
    doc = _base_doc("h7_mitigated", traffic="Uncontrolled", duration_s=30.0, seed=7)
    doc["vehicles"] = [_vehicle("V1", ["DropOff", "PickUp"])]
    doc["injections"] = [
        {"hazard": "H7", "target": "ix", "from_tick": 0, "to_tick": 300,
         "params": {"velocity_scale": -1.0, "waypoint_offset_m": H7_PATH_OFFSET_M}}
    ]
    doc["pedestrians"] = {
        "count": 0,
        "scripted": [
            {
                "id": "PX",
                "start": [60.0, 27.0],
                "waypoints": [[60.0, 20.0 + H7_PATH_OFFSET_M]],
                "speed": 1.2,
                "start_tick": 0,
            }
        ],
    }
    return doc


def h7_unmitigated() -> dict:
    doc = h7_mitigated()
    doc["id"] = "h7_unmitigated"
    doc["mitigations"] = {"aeb": False}
    return doc


def h8_mitigated() -> dict:
    doc = _base_doc("h8_mitigated", traffic="Uncontrolled", duration_s=30.0, seed=7)
    doc["vehicles"] = [_vehicle("V1", ["DropOff", "PickUp"])]
    doc["injections"] = [{"hazard": "H6", "target": "ix", "from_tick": 0, "to_tick": 300}]
    doc["pedestrians"] = {"count": 0, "scripted": [_standing_ped("PX", 60.0)]}
    doc["mitigations"] = {"aeb": False}
    doc["events"] = [{"tick": 100, "kind": "estop", "target": "all"}]
    return doc


def h8_unmitigated() -> dict:
    doc = h8_mitigated()
    doc["id"] = "h8_unmitigated"
    doc["injections"] = list(doc["injections"]) + [
        {"hazard": "H8", "target": "all", "from_tick": 90, "to_tick": 300}
    ]
    return doc


BUILDERS = {
    "ns_controlled": ns_controlled,
    "hs_controlled": hs_controlled,
    "hs_comm_loss_25": hs_comm_loss_25,
    "estop_radius": estop_radius,
    "resume_fixture": resume_fixture,
    "h1_mitigated": h1_mitigated,
    "h1_unmitigated": h1_unmitigated,
    "h2_mitigated": h2_mitigated,
    "h2_unmitigated": h2_unmitigated,
    "h3_mitigated": h3_mitigated,
    "h3_unmitigated": h3_unmitigated,
    "h4_comm_loss": h4_comm_loss,
    "h4_unmitigated": h4_unmitigated,
    "h5_mitigated": h5_mitigated,
    "h5_unmitigated": h5_unmitigated,
    "h6_mitigated": h6_mitigated,
    "h6_unmitigated": h6_unmitigated,
    "h7_mitigated": h7_mitigated,
    "h7_unmitigated": h7_unmitigated,
    "h8_mitigated": h8_mitigated,
    "h8_unmitigated": h8_unmitigated,
}

HAZARD_PAIRS = {
    "H1": ("h1_mitigated", "h1_unmitigated"),
    "H2": ("h2_mitigated", "h2_unmitigated"),
    "H3": ("h3_mitigated", "h3_unmitigated"),
    "H4": ("h4_comm_loss", "h4_unmitigated"),
    "H5": ("h5_mitigated", "h5_unmitigated"),
    "H6": ("h6_mitigated", "h6_unmitigated"),
    "H7": ("h7_mitigated", "h7_unmitigated"),
    "H8": ("h8_mitigated", "h8_unmitigated"),
}


def scenario_doc(name: str, seed: Optional[int] = None) -> dict:
    try:
        text = resources.files("depotsim.data").joinpath(f"scenario_{name}.json").read_text("utf-8")
        doc = json.loads(text)
    except FileNotFoundError:
        doc = BUILDERS[name]()
    if seed is not None:
        doc["seed"] = seed
    return doc


def bundled_scenario(name: str, seed: Optional[int] = None) -> ScenarioConfig:
    return load_scenario(scenario_doc(name, seed))


def resolve_scenario(path_or_name: str, seed: Optional[int] = None,
                     duration: Optional[float] = None) -> ScenarioConfig:
    """CLI entry: a path to a scenario file, or a bundled scenario name."""
    p = Path(path_or_name)
    if p.exists():
        doc = json.loads(p.read_text(encoding="utf-8"))
    else:
        name = p.stem if p.suffix == ".json" else path_or_name
        if name not in BUILDERS:
            raise FileNotFoundError(f"no scenario file or bundled scenario named {path_or_name!r}")
        doc = scenario_doc(name)
    if seed is not None:
        doc["seed"] = int(seed)
    if duration is not None:
        doc["duration_s"] = float(duration)
    return load_scenario(doc)


def write_bundled(directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name, builder in sorted(BUILDERS.items()):
        path = directory / f"scenario_{name}.json"
        path.write_text(json.dumps(builder(), indent=1) + "\n", encoding="utf-8")
        out.append(path)
    return out
