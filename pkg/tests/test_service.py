import json
import time

import pytest
from fastapi.testclient import TestClient

from depotsim.scenarios import scenario_doc
from depotsim.service import SimulationService, build_app, snapshot_summary
from depotsim.simulation import Simulation
from depotsim.world import load_scenario


def make_service(duration_s=6.0, drivers=None, events=None):
    doc = scenario_doc("ns_controlled")
    doc["duration_s"] = duration_s
    if drivers:
        doc["drivers"] = drivers
    if events:
        doc["events"] = events
    return SimulationService(load_scenario(json.dumps(doc)))


@pytest.fixture
def live():
    service = make_service(drivers={"dana": "tok-1"})
    service.start()
    client = TestClient(build_app(service))
    yield service, client
    service.done.set()


class TestRest:
    def test_health(self, live):
        service, client = live
        r = client.get("/health")
        assert r.status_code == 200
        body = r.json()
        assert {"tick", "duration", "paused", "done", "slips"} <= set(body)

    def test_estop_and_release_roundtrip(self, live):
        service, client = live
        r = client.post("/estop", json={"target": "all"})
        assert r.status_code == 200 and r.json()["accepted"]
        deadline = time.monotonic() + 5
        while time.monotonic() < deadline:
            if all(v.mode.value == "EstopStop" for v in service.sim.vehicles.values()):
                break
            time.sleep(0.05)
        assert all(v.mode.value == "EstopStop" for v in service.sim.vehicles.values())
        r = client.post("/release", json={"target": "all"})
        assert r.status_code == 200

    def test_checkin_valid_token(self, live):
        service, client = live
        r = client.post(
            "/checkin", json={"driver": "dana", "token": "tok-1", "vehicle": "V1"}
        )
        assert r.status_code == 200 and r.json()["accepted"]

    def test_checkout_invalid_token_rejected(self, live):
        service, client = live
        r = client.post(
            "/checkout", json={"driver": "dana", "token": "nope", "vehicle": "V1"}
        )
        assert r.status_code == 403
        assert not r.json()["accepted"]

    def test_malformed_command_rejected(self, live):
        service, client = live
        result = service.submit({"kind": "frobnicate"})
        assert not result["accepted"]


class TestWebSocket:
    def test_snapshot_stream_shape(self, live):
        service, client = live
        with client.websocket_connect("/ws") as ws:
            snap = json.loads(ws.receive_text())
            assert {"tick", "vehicles", "pedestrians", "alerts", "sensor_health"} <= set(snap)
            assert isinstance(snap["vehicles"], list)
            if snap["vehicles"]:
                v = snap["vehicles"][0]
                assert {"id", "x", "y", "heading", "speed", "mode", "planned_path"} <= set(v)

    def test_ws_command_applies(self, live):
        service, client = live
        with client.websocket_connect("/ws") as ws:
            ws.receive_text()
            ws.send_text(json.dumps({"kind": "estop", "target": "all"}))
            deadline = time.monotonic() + 5
            stopped = False
            while time.monotonic() < deadline and not stopped:
                snap = json.loads(ws.receive_text())
                stopped = snap["vehicles"] and all(
                    v["mode"] == "EstopStop" for v in snap["vehicles"]
                )
            assert stopped


class TestCommandLogReplay:
    def test_command_log_replays_to_same_hash(self):
        # live service run with an operator e-stop
        service = make_service(duration_s=5.0)
        service.start()
        time.sleep(1.0)
        service.submit({"kind": "estop", "target": "all"})
        service.done.wait(timeout=30)
        live_hash = service.sim.trace.terminal_hash
        commands = service.command_log
        assert commands, "command was logged with its applied tick"

        # headless replay: same scenario, commands as scheduled events
        doc = scenario_doc("ns_controlled")
        doc["duration_s"] = 5.0
        doc["events"] = commands
        sim = Simulation(load_scenario(json.dumps(doc)))
        sim.run()
        assert sim.trace.terminal_hash == live_hash


def test_snapshot_summary_fields():
    doc = scenario_doc("ns_controlled")
    sim = Simulation(load_scenario(json.dumps(doc)))
    sim.run(until=30)
    snap = snapshot_summary(sim, alerts=[])
    assert snap["tick"] == 30
    assert len(snap["vehicles"]) == 2
    assert snap["sensor_health"] is True
