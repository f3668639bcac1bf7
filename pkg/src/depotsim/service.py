"""Real-time dashboard/driver service.

The simulation runs in a background thread at one tick per 100 ms wall clock;
if a tick overruns, the clock slips (ticks are never skipped) and the slip is
logged. Endpoints talk to the loop only through two queues: inbound commands
are drained at the next tick boundary, outbound snapshot summaries are
published once per tick. Replaying the inbound command log against a headless
run therefore reproduces the same trace hash.
"""

from __future__ import annotations

import asyncio
import json
import logging
import threading
import time
from queue import Empty, Queue
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .simulation import Simulation
from .world import ScenarioConfig

log = logging.getLogger("depotsim.service")

COMMAND_KINDS = {"estop", "estop_release", "hazard_event", "hazard_clear", "pause", "resume"}


def snapshot_summary(sim: Simulation, alerts: list[dict]) -> dict:
    vehicles = []
    for vid in sorted(sim.vehicles):
        v = sim.vehicles[vid]
        ps = sim.infra.planner.plans.get(vid)
        path = []
        if ps is not None and ps.leg_coords:
            path = [[round(x, 2), round(y, 2)] for x, y in ps.leg_coords]
        vehicles.append(
            {
                "id": vid,
                "x": round(v.pose.x, 3),
                "y": round(v.pose.y, 3),
                "heading": round(v.pose.heading, 4),
                "speed": round(v.speed, 3),
                "mode": v.mode.value,
                "warnings": list(v.warnings),
                "planned_path": path,
            }
        )
    return {
        "tick": sim.tick,
        "vehicles": vehicles,
        "pedestrians": [
            {"id": p.id, "x": round(p.x, 3), "y": round(p.y, 3)} for p in sim.peds
        ],
        "alerts": alerts,
        "sensor_health": not sim.injections.ix_blind(sim.tick),
    }


class SimulationService:
    def __init__(self, scenario: ScenarioConfig):
        self.scenario = scenario
        self.sim = Simulation(scenario)
        self.commands: Queue = Queue()
        self.snapshots: Queue = Queue()
        self.command_log: list[dict] = []
        self.paused = False
        self.done = threading.Event()
        self.thread: Optional[threading.Thread] = None
        self.slips = 0

    def start(self) -> None:
        self.thread = threading.Thread(target=self._loop, name="simloop", daemon=True)
        self.thread.start()

    def submit(self, command: dict) -> dict:
        kind = command.get("kind")
        if kind not in COMMAND_KINDS | {"checkin", "checkout"}:
            return {"accepted": False, "reason": f"unknown command kind {kind!r}"}
        self.commands.put(command)
        return {"accepted": True}

    def _loop(self) -> None:
        tick_s = self.scenario.tick_s
        next_deadline = time.monotonic() + tick_s
        while self.sim.tick < self.sim.duration:
            # drain inbound commands at the tick boundary
            while True:
                try:
                    cmd = self.commands.get_nowait()
                except Empty:
                    break
                kind = cmd.get("kind")
                if kind == "pause":
                    self.paused = True
                    continue
                if kind == "resume":
                    self.paused = False
                    continue
                at = self.sim.inject_command(cmd)
                self.command_log.append({**cmd, "tick": at})
            if not self.paused:
                alerts = list(self.sim.pending_alerts)
                self.sim.pending_alerts.clear()
                self.sim.step()
                self.snapshots.put(snapshot_summary(self.sim, alerts))
            now = time.monotonic()
            next_deadline += tick_s
            if now > next_deadline:
                # overran the tick budget: slip the clock, never skip ticks
                self.slips += 1
                log.warning("tick overrun at %d (slip %d)", self.sim.tick, self.slips)
                next_deadline = now + tick_s
            else:
                time.sleep(next_deadline - now)
        self.done.set()


def build_app(service: SimulationService) -> FastAPI:
    app = FastAPI(title="depotsim service")

    @app.get("/health")
    def health():
        return {
            "tick": service.sim.tick,
            "duration": service.sim.duration,
            "paused": service.paused,
            "done": service.done.is_set(),
            "slips": service.slips,
        }

    @app.get("/map")
    def depot_map():
        depot = service.scenario.map
        return {
            "zones": [
                {"id": z.id, "kind": z.kind.value, "footprint": [list(v) for v in z.footprint]}
                for z in depot.zones
            ],
            "edges": [
                {"from": list(depot.nodes[e.src]), "to": list(depot.nodes[e.dst])}
                for e in depot.edges
            ],
            "estop_buttons": [{"id": b, "position": list(p)} for b, p in depot.estop_buttons],
            "sensor_coverage": [[list(v) for v in poly] for poly in depot.sensor_coverage],
        }

    @app.get("/result")
    def result():
        done = service.done.is_set()
        return {
            "done": done,
            "tick": service.sim.tick,
            "trace_hash": service.sim.trace.terminal_hash if done else None,
            "scenario_id": service.scenario.id,
            "seed": service.scenario.seed,
        }

    @app.post("/estop")
    async def estop(body: dict):
        command = {"kind": "estop", "target": body.get("target", "all")}
        result = service.submit(command)
        return JSONResponse(result, status_code=200 if result["accepted"] else 400)

    @app.post("/release")
    async def release(body: dict):
        command = {"kind": "estop_release", "target": body.get("target", "all")}
        result = service.submit(command)
        return JSONResponse(result, status_code=200 if result["accepted"] else 400)

    def _driver_action(kind: str, body: dict):
        for key in ("driver", "token", "vehicle"):
            if key not in body:
                return JSONResponse(
                    {"accepted": False, "reason": f"missing field {key!r}"}, status_code=400
                )
        token_ok = service.scenario.drivers.get(str(body["driver"])) == str(body["token"])
        if not token_ok:
            return JSONResponse(
                {"accepted": False, "reason": "invalid credentials"}, status_code=403
            )
        command = {
            "kind": kind,
            "driver": str(body["driver"]),
            "token": str(body["token"]),
            "vehicle": str(body["vehicle"]),
        }
        service.submit(command)
        service.command_log.append(dict(command))
        return {"accepted": True}

    @app.post("/checkin")
    async def checkin(body: dict):
        return _driver_action("checkin", body)

    @app.post("/checkout")
    async def checkout(body: dict):
        return _driver_action("checkout", body)

    @app.get("/command-log")
    def command_log():
        return {"commands": service.command_log}

    @app.websocket("/ws")
    async def ws(websocket: WebSocket):
        await websocket.accept()

        async def pump_snapshots():
            loop = asyncio.get_event_loop()
            while True:
                snap = await loop.run_in_executor(None, service.snapshots.get)
                await websocket.send_text(json.dumps(snap, separators=(",", ":")))

        async def pump_commands():
            while True:
                text = await websocket.receive_text()
                try:
                    command = json.loads(text)
                except json.JSONDecodeError:
                    await websocket.send_text(json.dumps({"error": "malformed command"}))
                    continue
                result = service.submit(command)
                if not result["accepted"]:
                    await websocket.send_text(json.dumps({"error": result["reason"]}))

        sender = asyncio.create_task(pump_snapshots())
        receiver = asyncio.create_task(pump_commands())
        try:
            await asyncio.wait({sender, receiver}, return_when=asyncio.FIRST_COMPLETED)
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            receiver.cancel()

    return app


def serve(scenario: ScenarioConfig, host: str = "127.0.0.1", port: int = 8700) -> None:
    import uvicorn

    service = SimulationService(scenario)
    service.start()
    app = build_app(service)
    uvicorn.run(app, host=host, port=port, log_level="warning")
