// End-to-end acceptance against a live backend: snapshot cadence, global
// e-stop round trip through the UI layer, and headless command-log replay.

import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { DashboardClient, SocketLike } from "../src/client.js";
import { isStopStyled, Snapshot } from "../src/protocol.js";
import { applySnapshot, initialState, issueEstop, ViewState } from "../src/state.js";

const PORT = 8731;
const BASE = `http://127.0.0.1:${PORT}`;
const DURATION_S = 8.0;

let backend: ChildProcess;

function nodeSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const wrapper: SocketLike = {
    send: (d) => ws.send(d),
    close: () => ws.close(),
    onmessage: null,
    onclose: null,
    onopen: null,
    get readyState() {
      return ws.readyState;
    },
  };
  ws.on("message", (d) => wrapper.onmessage?.({ data: d.toString() }));
  ws.on("close", () => wrapper.onclose?.());
  ws.on("open", () => wrapper.onopen?.());
  return wrapper;
}

async function waitFor<T>(
  fn: () => T | null | undefined | Promise<T | null | undefined>,
  timeoutMs: number,
  what: string,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const v = await fn();
    if (v !== null && v !== undefined && v !== false) return v as T;
    if (Date.now() > deadline) throw new Error(`timeout waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 50));
  }
}

beforeAll(async () => {
  backend = spawn(
    "python3",
    ["-m", "depotsim.cli", "serve", "ns_controlled",
     "--bind", `127.0.0.1:${PORT}`, "--duration", String(DURATION_S)],
    { stdio: ["ignore", "pipe", "pipe"], cwd: ".." },
  );
  backend.stderr?.on("data", () => {});
  const deadline = Date.now() + 20000;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/health`);
      if (res.ok) break;
    } catch {
      // backend not up yet
    }
    if (Date.now() > deadline) throw new Error("backend did not come up");
    await new Promise((r) => setTimeout(r, 150));
  }
}, 30000);

afterAll(() => {
  backend?.kill("SIGKILL");
});

describe("live dashboard loop", () => {
  it("streams snapshots at 10 Hz within 20%, acknowledges a global e-stop "
     + "within 2 snapshots, and the command log replays to the same hash", async () => {
    const snaps: { snap: Snapshot; at: number }[] = [];
    let view: ViewState = initialState();
    const client = new DashboardClient(
      BASE,
      {
        onSnapshot(s) {
          snaps.push({ snap: s, at: Date.now() });
          view = applySnapshot(view, s, Date.now());
        },
        onClose() {},
        onError() {},
      },
      nodeSocket,
    );
    client.connect();

    // the map endpoint feeds the renderer
    const map = await client.fetchMap();
    expect(map.zones.length).toBeGreaterThan(0);

    // --- cadence: 10 Hz +- 20% over a 3 s window
    await waitFor(() => snaps.length >= 31, 15000, "31 snapshots");
    const window = snaps.slice(snaps.length - 31);
    const spanMs = window[30].at - window[0].at;
    const hz = 30 / (spanMs / 1000);
    expect(hz).toBeGreaterThan(8.0);
    expect(hz).toBeLessThan(12.0);

    // --- global e-stop from the UI: stop-styled within 2 snapshots
    const issuedAfter = snaps.length;
    view = issueEstop(view, "all");
    expect(view.estop.pending).toBe(true);
    await client.issueEstop("all");
    const ackIndex = await waitFor(
      () => {
        for (let i = issuedAfter; i < snaps.length; i++) {
          const s = snaps[i].snap;
          if (s.vehicles.length && s.vehicles.every((v) => v.mode === "EstopStop")) {
            return i;
          }
        }
        return null;
      },
      10000,
      "all vehicles stop-styled",
    );
    // command applies at the next tick boundary; allow the snapshot in flight
    // when it was issued plus the one carrying the acknowledgment
    expect(ackIndex - issuedAfter).toBeLessThanOrEqual(2);
    expect(snaps[ackIndex].snap.vehicles.every((v) => isStopStyled(v.mode))).toBe(true);

    // the pending button re-enables once the view sees the acknowledgment
    view = applySnapshot(view, snaps[ackIndex].snap, Date.now());
    expect(view.estop.pending).toBe(false);

    // --- run to completion, then replay the inbound command log headlessly
    const result = await waitFor(
      async () => {
        const r = await (await fetch(`${BASE}/result`)).json();
        return r.done ? r : null;
      },
      30000,
      "run completion",
    );
    const log = await (await fetch(`${BASE}/command-log`)).json();
    expect(log.commands.length).toBeGreaterThan(0);

    const replay = spawn(
      "python3",
      ["-c", `
import json, sys
from depotsim.scenarios import scenario_doc
from depotsim.simulation import Simulation
from depotsim.world import load_scenario

doc = scenario_doc("ns_controlled")
doc["duration_s"] = ${DURATION_S}
doc["events"] = json.loads(sys.argv[1])
sim = Simulation(load_scenario(json.dumps(doc)))
sim.run()
print(sim.trace.terminal_hash)
`, JSON.stringify(log.commands)],
      { cwd: ".." },
    );
    const replayHash = await new Promise<string>((resolve, reject) => {
      let out = "";
      let err = "";
      replay.stdout?.on("data", (d) => (out += d.toString()));
      replay.stderr?.on("data", (d) => (err += d.toString()));
      replay.on("exit", (code) =>
        code === 0 ? resolve(out.trim()) : reject(new Error(err)),
      );
    });
    expect(replayHash).toBe(result.trace_hash);

    client.close();
  }, 90000);
});
