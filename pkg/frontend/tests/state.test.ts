import { describe, expect, it } from "vitest";

import { Snapshot } from "../src/protocol.js";
import {
  ALERT_RING_SIZE,
  applySnapshot,
  bannerText,
  connectionClosed,
  estopSendFailed,
  initialState,
  isStale,
  issueEstop,
  selectVehicle,
} from "../src/state.js";

function snap(partial: Partial<Snapshot> = {}): Snapshot {
  return {
    tick: 1,
    vehicles: [],
    pedestrians: [],
    alerts: [],
    sensor_health: true,
    ...partial,
  };
}

function vehicle(id: string, mode = "Following") {
  return {
    id,
    x: 0,
    y: 0,
    heading: 0,
    speed: 1,
    mode,
    warnings: [],
    planned_path: [] as [number, number][],
  };
}

describe("applySnapshot", () => {
  it("stores the snapshot and marks the connection live", () => {
    const s = applySnapshot(initialState(), snap({ tick: 42 }), 1000);
    expect(s.snapshot?.tick).toBe(42);
    expect(s.connection).toBe("live");
    expect(s.lastSnapshotAt).toBe(1000);
  });

  it("keeps only the last 200 alerts", () => {
    let s = initialState();
    for (let i = 0; i < 230; i++) {
      s = applySnapshot(
        s,
        snap({ tick: i, alerts: [{ vehicle: "V1", cross_track: 1.2, tick: i }] }),
        i,
      );
    }
    expect(s.alerts.length).toBe(ALERT_RING_SIZE);
    expect(s.alerts[0].tick).toBe(30);
    expect(s.alerts.at(-1)?.tick).toBe(229);
  });
});

describe("e-stop button state", () => {
  it("disables while pending and re-enables on acknowledgment", () => {
    let s = applySnapshot(initialState(), snap({ vehicles: [vehicle("V1")] }), 0);
    s = issueEstop(s, "all");
    expect(s.estop.pending).toBe(true);
    // not acknowledged yet: vehicle still following
    s = applySnapshot(s, snap({ vehicles: [vehicle("V1", "Following")] }), 100);
    expect(s.estop.pending).toBe(true);
    // acknowledged: every vehicle in EstopStop
    s = applySnapshot(s, snap({ vehicles: [vehicle("V1", "EstopStop")] }), 200);
    expect(s.estop.pending).toBe(false);
  });

  it("single-vehicle target acknowledges on that vehicle only", () => {
    let s = applySnapshot(
      initialState(),
      snap({ vehicles: [vehicle("V1"), vehicle("V2")] }),
      0,
    );
    s = issueEstop(s, "V2");
    s = applySnapshot(
      s,
      snap({ vehicles: [vehicle("V1", "Following"), vehicle("V2", "EstopStop")] }),
      100,
    );
    expect(s.estop.pending).toBe(false);
  });

  it("ignores a second press while pending", () => {
    let s = issueEstop(initialState(), "all");
    const again = issueEstop(s, "V1");
    expect(again.estop.target).toBe("all");
  });

  it("send failure surfaces in the banner and re-enables", () => {
    let s = issueEstop(initialState(), "all");
    s = estopSendFailed(s, "not connected");
    expect(s.estop.pending).toBe(false);
    expect(bannerText(s, 0)).toContain("e-stop failed");
  });
});

describe("staleness banner", () => {
  it("degrades after one second without snapshots", () => {
    let s = applySnapshot(initialState(), snap(), 1000);
    expect(isStale(s, 1900)).toBe(false);
    expect(isStale(s, 2100)).toBe(true);
    expect(bannerText(s, 2100)).toContain("DEGRADED");
  });

  it("closed connection is stale regardless of timing", () => {
    let s = applySnapshot(initialState(), snap(), 1000);
    s = connectionClosed(s);
    expect(isStale(s, 1001)).toBe(true);
    expect(bannerText(s, 1001)).toBeTruthy();
  });

  it("still renders the last snapshot while degraded", () => {
    let s = applySnapshot(initialState(), snap({ tick: 9 }), 0);
    s = connectionClosed(s);
    expect(s.snapshot?.tick).toBe(9);
  });
});

describe("selection", () => {
  it("selects and clears", () => {
    let s = selectVehicle(initialState(), "V2");
    expect(s.selectedVehicle).toBe("V2");
    s = selectVehicle(s, null);
    expect(s.selectedVehicle).toBeNull();
  });
});
