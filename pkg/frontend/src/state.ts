// Dashboard view state and its pure reducers. Rendering is a function of
// ViewState only, so every transition here is unit-testable without a socket.

import { DeviationAlert, Snapshot } from "./protocol.js";

export const ALERT_RING_SIZE = 200;
export const STALE_AFTER_MS = 1000;

export type Connection = "connecting" | "live" | "closed";

export interface EstopButtonState {
  // disabled between issuing the command and seeing the acknowledgment
  // (target vehicles in EstopStop) in a later snapshot
  pending: boolean;
  target: string | null; // null = no command in flight, "all" = global
}

export interface ViewState {
  snapshot: Snapshot | null;
  alerts: DeviationAlert[];
  selectedVehicle: string | null;
  connection: Connection;
  lastSnapshotAt: number | null; // ms timestamp
  estop: EstopButtonState;
  banner: string | null;
}

export function initialState(): ViewState {
  return {
    snapshot: null,
    alerts: [],
    selectedVehicle: null,
    connection: "connecting",
    lastSnapshotAt: null,
    estop: { pending: false, target: null },
    banner: null,
  };
}

export function applySnapshot(state: ViewState, snap: Snapshot, nowMs: number): ViewState {
  const alerts = state.alerts.concat(snap.alerts ?? []);
  const trimmed = alerts.length > ALERT_RING_SIZE ? alerts.slice(alerts.length - ALERT_RING_SIZE) : alerts;
  let estop = state.estop;
  if (estop.pending && estopAcknowledged(snap, estop.target)) {
    estop = { pending: false, target: null };
  }
  return {
    ...state,
    snapshot: snap,
    alerts: trimmed,
    connection: "live",
    lastSnapshotAt: nowMs,
    estop,
    banner: null,
  };
}

export function estopAcknowledged(snap: Snapshot, target: string | null): boolean {
  if (target === null) return false;
  const vehicles =
    target === "all" ? snap.vehicles : snap.vehicles.filter((v) => v.id === target);
  return vehicles.length > 0 && vehicles.every((v) => v.mode === "EstopStop");
}

export function issueEstop(state: ViewState, target: string): ViewState {
  if (state.estop.pending) return state; // button is disabled while in flight
  return { ...state, estop: { pending: true, target } };
}

export function estopSendFailed(state: ViewState, reason: string): ViewState {
  // failure surfaces in the banner and the button is re-enabled
  return { ...state, estop: { pending: false, target: null }, banner: `e-stop failed: ${reason}` };
}

export function connectionClosed(state: ViewState): ViewState {
  return { ...state, connection: "closed", banner: "connection lost" };
}

export function selectVehicle(state: ViewState, id: string | null): ViewState {
  return { ...state, selectedVehicle: id };
}

export function isStale(state: ViewState, nowMs: number): boolean {
  if (state.connection === "closed") return true;
  if (state.lastSnapshotAt === null) return state.connection !== "connecting";
  return nowMs - state.lastSnapshotAt > STALE_AFTER_MS;
}

export function bannerText(state: ViewState, nowMs: number): string | null {
  if (state.banner) return state.banner;
  if (isStale(state, nowMs)) return "DEGRADED: no live data";
  return null;
}
