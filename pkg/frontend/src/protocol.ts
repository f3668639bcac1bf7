// Wire types for the simulator's dashboard endpoints.

export interface VehicleView {
  id: string;
  x: number;
  y: number;
  heading: number;
  speed: number;
  mode: string;
  warnings: string[];
  planned_path: [number, number][];
}

export interface PedestrianView {
  id: string;
  x: number;
  y: number;
}

export interface DeviationAlert {
  vehicle: string;
  cross_track: number;
  tick: number;
}

export interface Snapshot {
  tick: number;
  vehicles: VehicleView[];
  pedestrians: PedestrianView[];
  alerts: DeviationAlert[];
  sensor_health: boolean;
}

export interface DepotMapView {
  zones: { id: string; kind: string; footprint: [number, number][] }[];
  edges: { from: [number, number]; to: [number, number] }[];
  estop_buttons: { id: string; position: [number, number] }[];
  sensor_coverage: [number, number][][];
}

export type CommandKind =
  | "estop"
  | "estop_release"
  | "hazard_event"
  | "hazard_clear"
  | "pause"
  | "resume";

export interface Command {
  kind: CommandKind;
  target?: string;
  event?: string;
}

export const STOP_MODES = new Set([
  "AebStop",
  "CommLossStop",
  "FaultStop",
  "EstopStop",
]);

export function isStopStyled(mode: string): boolean {
  return STOP_MODES.has(mode);
}
