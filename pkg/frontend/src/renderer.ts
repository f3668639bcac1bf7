// Canvas rendering: a pure function of (view state, map, viewport). The
// context parameter is the 2D-context subset we use, so tests can pass a
// recording stub instead of a real canvas.

import { DepotMapView, isStopStyled, Snapshot } from "./protocol.js";
import { bannerText, ViewState } from "./state.js";
import { toPx, Viewport } from "./transform.js";

export interface Ctx {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(angle: number): void;
}

export const MODE_COLORS: Record<string, string> = {
  Idle: "#8f98a3",
  Following: "#2f9e44",
  AtStation: "#1c7ed6",
  AebStop: "#e8590c",
  CommLossStop: "#e8590c",
  FaultStop: "#e8590c",
  EstopStop: "#e03131",
};

export function modeColor(mode: string): string {
  return MODE_COLORS[mode] ?? "#8f98a3";
}

const ZONE_COLORS: Record<string, string> = {
  DropOff: "#dbe4ff",
  Wash: "#d3f9d8",
  Calibration: "#fff3bf",
  Charging: "#ffe8cc",
  Loading: "#eebefa",
  PickUp: "#c5f6fa",
};

function polygon(ctx: Ctx, vp: Viewport, points: [number, number][]): void {
  ctx.beginPath();
  points.forEach(([x, y], i) => {
    const [px, py] = toPx(vp, x, y);
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.closePath();
}

export function render(ctx: Ctx, view: ViewState, map: DepotMapView | null,
                       vp: Viewport, width: number, height: number,
                       nowMs: number): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#f8f9fa";
  ctx.fillRect(0, 0, width, height);

  const snap = view.snapshot;
  if (map) {
    // sensor coverage: error styling when the depot reports sensing unhealthy
    const healthy = snap ? snap.sensor_health : true;
    ctx.globalAlpha = 0.35;
    ctx.fillStyle = healthy ? "#e7f5ff" : "#ffe3e3";
    for (const poly of map.sensor_coverage) {
      polygon(ctx, vp, poly);
      ctx.fill();
    }
    ctx.globalAlpha = 1.0;

    for (const zone of map.zones) {
      ctx.fillStyle = ZONE_COLORS[zone.kind] ?? "#eceff1";
      polygon(ctx, vp, zone.footprint);
      ctx.fill();
      ctx.strokeStyle = "#868e96";
      ctx.lineWidth = 1;
      ctx.stroke();
      const [lx, ly] = toPx(vp, zone.footprint[0][0], zone.footprint[0][1]);
      ctx.fillStyle = "#495057";
      ctx.font = "11px sans-serif";
      ctx.fillText(zone.kind, lx + 4, ly - 4);
    }

    ctx.strokeStyle = "#adb5bd";
    ctx.lineWidth = 1;
    for (const edge of map.edges) {
      ctx.beginPath();
      const [ax, ay] = toPx(vp, edge.from[0], edge.from[1]);
      const [bx, by] = toPx(vp, edge.to[0], edge.to[1]);
      ctx.moveTo(ax, ay);
      ctx.lineTo(bx, by);
      ctx.stroke();
    }

    ctx.fillStyle = "#c92a2a";
    for (const b of map.estop_buttons) {
      const [px, py] = toPx(vp, b.position[0], b.position[1]);
      ctx.beginPath();
      ctx.arc(px, py, 4, 0, Math.PI * 2);
      ctx.fill();
    }
  }

  if (snap) {
    for (const v of snap.vehicles) {
      // planned path polyline
      if (v.planned_path.length > 1) {
        ctx.strokeStyle = v.id === view.selectedVehicle ? "#1971c2" : "#74c0fc";
        ctx.lineWidth = 1.5;
        ctx.beginPath();
        v.planned_path.forEach(([x, y], i) => {
          const [px, py] = toPx(vp, x, y);
          if (i === 0) ctx.moveTo(px, py);
          else ctx.lineTo(px, py);
        });
        ctx.stroke();
      }
      // vehicle marker: pose-aligned 6 x 2.2 m rectangle, mode color
      const [cx, cy] = toPx(vp, v.x, v.y);
      ctx.save();
      ctx.translate(cx, cy);
      ctx.rotate(-v.heading);
      ctx.fillStyle = modeColor(v.mode);
      ctx.fillRect(-3 * vp.scale, -1.1 * vp.scale, 6 * vp.scale, 2.2 * vp.scale);
      ctx.restore();
      ctx.fillStyle = "#212529";
      ctx.font = "11px sans-serif";
      ctx.fillText(`${v.id} ${v.speed.toFixed(1)} m/s`, cx + 8, cy - 8);
    }
    ctx.fillStyle = "#343a40";
    for (const p of snap.pedestrians) {
      const [px, py] = toPx(vp, p.x, p.y);
      ctx.beginPath();
      ctx.arc(px, py, Math.max(2, 0.3 * vp.scale), 0, Math.PI * 2);
      ctx.fill();
    }
    ctx.fillStyle = "#495057";
    ctx.font = "12px sans-serif";
    ctx.fillText(`tick ${snap.tick}`, 10, 16);
  }

  const banner = bannerText(view, nowMs);
  if (banner) {
    ctx.fillStyle = "#e03131";
    ctx.fillRect(0, 0, width, 28);
    ctx.fillStyle = "#ffffff";
    ctx.font = "bold 14px sans-serif";
    ctx.fillText(banner, 10, 19);
  }
}

export function alertFeedLines(view: ViewState, limit = 12): string[] {
  return view.alerts
    .slice(-limit)
    .reverse()
    .map((a) => `tick ${a.tick}: ${a.vehicle} off path by ${a.cross_track.toFixed(2)} m`);
}

export function snapshotSummaryLine(snap: Snapshot): string {
  const stopped = snap.vehicles.filter((v) => isStopStyled(v.mode)).length;
  return `${snap.vehicles.length} vehicles (${stopped} stopped), ` +
    `${snap.pedestrians.length} pedestrians, sensing ${snap.sensor_health ? "OK" : "ERROR"}`;
}
