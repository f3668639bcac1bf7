// Browser bootstrap: canvas + alert feed + e-stop controls against a running
// `depotsim serve` instance.

import { DashboardClient } from "./client.js";
import { DepotMapView } from "./protocol.js";
import { alertFeedLines, Ctx, render } from "./renderer.js";
import {
  applySnapshot,
  connectionClosed,
  estopSendFailed,
  initialState,
  issueEstop,
  selectVehicle,
  ViewState,
} from "./state.js";
import { defaultViewport, pan, toPx, Viewport, zoom } from "./transform.js";

const backend = new URLSearchParams(location.search).get("backend")
  ?? `http://${location.hostname}:8700`;

const canvas = document.getElementById("map") as HTMLCanvasElement;
const ctx = canvas.getContext("2d") as unknown as Ctx;
const feed = document.getElementById("alerts") as HTMLElement;
const estopAllBtn = document.getElementById("estop-all") as HTMLButtonElement;
const estopOneBtn = document.getElementById("estop-selected") as HTMLButtonElement;
const releaseBtn = document.getElementById("release") as HTMLButtonElement;

let state: ViewState = initialState();
let depotMap: DepotMapView | null = null;
let vp: Viewport = defaultViewport(canvas.width, canvas.height);
let alertCount = 0;

import type { SocketLike } from "./client.js";

function browserSocket(url: string): SocketLike {
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
  ws.onmessage = (ev) => wrapper.onmessage?.({ data: ev.data });
  ws.onclose = () => wrapper.onclose?.();
  ws.onopen = () => wrapper.onopen?.();
  return wrapper;
}

const client = new DashboardClient(
  backend,
  {
    onSnapshot(snap) {
      state = applySnapshot(state, snap, Date.now());
      if (state.alerts.length > alertCount) {
        alertCount = state.alerts.length;
        notify();
      }
    },
    onClose() {
      state = connectionClosed(state);
    },
    onError(reason) {
      state = estopSendFailed(state, reason);
    },
  },
  browserSocket,
);

function notify(): void {
  // audible + visual notification on a deviation alert
  feed.classList.add("flash");
  setTimeout(() => feed.classList.remove("flash"), 600);
  const audio = new AudioContext();
  const osc = audio.createOscillator();
  osc.frequency.value = 880;
  osc.connect(audio.destination);
  osc.start();
  osc.stop(audio.currentTime + 0.15);
}

function doEstop(target: string): void {
  if (state.estop.pending) return;
  state = issueEstop(state, target);
  try {
    client.issueEstop(target);
  } catch (err) {
    state = estopSendFailed(state, String(err));
  }
}

estopAllBtn.onclick = () => doEstop("all");
estopOneBtn.onclick = () => {
  if (state.selectedVehicle) doEstop(state.selectedVehicle);
};
releaseBtn.onclick = () => {
  try {
    client.issueRelease("all");
  } catch (err) {
    state = estopSendFailed(state, String(err));
  }
};

canvas.addEventListener("click", (ev) => {
  const snap = state.snapshot;
  if (!snap) return;
  const rect = canvas.getBoundingClientRect();
  const mx = ev.clientX - rect.left;
  const my = ev.clientY - rect.top;
  let best: string | null = null;
  let bestD = 20; // px hit radius
  for (const v of snap.vehicles) {
    const [px, py] = toPx(vp, v.x, v.y);
    const d = Math.hypot(px - mx, py - my);
    if (d < bestD) {
      bestD = d;
      best = v.id;
    }
  }
  state = selectVehicle(state, best);
});

let dragging = false;
let lastX = 0;
let lastY = 0;
canvas.addEventListener("mousedown", (ev) => {
  dragging = true;
  lastX = ev.clientX;
  lastY = ev.clientY;
});
window.addEventListener("mouseup", () => (dragging = false));
window.addEventListener("mousemove", (ev) => {
  if (!dragging) return;
  vp = pan(vp, ev.clientX - lastX, ev.clientY - lastY);
  lastX = ev.clientX;
  lastY = ev.clientY;
});
canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  const rect = canvas.getBoundingClientRect();
  vp = zoom(vp, ev.deltaY < 0 ? 1.15 : 0.87, ev.clientX - rect.left, ev.clientY - rect.top);
});

function frame(): void {
  render(ctx, state, depotMap, vp, canvas.width, canvas.height, Date.now());
  estopAllBtn.disabled = state.estop.pending;
  estopOneBtn.disabled = state.estop.pending || !state.selectedVehicle;
  estopOneBtn.textContent = state.selectedVehicle
    ? `E-stop ${state.selectedVehicle}`
    : "E-stop selected";
  feed.innerHTML = alertFeedLines(state)
    .map((line) => `<li>${line}</li>`)
    .join("");
  requestAnimationFrame(frame);
}

client.connect();
client
  .fetchMap()
  .then((m) => (depotMap = m))
  .catch(() => (state = estopSendFailed(state, "map fetch failed")));
requestAnimationFrame(frame);
