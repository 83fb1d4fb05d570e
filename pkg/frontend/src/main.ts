// Console entry point: socket wiring, drag-to-steer, and mode buttons.

import { encodeControl, encodeGoal, parseMessage } from "./protocol.js";
import { GoalThrottle, clampToBounds, screenToWorld } from "./transform.js";
import { mapTransform, renderMap } from "./render.js";
import { ViewState } from "./view.js";

const canvas = document.getElementById("map") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = document.getElementById("status")!;

const view = new ViewState();
const throttle = new GoalThrottle(100); // <= 10 goals/s
let socket: WebSocket | null = null;
let dragging = false;

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws`;
}

function connect(): void {
  socket = new WebSocket(wsUrl());
  socket.onopen = () => {
    view.connected = true;
    updateStatus();
  };
  socket.onclose = () => {
    view.connected = false;
    updateStatus();
    setTimeout(connect, 1000);
  };
  socket.onmessage = (event) => {
    const msg = parseMessage(String(event.data));
    if (msg !== null) view.applyMessage(msg, performance.now());
  };
}

function send(text: string): void {
  if (socket !== null && socket.readyState === WebSocket.OPEN) {
    socket.send(text);
  }
}

function sendDragGoal(ev: PointerEvent): void {
  const t = mapTransform(view, canvas.width, canvas.height);
  if (t === null || view.scene === null) return;
  if (!throttle.offer(performance.now())) return;
  const rect = canvas.getBoundingClientRect();
  const [wx, wy] = screenToWorld(t, ev.clientX - rect.left, ev.clientY - rect.top);
  const [gx, gy] = clampToBounds(view.scene.floor_bounds, wx, wy);
  const phone = [...view.agents.values()].find((a) => a.kind === "smartphone");
  send(encodeGoal(gx, gy, phone?.latest?.t_ms ?? 0));
}

canvas.addEventListener("pointerdown", (ev) => {
  dragging = true;
  canvas.setPointerCapture(ev.pointerId);
  sendDragGoal(ev);
});
canvas.addEventListener("pointermove", (ev) => {
  if (dragging) sendDragGoal(ev);
});
canvas.addEventListener("pointerup", () => {
  dragging = false;
});

function bindToggle(id: string, on: string, off: string,
                    get: () => boolean, set: (v: boolean) => void): void {
  const el = document.getElementById(id) as HTMLButtonElement;
  const refresh = () => {
    el.textContent = `${id}: ${get() ? "on" : "off"}`;
  };
  el.addEventListener("click", () => {
    set(!get());
    send(encodeControl((get() ? on : off) as never));
    refresh();
  });
  refresh();
}

bindToggle("follow", "follow_on", "follow_off",
           () => view.followMode, (v) => (view.followMode = v));
bindToggle("scripted", "scripted_on", "scripted_off",
           () => view.scriptedMode, (v) => (view.scriptedMode = v));

const pauseEl = document.getElementById("pause") as HTMLButtonElement;
pauseEl.addEventListener("click", () => {
  view.paused = !view.paused;
  send(encodeControl(view.paused ? "pause" : "resume"));
  pauseEl.textContent = view.paused ? "resume" : "pause";
});

const truthEl = document.getElementById("truth") as HTMLButtonElement;
truthEl.addEventListener("click", () => {
  view.showTruth = !view.showTruth;
  truthEl.textContent = `truth: ${view.showTruth ? "on" : "off"}`;
});

function updateStatus(): void {
  const parts = [view.connected ? "connected" : "disconnected"];
  for (const [id, agent] of view.agents) {
    if (agent.latest) {
      parts.push(`${id}: (${agent.latest.x.toFixed(2)}, ${agent.latest.y.toFixed(2)}) ${agent.latest.scheme}`);
    } else {
      parts.push(`${id}: acquiring`);
    }
  }
  statusEl.textContent = parts.join("   ");
}

function frame(): void {
  renderMap(ctx, view, canvas.width, canvas.height, performance.now());
  updateStatus();
  requestAnimationFrame(frame);
}

connect();
requestAnimationFrame(frame);
