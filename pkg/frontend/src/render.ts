// Canvas drawing. Colors and shapes follow the map legend: yellow lamp
// markers, a blue two-wheeled block for the robot, a red point for the
// human; stale agents are drawn hollow. Takes the 2D context as a minimal
// interface so tests can record the draw calls.

import { Transform, fitTransform, worldToScreen } from "./transform.js";
import { ViewState } from "./view.js";

export const LAMP_COLOR = "#f0c420";
export const ROBOT_COLOR = "#2255cc";
export const HUMAN_COLOR = "#d62828";
export const TRAIL_ALPHA = 0.35;

export interface Ctx2d {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  font: string;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  fill(): void;
  stroke(): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
  translate(x: number, y: number): void;
  rotate(a: number): void;
  setLineDash(segments: number[]): void;
}

export function mapTransform(view: ViewState, width: number, height: number): Transform | null {
  if (!view.scene) return null;
  return fitTransform(view.scene.floor_bounds, width, height);
}

export function renderMap(
  ctx: Ctx2d,
  view: ViewState,
  width: number,
  height: number,
  nowMs: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#11131a";
  ctx.fillRect(0, 0, width, height);
  const t = mapTransform(view, width, height);
  if (t === null) {
    ctx.fillStyle = "#9aa0b0";
    ctx.font = "16px sans-serif";
    ctx.fillText(view.connected ? "waiting for scene..." : "connecting...", 20, 30);
    return;
  }
  drawFloor(ctx, view, t);
  drawLamps(ctx, view, t);
  drawTrails(ctx, view, t);
  if (view.showTruth) drawTruth(ctx, view, t);
  drawAgents(ctx, view, t, nowMs);
}

function drawFloor(ctx: Ctx2d, view: ViewState, t: Transform): void {
  const [[xmin, ymin], [xmax, ymax]] = view.scene!.floor_bounds;
  const [sx, sy] = worldToScreen(t, xmin, ymax);
  ctx.strokeStyle = "#3a3f52";
  ctx.lineWidth = 1;
  ctx.setLineDash([]);
  ctx.strokeRect(sx, sy, (xmax - xmin) * t.scale, (ymax - ymin) * t.scale);
}

function drawLamps(ctx: Ctx2d, view: ViewState, t: Transform): void {
  const size = Math.max(8, 0.0875 * t.scale); // 175 mm lamps, min visible size
  for (const [, x, y, shape] of view.scene!.lamps) {
    const [sx, sy] = worldToScreen(t, x, y);
    ctx.fillStyle = LAMP_COLOR;
    ctx.beginPath();
    if (shape === "square") {
      ctx.rect(sx - size, sy - size, 2 * size, 2 * size);
    } else {
      ctx.arc(sx, sy, size, 0, 2 * Math.PI);
    }
    ctx.fill();
  }
}

function drawTrails(ctx: Ctx2d, view: ViewState, t: Transform): void {
  for (const agent of view.agents.values()) {
    if (agent.trail.length < 2) continue;
    ctx.strokeStyle = agent.kind === "robot" ? ROBOT_COLOR : HUMAN_COLOR;
    ctx.globalAlpha = TRAIL_ALPHA;
    ctx.lineWidth = 2;
    ctx.setLineDash([]);
    ctx.beginPath();
    agent.trail.forEach((fix, i) => {
      const [sx, sy] = worldToScreen(t, fix.x, fix.y);
      if (i === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    ctx.stroke();
    ctx.globalAlpha = 1;
  }
}

function drawTruth(ctx: Ctx2d, view: ViewState, t: Transform): void {
  ctx.strokeStyle = "#8890a8";
  ctx.setLineDash([4, 4]);
  ctx.lineWidth = 1;
  for (const [, x, y] of view.scene!.truth ?? []) {
    const [sx, sy] = worldToScreen(t, x, y);
    ctx.beginPath();
    ctx.arc(sx, sy, 10, 0, 2 * Math.PI);
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function drawAgents(ctx: Ctx2d, view: ViewState, t: Transform, nowMs: number): void {
  for (const [id, agent] of view.agents) {
    if (agent.latest === null) continue; // nothing received yet
    const stale = view.isStale(id, nowMs);
    const [sx, sy] = worldToScreen(t, agent.latest.x, agent.latest.y);
    if (agent.kind === "robot") {
      drawRobot(ctx, sx, sy, -agent.latest.yaw, stale);
    } else {
      drawHuman(ctx, sx, sy, stale);
    }
  }
}

function drawRobot(ctx: Ctx2d, sx: number, sy: number, screenYaw: number, stale: boolean): void {
  const w = 26;
  const h = 16;
  ctx.save();
  ctx.translate(sx, sy);
  ctx.rotate(screenYaw);
  ctx.beginPath();
  ctx.rect(-w / 2, -h / 2, w, h);
  if (stale) {
    ctx.strokeStyle = ROBOT_COLOR;
    ctx.lineWidth = 2;
    ctx.stroke();
  } else {
    ctx.fillStyle = ROBOT_COLOR;
    ctx.fill();
  }
  // two wheels and a nose mark
  ctx.fillStyle = stale ? "transparent" : "#0e1524";
  ctx.fillRect(-w / 2 + 2, -h / 2 - 3, 8, 3);
  ctx.fillRect(-w / 2 + 2, h / 2, 8, 3);
  ctx.beginPath();
  ctx.moveTo(w / 2, 0);
  ctx.lineTo(w / 2 + 6, 0);
  ctx.strokeStyle = ROBOT_COLOR;
  ctx.stroke();
  ctx.restore();
}

function drawHuman(ctx: Ctx2d, sx: number, sy: number, stale: boolean): void {
  ctx.beginPath();
  ctx.arc(sx, sy, 7, 0, 2 * Math.PI);
  if (stale) {
    ctx.strokeStyle = HUMAN_COLOR;
    ctx.lineWidth = 2;
    ctx.stroke();
  } else {
    ctx.fillStyle = HUMAN_COLOR;
    ctx.fill();
  }
}
