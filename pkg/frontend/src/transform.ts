// World <-> screen mapping. World is meters, +y up; screen is pixels, +y
// down. The transform fits the floor bounds into the canvas with a margin.

export type Bounds = [[number, number], [number, number]];

export type Transform = {
  scale: number; // px per meter
  ox: number; // screen x of world x = 0
  oy: number; // screen y of world y = 0
};

export function fitTransform(
  bounds: Bounds,
  width: number,
  height: number,
  margin = 0.1,
): Transform {
  const [[xmin, ymin], [xmax, ymax]] = bounds;
  const spanX = xmax - xmin;
  const spanY = ymax - ymin;
  const usableW = width * (1 - 2 * margin);
  const usableH = height * (1 - 2 * margin);
  const scale = Math.min(usableW / spanX, usableH / spanY);
  const cx = (xmin + xmax) / 2;
  const cy = (ymin + ymax) / 2;
  return {
    scale,
    ox: width / 2 - cx * scale,
    oy: height / 2 + cy * scale,
  };
}

export function worldToScreen(t: Transform, x: number, y: number): [number, number] {
  return [t.ox + x * t.scale, t.oy - y * t.scale];
}

export function screenToWorld(t: Transform, sx: number, sy: number): [number, number] {
  return [(sx - t.ox) / t.scale, (t.oy - sy) / t.scale];
}

export function clampToBounds(bounds: Bounds, x: number, y: number): [number, number] {
  const [[xmin, ymin], [xmax, ymax]] = bounds;
  return [Math.min(Math.max(x, xmin), xmax), Math.min(Math.max(y, ymin), ymax)];
}

// Drag events arrive per pointer move; goals go out at most 10 per second.
export class GoalThrottle {
  private lastSent = -Infinity;

  constructor(private minIntervalMs = 100) {}

  offer(nowMs: number): boolean {
    if (nowMs - this.lastSent < this.minIntervalMs) return false;
    this.lastSent = nowMs;
    return true;
  }
}
