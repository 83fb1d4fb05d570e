// Message schemas for the position-sharing protocol. The socket carries the
// same JSON text as the TCP line protocol, one message per frame.

export type LampEntry = [number, number, number, string]; // uid, x, y, shape

export type SceneMsg = {
  type: "scene";
  lamps: LampEntry[];
  floor_bounds: [[number, number], [number, number]];
  agents: [string, string][]; // id, kind
  truth: [string, number, number, number][]; // debug only; may be empty
};

export type FixMsg = {
  type: "fix";
  agent_id: string;
  kind: "smartphone" | "robot";
  t_ms: number;
  x: number;
  y: number;
  z: number;
  yaw: number;
  scheme: string;
  residual_px: number;
  n_leds: number;
};

export type NoFixMsg = {
  type: "nofix";
  agent_id: string;
  kind: string;
  t_ms: number;
  reason: string;
};

export type ServerMsg = SceneMsg | FixMsg | NoFixMsg;

export function parseMessage(text: string): ServerMsg | null {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const type = (doc as { type?: unknown }).type;
  if (type === "scene" || type === "fix" || type === "nofix") {
    return doc as ServerMsg;
  }
  return null; // unknown types are not ours to interpret
}

export function encodeGoal(x: number, y: number, issuedTMs: number): string {
  return JSON.stringify({ type: "goal", x, y, issued_t_ms: issuedTMs });
}

export type ControlCommand =
  | "pause"
  | "resume"
  | "follow_on"
  | "follow_off"
  | "scripted_on"
  | "scripted_off";

export function encodeControl(command: ControlCommand): string {
  return JSON.stringify({ type: "control", command });
}
