// Client-side state: the scene snapshot plus the latest fix and a bounded
// trail per agent. The view never recomputes positioning; it renders exactly
// what the protocol delivered.

import { FixMsg, SceneMsg, ServerMsg } from "./protocol.js";

export const TRAIL_LENGTH = 300;
export const STALE_AFTER_MS = 1000;

export type AgentView = {
  kind: string;
  latest: FixMsg | null;
  receivedAtMs: number; // wall clock of the last fix
  trail: FixMsg[]; // ordered by t_ms, newest last
};

export class ViewState {
  scene: SceneMsg | null = null;
  agents = new Map<string, AgentView>();
  connected = false;
  followMode = true;
  scriptedMode = true;
  paused = false;
  showTruth = false;

  applyMessage(msg: ServerMsg, nowMs: number): void {
    if (msg.type === "scene") {
      this.scene = msg;
      this.agents.clear();
      for (const [id, kind] of msg.agents) {
        this.agents.set(id, { kind, latest: null, receivedAtMs: 0, trail: [] });
      }
      return;
    }
    const agent = this.agents.get(msg.agent_id);
    if (!agent) return;
    if (msg.type === "fix") {
      agent.latest = msg;
      agent.receivedAtMs = nowMs;
      agent.trail.push(msg);
      if (agent.trail.length > TRAIL_LENGTH) {
        agent.trail.splice(0, agent.trail.length - TRAIL_LENGTH);
      }
    }
  }

  isStale(id: string, nowMs: number): boolean {
    const agent = this.agents.get(id);
    if (!agent || agent.latest === null) return true;
    return nowMs - agent.receivedAtMs > STALE_AFTER_MS;
  }
}
