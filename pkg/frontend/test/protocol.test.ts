import { describe, expect, it } from "vitest";

import { encodeControl, encodeGoal, parseMessage } from "../src/protocol.js";

describe("parseMessage", () => {
  it("accepts the three server message types", () => {
    const fix = parseMessage(
      '{"type":"fix","agent_id":"phone","kind":"smartphone","t_ms":33,' +
      '"x":1.0,"y":2.0,"z":1.0,"yaw":0.0,"scheme":"multi_led",' +
      '"residual_px":0.1,"n_leds":4}',
    );
    expect(fix?.type).toBe("fix");
    const nofix = parseMessage(
      '{"type":"nofix","agent_id":"r","kind":"robot","t_ms":0,"reason":"acquiring"}',
    );
    expect(nofix?.type).toBe("nofix");
    const scene = parseMessage(
      '{"type":"scene","lamps":[],"floor_bounds":[[-3,-3],[3,3]],' +
      '"agents":[],"truth":[]}',
    );
    expect(scene?.type).toBe("scene");
  });

  it("returns null for garbage and unknown types", () => {
    expect(parseMessage("not json")).toBeNull();
    expect(parseMessage("[1,2]")).toBeNull();
    expect(parseMessage('{"type":"teleport"}')).toBeNull();
  });
});

describe("encoders", () => {
  it("produces goal lines the server schema accepts", () => {
    const doc = JSON.parse(encodeGoal(1.5, -2.25, 330));
    expect(doc).toEqual({ type: "goal", x: 1.5, y: -2.25, issued_t_ms: 330 });
  });

  it("produces control lines with known commands", () => {
    const doc = JSON.parse(encodeControl("scripted_off"));
    expect(doc).toEqual({ type: "control", command: "scripted_off" });
  });
});
