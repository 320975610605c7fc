import { describe, expect, it } from "vitest";
import {
  STALE_AFTER_MS, initialState, onMessage, onTelemetry, onTick,
  progressFraction,
} from "../src/state";

describe("telemetry mirroring", () => {
  it("mirrors a telemetry record exactly", () => {
    const s = onTelemetry(initialState(),
      { type: "telemetry", stage: 5, mass: 0.97, target: 1.0 }, 1000);
    expect(s.stage).toBe(5);
    expect(s.massG).toBe(0.97);
    expect(s.targetG).toBe(1.0);
    expect(progressFraction(s)).toBeCloseTo(0.97, 12);
  });

  it("fixture sequence lands on the final record", () => {
    const fixtures = [
      { type: "telemetry" as const, stage: 1, mass: 0, target: null },
      { type: "telemetry" as const, stage: 2, mass: 0, target: 1.0 },
      { type: "telemetry" as const, stage: 5, mass: 0.42, target: 1.0 },
      { type: "telemetry" as const, stage: 6, mass: 1.01, target: 1.0 },
    ];
    let s = initialState();
    fixtures.forEach((rec, i) => { s = onTelemetry(s, rec, i * 100); });
    expect(s.stage).toBe(6);
    expect(s.massG).toBe(1.01);
    expect(progressFraction(s)).toBe(1); // clamped at 100%
  });

  it("stage transition frames advance the stepper state", () => {
    const s = onMessage(initialState(),
      { kind: "stage_transition", stage: 3 }, 0);
    expect(s.stage).toBe(3);
  });
});

describe("staleness", () => {
  it("flags stale after one second of silence", () => {
    let s = onTelemetry(initialState(),
      { type: "telemetry", stage: 1, mass: 0, target: null }, 0);
    s = onTick(s, STALE_AFTER_MS - 1);
    expect(s.stale).toBe(false);
    s = onTick(s, STALE_AFTER_MS);
    expect(s.stale).toBe(true);
  });

  it("fresh telemetry clears the flag", () => {
    let s = onTelemetry(initialState(),
      { type: "telemetry", stage: 1, mass: 0, target: null }, 0);
    s = onTick(s, 2000);
    s = onTelemetry(s, { type: "telemetry", stage: 1, mass: 0, target: null },
                    2100);
    expect(s.stale).toBe(false);
  });
});

describe("robot frames and feedback", () => {
  it("sensor frames fill the heatmap in µT", () => {
    const values = new Int16Array(24);
    values[6] = 3000;  // region 2 x-axis, 30 µT
    values[7] = 4000;  // region 2 y-axis, 40 µT
    const s = onMessage(initialState(),
      { kind: "sensor_frame", seq: 1, values }, 0);
    expect(s.heatmap[2]).toBeCloseTo(50, 6);
    expect(s.heatmap[0]).toBe(0);
  });

  it("vibration command sets levels then expires", () => {
    const duties = new Uint8Array(8);
    duties[0] = 255;
    let s = onMessage(initialState(),
      { kind: "vibration_cmd", duties, durationMs: 200 }, 1000);
    expect(s.feedback[0]).toBe(1);
    s = onTick(s, 1100);
    expect(s.feedback[0]).toBe(1);
    s = onTick(s, 1200);
    expect(s.feedback[0]).toBe(0);
  });
});
