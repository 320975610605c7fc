/**
 * UI state: a pure reduction of received telemetry, stage echoes,
 * robot sensor frames, and vibration feedback. Rendering reads this
 * snapshot; nothing else mutates it.
 */

import { Message } from "./protocol";
import { regionMagnitudes } from "./forward";

export const STALE_AFTER_MS = 1000;

export interface TelemetryRecord {
  type: "telemetry";
  stage: number;
  mass: number;
  target: number | null;
}

export interface UiState {
  connected: boolean;
  stage: number;
  targetG: number | null;
  massG: number;
  stale: boolean;
  lastTelemetryMs: number | null;
  heatmap: number[];          // 8 per-region |ΔB| magnitudes, µT
  feedback: number[];         // 8 per-channel vibration levels 0..1
  feedbackUntilMs: number;
}

export function initialState(): UiState {
  return {
    connected: false,
    stage: 1,
    targetG: null,
    massG: 0,
    stale: false,
    lastTelemetryMs: null,
    heatmap: new Array(8).fill(0),
    feedback: new Array(8).fill(0),
    feedbackUntilMs: 0,
  };
}

export function onTelemetry(state: UiState, rec: TelemetryRecord,
                            nowMs: number): UiState {
  return {
    ...state,
    stage: rec.stage,
    massG: rec.mass,
    targetG: rec.target,
    stale: false,
    lastTelemetryMs: nowMs,
  };
}

export function onMessage(state: UiState, msg: Message,
                          nowMs: number): UiState {
  switch (msg.kind) {
    case "stage_transition":
      return { ...state, stage: msg.stage };
    case "sensor_frame":
      return { ...state, heatmap: regionMagnitudes(msg.values, 0.01) };
    case "vibration_cmd":
      return {
        ...state,
        feedback: Array.from(msg.duties, (d) => d / 255),
        feedbackUntilMs: nowMs + msg.durationMs,
      };
    default:
      return state;
  }
}

/** Advance time-driven flags: telemetry staleness and feedback expiry. */
export function onTick(state: UiState, nowMs: number): UiState {
  let next = state;
  if (state.lastTelemetryMs !== null && !state.stale
      && nowMs - state.lastTelemetryMs >= STALE_AFTER_MS) {
    next = { ...next, stale: true };
  }
  if (state.feedbackUntilMs !== 0 && nowMs >= state.feedbackUntilMs
      && state.feedback.some((v) => v > 0)) {
    next = { ...next, feedback: new Array(8).fill(0), feedbackUntilMs: 0 };
  }
  return next;
}

export function progressFraction(state: UiState): number {
  if (state.targetG === null || state.targetG <= 0) return 0;
  return Math.min(1, state.massG / state.targetG);
}
