/**
 * UI state: a pure reduction of received telemetry, stage echoes,
 * robot sensor frames, and vibration feedback. Rendering reads this
 * snapshot; nothing else mutates it.
 */
import { regionMagnitudes } from "./forward";
export const STALE_AFTER_MS = 1000;
export function initialState() {
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
export function onTelemetry(state, rec, nowMs) {
    return {
        ...state,
        stage: rec.stage,
        massG: rec.mass,
        targetG: rec.target,
        stale: false,
        lastTelemetryMs: nowMs,
    };
}
export function onMessage(state, msg, nowMs) {
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
export function onTick(state, nowMs) {
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
export function progressFraction(state) {
    if (state.targetG === null || state.targetG <= 0)
        return 0;
    return Math.min(1, state.massG / state.targetG);
}
