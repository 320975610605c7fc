import { describe, expect, it } from "vitest";
import {
  ControlCode, FrameDecoder, Message, ProtocolError, decode, encode,
  messageEquals,
} from "../src/protocol";
import frames from "./fixtures/wire-frames.json";

function hexToBytes(hex: string): Uint8Array {
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}

function bytesToHex(data: Uint8Array): string {
  return Array.from(data, (b) => b.toString(16).padStart(2, "0")).join("");
}

function fixtureMessage(fx: (typeof frames)[number]): Message {
  switch (fx.name) {
    case "heartbeat": return { kind: "heartbeat" };
    case "hello": return { kind: "hello", version: fx.fields.version! };
    case "sensor_frame":
      return { kind: "sensor_frame", seq: fx.fields.seq!,
               values: Int16Array.from(fx.fields.values!) };
    case "vibration_cmd":
      return { kind: "vibration_cmd", duties: Uint8Array.from(fx.fields.duties!),
               durationMs: fx.fields.duration_ms! };
    case "control_cmd":
      return { kind: "control_cmd", code: fx.fields.code! as ControlCode };
    case "target_weight":
      return { kind: "target_weight", centigrams: fx.fields.centigrams! };
    case "stage_transition":
      return { kind: "stage_transition", stage: fx.fields.stage! };
    case "collision_event":
      return { kind: "collision_event", magnitude: fx.fields.magnitude! };
    case "ack": return { kind: "ack", seq: fx.fields.seq! };
    default: throw new Error(`unknown fixture ${fx.name}`);
  }
}

describe("wire format against robot-endpoint fixtures", () => {
  it("encodes every message type to the exact fixture bytes", () => {
    for (const fx of frames) {
      expect(bytesToHex(encode(fixtureMessage(fx)))).toBe(fx.hex);
    }
  });

  it("decodes every fixture back to the expected message", () => {
    for (const fx of frames) {
      const decoded = decode(hexToBytes(fx.hex));
      expect(messageEquals(decoded, fixtureMessage(fx))).toBe(true);
    }
  });

  it("heartbeat header bytes are pinned", () => {
    const blob = encode({ kind: "heartbeat" });
    expect(Array.from(blob.subarray(0, 6))).toEqual(
      [0x45, 0x53, 0x01, 0x09, 0x00, 0x00]);
    expect(blob.length).toBe(10);
  });
});

describe("round trips", () => {
  it("random sensor frames survive encode/decode", () => {
    for (let n = 0; n < 200; n++) {
      const values = Int16Array.from(
        { length: 24 }, () => Math.floor(Math.random() * 65536) - 32768);
      const msg: Message = { kind: "sensor_frame", seq: n, values };
      expect(messageEquals(decode(encode(msg)), msg)).toBe(true);
    }
  });
});

describe("corruption handling", () => {
  it("rejects every single-byte corruption of a fixed frame", () => {
    const fixed = encode({
      kind: "sensor_frame", seq: 7,
      values: Int16Array.from({ length: 24 }, (_, i) => i - 12),
    });
    for (let pos = 0; pos < fixed.length; pos++) {
      const copy = Uint8Array.from(fixed);
      copy[pos] = copy[pos] ^ 0x5a;
      expect(() => decode(copy)).toThrow(ProtocolError);
    }
  });

  it("rejects trailing bytes", () => {
    const blob = encode({ kind: "heartbeat" });
    const padded = new Uint8Array(blob.length + 1);
    padded.set(blob);
    expect(() => decode(padded)).toThrow(ProtocolError);
  });
});

describe("fragmentation", () => {
  it("one byte at a time decodes identically", () => {
    const msgs: Message[] = [
      { kind: "hello", version: 1 },
      { kind: "target_weight", centigrams: 100 },
      { kind: "stage_transition", stage: 2 },
      { kind: "vibration_cmd", duties: Uint8Array.from([255, 0, 0, 0, 0, 0, 0, 0]), durationMs: 200 },
      { kind: "heartbeat" },
    ];
    const blob = msgs.map(encode);
    const all = new Uint8Array(blob.reduce((n, b) => n + b.length, 0));
    let off = 0;
    for (const b of blob) { all.set(b, off); off += b.length; }

    const dec = new FrameDecoder();
    const got: Message[] = [];
    for (let i = 0; i < all.length; i++) {
      got.push(...dec.feed(all.subarray(i, i + 1)));
    }
    expect(got.length).toBe(msgs.length);
    got.forEach((m, i) => expect(messageEquals(m, msgs[i])).toBe(true));
    expect(dec.pendingBytes).toBe(0);
  });
});
