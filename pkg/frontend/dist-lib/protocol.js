/**
 * Binary wire format of the tactile link (browser side).
 *
 * Frame: 'ES' | version u8 = 1 | type u8 | payload_len u16 LE | payload
 *        | crc32 u32 LE over all preceding bytes (IEEE polynomial).
 *
 * Must stay bit-exact with the robot endpoint; the fixture test pins
 * encoded bytes for every message type.
 */
export const WIRE_VERSION = 1;
const MAGIC_0 = 0x45; // 'E'
const MAGIC_1 = 0x53; // 'S'
const HEADER_LEN = 6;
const CRC_LEN = 4;
export var ControlCode;
(function (ControlCode) {
    ControlCode[ControlCode["MOVE_XP"] = 1] = "MOVE_XP";
    ControlCode[ControlCode["MOVE_XN"] = 2] = "MOVE_XN";
    ControlCode[ControlCode["MOVE_YP"] = 3] = "MOVE_YP";
    ControlCode[ControlCode["MOVE_YN"] = 4] = "MOVE_YN";
    ControlCode[ControlCode["MOVE_ZP"] = 5] = "MOVE_ZP";
    ControlCode[ControlCode["MOVE_ZN"] = 6] = "MOVE_ZN";
    ControlCode[ControlCode["GRASP"] = 7] = "GRASP";
    ControlCode[ControlCode["RELEASE"] = 8] = "RELEASE";
    ControlCode[ControlCode["TILT_UP"] = 9] = "TILT_UP";
    ControlCode[ControlCode["TILT_DOWN"] = 10] = "TILT_DOWN";
    ControlCode[ControlCode["VIB_START"] = 11] = "VIB_START";
    ControlCode[ControlCode["VIB_STOP"] = 12] = "VIB_STOP";
    ControlCode[ControlCode["CONFIRM"] = 13] = "CONFIRM";
})(ControlCode || (ControlCode = {}));
const TYPE_CODES = {
    hello: 0x01, sensor_frame: 0x02, vibration_cmd: 0x03, control_cmd: 0x04,
    target_weight: 0x05, stage_transition: 0x06, collision_event: 0x07,
    ack: 0x08, heartbeat: 0x09,
};
export class ProtocolError extends Error {
}
// IEEE CRC32, table-driven, matching zlib.crc32
const CRC_TABLE = (() => {
    const table = new Uint32Array(256);
    for (let n = 0; n < 256; n++) {
        let c = n;
        for (let k = 0; k < 8; k++) {
            c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
        }
        table[n] = c >>> 0;
    }
    return table;
})();
export function crc32(data) {
    let c = 0xffffffff;
    for (let i = 0; i < data.length; i++) {
        c = CRC_TABLE[(c ^ data[i]) & 0xff] ^ (c >>> 8);
    }
    return (c ^ 0xffffffff) >>> 0;
}
function payloadLength(msg) {
    switch (msg.kind) {
        case "hello": return 1;
        case "sensor_frame": return 4 + 48;
        case "vibration_cmd": return 10;
        case "control_cmd": return 1;
        case "target_weight": return 2;
        case "stage_transition": return 1;
        case "collision_event": return 1;
        case "ack": return 4;
        case "heartbeat": return 0;
    }
}
export function encode(msg) {
    const len = payloadLength(msg);
    const out = new Uint8Array(HEADER_LEN + len + CRC_LEN);
    const view = new DataView(out.buffer);
    out[0] = MAGIC_0;
    out[1] = MAGIC_1;
    out[2] = WIRE_VERSION;
    out[3] = TYPE_CODES[msg.kind];
    view.setUint16(4, len, true);
    let p = HEADER_LEN;
    switch (msg.kind) {
        case "hello":
            view.setUint8(p, msg.version);
            break;
        case "sensor_frame":
            view.setUint32(p, msg.seq, true);
            for (let i = 0; i < 24; i++)
                view.setInt16(p + 4 + 2 * i, msg.values[i], true);
            break;
        case "vibration_cmd":
            for (let i = 0; i < 8; i++)
                view.setUint8(p + i, msg.duties[i]);
            view.setUint16(p + 8, msg.durationMs, true);
            break;
        case "control_cmd":
            view.setUint8(p, msg.code);
            break;
        case "target_weight":
            view.setUint16(p, msg.centigrams, true);
            break;
        case "stage_transition":
            if (msg.stage < 1 || msg.stage > 6)
                throw new ProtocolError("stage outside 1-6");
            view.setUint8(p, msg.stage);
            break;
        case "collision_event":
            view.setUint8(p, msg.magnitude);
            break;
        case "ack":
            view.setUint32(p, msg.seq, true);
            break;
        case "heartbeat":
            break;
    }
    const crc = crc32(out.subarray(0, HEADER_LEN + len));
    view.setUint32(HEADER_LEN + len, crc, true);
    return out;
}
function decodePayload(typeCode, view, offset, len) {
    const need = (n) => {
        if (len !== n)
            throw new ProtocolError(`payload length ${len}, expected ${n}`);
    };
    switch (typeCode) {
        case 0x01:
            need(1);
            return { kind: "hello", version: view.getUint8(offset) };
        case 0x02: {
            need(52);
            const values = new Int16Array(24);
            for (let i = 0; i < 24; i++)
                values[i] = view.getInt16(offset + 4 + 2 * i, true);
            return { kind: "sensor_frame", seq: view.getUint32(offset, true), values };
        }
        case 0x03: {
            need(10);
            const duties = new Uint8Array(8);
            for (let i = 0; i < 8; i++)
                duties[i] = view.getUint8(offset + i);
            return { kind: "vibration_cmd", duties, durationMs: view.getUint16(offset + 8, true) };
        }
        case 0x04: {
            need(1);
            const code = view.getUint8(offset);
            if (!(code in ControlCode))
                throw new ProtocolError(`unknown control code ${code}`);
            return { kind: "control_cmd", code };
        }
        case 0x05:
            need(2);
            return { kind: "target_weight", centigrams: view.getUint16(offset, true) };
        case 0x06: {
            need(1);
            const stage = view.getUint8(offset);
            if (stage < 1 || stage > 6)
                throw new ProtocolError(`stage ${stage} outside 1-6`);
            return { kind: "stage_transition", stage };
        }
        case 0x07:
            need(1);
            return { kind: "collision_event", magnitude: view.getUint8(offset) };
        case 0x08:
            need(4);
            return { kind: "ack", seq: view.getUint32(offset, true) };
        case 0x09:
            need(0);
            return { kind: "heartbeat" };
        default:
            throw new ProtocolError(`unknown frame type 0x${typeCode.toString(16)}`);
    }
}
/** Decode one complete frame occupying the whole buffer. */
export function decode(data) {
    const [msg, used] = decodePrefix(data);
    if (used === null || msg === null)
        throw new ProtocolError("truncated frame");
    if (used !== data.length)
        throw new ProtocolError("trailing bytes after frame");
    return msg;
}
/** Returns [message, bytesUsed] or [null, null] when more bytes are needed. */
function decodePrefix(data) {
    if (data.length < HEADER_LEN)
        return [null, null];
    if (data[0] !== MAGIC_0 || data[1] !== MAGIC_1)
        throw new ProtocolError("bad magic");
    const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
    if (data[2] !== WIRE_VERSION)
        throw new ProtocolError(`unsupported version ${data[2]}`);
    const payloadLen = view.getUint16(4, true);
    const total = HEADER_LEN + payloadLen + CRC_LEN;
    if (data.length < total)
        return [null, null];
    const expected = view.getUint32(HEADER_LEN + payloadLen, true);
    if (crc32(data.subarray(0, HEADER_LEN + payloadLen)) !== expected) {
        throw new ProtocolError("crc mismatch");
    }
    return [decodePayload(data[3], view, HEADER_LEN, payloadLen), total];
}
/** Incremental decoder tolerating arbitrary fragmentation. */
export class FrameDecoder {
    buffer = new Uint8Array(0);
    feed(data) {
        const merged = new Uint8Array(this.buffer.length + data.length);
        merged.set(this.buffer);
        merged.set(data, this.buffer.length);
        this.buffer = merged;
        const out = [];
        for (;;) {
            const [msg, used] = decodePrefix(this.buffer);
            if (msg === null || used === null)
                break;
            out.push(msg);
            this.buffer = this.buffer.subarray(used);
        }
        return out;
    }
    get pendingBytes() {
        return this.buffer.length;
    }
}
export function messageEquals(a, b) {
    if (a.kind !== b.kind)
        return false;
    return JSON.stringify(normalize(a)) === JSON.stringify(normalize(b));
}
function normalize(m) {
    switch (m.kind) {
        case "sensor_frame": return { ...m, values: Array.from(m.values) };
        case "vibration_cmd": return { ...m, duties: Array.from(m.duties) };
        default: return m;
    }
}
