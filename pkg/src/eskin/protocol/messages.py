"""Binary wire format of the tactile link.

Frame layout (little-endian):

    magic 'ES' | version u8 = 1 | type u8 | payload_len u16 | payload
    | crc32 u32 over all preceding bytes (IEEE polynomial)

Sensor values travel as i16 centi-microtesla, duty cycles as u8
(0-255 = 0-100%), target weights as u16 centigrams.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from enum import IntEnum

MAGIC = b"ES"
WIRE_VERSION = 1
HEADER_LEN = 6  # magic + version + type + payload_len
CRC_LEN = 4

N_SENSOR_VALUES = 24
N_DUTY_CHANNELS = 8


class ProtocolError(ValueError):
    """Base class for framing/decoding failures."""


class BadMagicError(ProtocolError):
    pass


class UnknownTypeError(ProtocolError):
    pass


class LengthError(ProtocolError):
    pass


class CrcError(ProtocolError):
    pass


class TruncatedError(ProtocolError):
    pass


class FieldError(ProtocolError):
    """Payload decodes structurally but violates a field invariant."""


class ControlCode(IntEnum):
    MOVE_XP = 0x01
    MOVE_XN = 0x02
    MOVE_YP = 0x03
    MOVE_YN = 0x04
    MOVE_ZP = 0x05
    MOVE_ZN = 0x06
    GRASP = 0x07
    RELEASE = 0x08
    TILT_UP = 0x09
    TILT_DOWN = 0x0A
    VIB_START = 0x0B
    VIB_STOP = 0x0C
    CONFIRM = 0x0D


@dataclass(frozen=True)
class Hello:
    version: int = WIRE_VERSION


@dataclass(frozen=True)
class SensorFrame:
    seq: int
    values_centi_ut: tuple[int, ...]  # 24 x i16

    def __post_init__(self):
        if len(self.values_centi_ut) != N_SENSOR_VALUES:
            raise ValueError("SensorFrame needs 24 values")


@dataclass(frozen=True)
class VibrationCmd:
    duties: tuple[int, ...]  # 8 x u8, 255 = 100%
    duration_ms: int

    def __post_init__(self):
        if len(self.duties) != N_DUTY_CHANNELS:
            raise ValueError("VibrationCmd needs 8 duty bytes")


@dataclass(frozen=True)
class ControlCmd:
    code: ControlCode


@dataclass(frozen=True)
class TargetWeight:
    centigrams: int  # grams x 100


@dataclass(frozen=True)
class StageTransition:
    stage: int  # 1-6

    def __post_init__(self):
        if not 1 <= self.stage <= 6:
            raise ValueError(f"stage {self.stage} outside 1-6")


@dataclass(frozen=True)
class CollisionEvent:
    magnitude: int  # u8


@dataclass(frozen=True)
class Ack:
    seq: int


@dataclass(frozen=True)
class Heartbeat:
    pass


Message = (Hello | SensorFrame | VibrationCmd | ControlCmd | TargetWeight
           | StageTransition | CollisionEvent | Ack | Heartbeat)

_TYPE_CODES = {
    Hello: 0x01,
    SensorFrame: 0x02,
    VibrationCmd: 0x03,
    ControlCmd: 0x04,
    TargetWeight: 0x05,
    StageTransition: 0x06,
    CollisionEvent: 0x07,
    Ack: 0x08,
    Heartbeat: 0x09,
}
_CODE_TYPES = {v: k for k, v in _TYPE_CODES.items()}


def _encode_payload(msg: Message) -> bytes:
    if isinstance(msg, Hello):
        return struct.pack("<B", msg.version)
    if isinstance(msg, SensorFrame):
        return struct.pack("<I24h", msg.seq, *msg.values_centi_ut)
    if isinstance(msg, VibrationCmd):
        return struct.pack("<8BH", *msg.duties, msg.duration_ms)
    if isinstance(msg, ControlCmd):
        return struct.pack("<B", int(msg.code))
    if isinstance(msg, TargetWeight):
        return struct.pack("<H", msg.centigrams)
    if isinstance(msg, StageTransition):
        return struct.pack("<B", msg.stage)
    if isinstance(msg, CollisionEvent):
        return struct.pack("<B", msg.magnitude)
    if isinstance(msg, Ack):
        return struct.pack("<I", msg.seq)
    if isinstance(msg, Heartbeat):
        return b""
    raise TypeError(f"not a wire message: {msg!r}")


def _decode_payload(kind: type, payload: bytes) -> Message:
    try:
        if kind is Hello:
            return Hello(*struct.unpack("<B", payload))
        if kind is SensorFrame:
            fields = struct.unpack("<I24h", payload)
            return SensorFrame(fields[0], tuple(fields[1:]))
        if kind is VibrationCmd:
            fields = struct.unpack("<8BH", payload)
            return VibrationCmd(tuple(fields[:8]), fields[8])
        if kind is ControlCmd:
            raw = struct.unpack("<B", payload)[0]
            try:
                return ControlCmd(ControlCode(raw))
            except ValueError as exc:
                raise FieldError(f"unknown control code {raw:#x}") from exc
        if kind is TargetWeight:
            return TargetWeight(*struct.unpack("<H", payload))
        if kind is StageTransition:
            raw = struct.unpack("<B", payload)[0]
            try:
                return StageTransition(raw)
            except ValueError as exc:
                raise FieldError(str(exc)) from exc
        if kind is CollisionEvent:
            return CollisionEvent(*struct.unpack("<B", payload))
        if kind is Ack:
            return Ack(*struct.unpack("<I", payload))
        if kind is Heartbeat:
            if payload:
                raise LengthError("Heartbeat carries no payload")
            return Heartbeat()
    except struct.error as exc:
        raise LengthError(f"payload size wrong for {kind.__name__}") from exc
    raise UnknownTypeError(f"no decoder for {kind}")


def encode(msg: Message) -> bytes:
    payload = _encode_payload(msg)
    head = MAGIC + struct.pack("<BBH", WIRE_VERSION, _TYPE_CODES[type(msg)],
                               len(payload))
    body = head + payload
    return body + struct.pack("<I", zlib.crc32(body))


def decode(data: bytes) -> Message:
    """Decode exactly one complete frame."""
    msg, used = _decode_prefix(data)
    if used != len(data):
        raise LengthError(f"{len(data) - used} trailing bytes after frame")
    return msg


def _decode_prefix(data: bytes) -> tuple[Message, int]:
    if len(data) < HEADER_LEN:
        raise TruncatedError("incomplete header")
    if data[:2] != MAGIC:
        raise BadMagicError(f"bad magic {data[:2]!r}")
    version, type_code, payload_len = struct.unpack("<BBH", data[2:6])
    if version != WIRE_VERSION:
        raise UnknownTypeError(f"unsupported wire version {version}")
    total = HEADER_LEN + payload_len + CRC_LEN
    if len(data) < total:
        raise TruncatedError(f"frame needs {total} bytes, have {len(data)}")
    body = data[:HEADER_LEN + payload_len]
    (crc,) = struct.unpack("<I", data[HEADER_LEN + payload_len:total])
    if zlib.crc32(body) != crc:
        raise CrcError("crc mismatch")
    if type_code not in _CODE_TYPES:
        raise UnknownTypeError(f"unknown frame type {type_code:#x}")
    msg = _decode_payload(_CODE_TYPES[type_code], bytes(data[6:6 + payload_len]))
    return msg, total


class FrameDecoder:
    """Incremental decoder tolerating arbitrary fragmentation.

    feed() buffers bytes and returns every complete message. The
    transport is assumed reliable and in-order, so any framing error is
    fatal for the stream and raises.
    """

    def __init__(self):
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Message]:
        self._buf.extend(data)
        out = []
        while True:
            try:
                msg, used = _decode_prefix(self._buf)
            except TruncatedError:
                break
            del self._buf[:used]
            out.append(msg)
        return out

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)
