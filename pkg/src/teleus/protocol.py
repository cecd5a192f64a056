"""Binary wire protocol: channel-tagged, sequence-numbered, timestamped frames.

Frame layout, little-endian:

    magic  0xA1 0x1D        2 bytes
    version 0x01            1 byte
    channel                 1 byte
    seq                     u32
    timestamp_us            u64
    payload_length          u32
    payload                 payload_length bytes

Payloads per channel:

    EXPERT_POSE          7 x f64: px py pz qw qx qy qz  (meters; unit quat)
    FOLLOWER_FORCE_POSE  3 x f64 force (N), then the 7 x f64 pose block
    CONTROL              u32 text length, then UTF-8 text (<= 4096 bytes)
    CALIBRATION          same text body as CONTROL (calibration events)

The same byte layout is the contract in-process, in log replay, and inside
binary WebSocket messages on the console bridge.
"""

import math
import struct
from dataclasses import dataclass
from enum import IntEnum

MAGIC = b"\xa1\x1d"
VERSION = 1
HEADER = struct.Struct("<2sBBIQI")
HEADER_LEN = HEADER.size  # 20
_POSE = struct.Struct("<7d")
_FORCE_POSE = struct.Struct("<10d")
_U32 = struct.Struct("<I")

MAX_CONTROL_BYTES = 4096
#: encode requires unit quaternions to this tolerance
QUAT_ENCODE_TOL = 1e-6
#: decode renormalizes deviations above this...
QUAT_RENORM_TOL = 1e-9
#: ...and rejects deviations above this
QUAT_REJECT_TOL = 1e-3


class ProtocolError(ValueError):
    """Base for every codec error; fuzzed input raises nothing else."""


class InvalidMessage(ProtocolError):
    pass


class BadMagic(ProtocolError):
    pass


class BadVersion(ProtocolError):
    pass


class UnknownChannel(ProtocolError):
    pass


class TruncatedFrame(ProtocolError):
    pass


class TrailingBytes(ProtocolError):
    pass


class NonUnitQuaternion(ProtocolError):
    pass


class BadUtf8(ProtocolError):
    pass


class MalformedPayload(ProtocolError):
    pass


class ChannelId(IntEnum):
    EXPERT_POSE = 0
    FOLLOWER_FORCE_POSE = 1
    CONTROL = 2
    CALIBRATION = 3


@dataclass(frozen=True)
class PosePayload:
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]  # (w, x, y, z)


@dataclass(frozen=True)
class ForcePosePayload:
    force: tuple[float, float, float]
    pose: PosePayload


@dataclass(frozen=True)
class TextPayload:
    text: str


@dataclass(frozen=True)
class WireMessage:
    channel: ChannelId
    seq: int
    timestamp_us: int
    payload: PosePayload | ForcePosePayload | TextPayload


def pose_payload(position, orientation) -> PosePayload:
    return PosePayload(tuple(float(v) for v in position), tuple(float(v) for v in orientation))


def _check_pose(p: PosePayload):
    if len(p.position) != 3 or len(p.orientation) != 4:
        raise InvalidMessage("pose payload needs 3 position and 4 orientation components")
    for v in (*p.position, *p.orientation):
        if not math.isfinite(v):
            raise InvalidMessage(f"non-finite pose component {v}")
    norm = math.sqrt(sum(c * c for c in p.orientation))
    if abs(norm - 1.0) > QUAT_ENCODE_TOL:
        raise InvalidMessage(f"quaternion norm {norm} deviates beyond {QUAT_ENCODE_TOL}")


def _encode_text(text: str) -> bytes:
    raw = text.encode("utf-8")
    if len(raw) > MAX_CONTROL_BYTES:
        raise InvalidMessage(f"text body {len(raw)} bytes exceeds {MAX_CONTROL_BYTES}")
    return _U32.pack(len(raw)) + raw


def encode(msg: WireMessage) -> bytes:
    """Serialize one message to its frame bytes."""
    if not isinstance(msg.channel, ChannelId):
        raise InvalidMessage(f"unknown channel {msg.channel!r}")
    if not 0 <= msg.seq <= 0xFFFFFFFF:
        raise InvalidMessage(f"seq {msg.seq} outside u32")
    if not 0 <= msg.timestamp_us <= 0xFFFFFFFFFFFFFFFF:
        raise InvalidMessage(f"timestamp_us {msg.timestamp_us} outside u64")

    if msg.channel == ChannelId.EXPERT_POSE:
        if not isinstance(msg.payload, PosePayload):
            raise InvalidMessage("EXPERT_POSE carries a PosePayload")
        _check_pose(msg.payload)
        body = _POSE.pack(*msg.payload.position, *msg.payload.orientation)
    elif msg.channel == ChannelId.FOLLOWER_FORCE_POSE:
        if not isinstance(msg.payload, ForcePosePayload):
            raise InvalidMessage("FOLLOWER_FORCE_POSE carries a ForcePosePayload")
        if len(msg.payload.force) != 3 or not all(math.isfinite(v) for v in msg.payload.force):
            raise InvalidMessage("force must be 3 finite components")
        _check_pose(msg.payload.pose)
        body = _FORCE_POSE.pack(*msg.payload.force, *msg.payload.pose.position, *msg.payload.pose.orientation)
    elif msg.channel in (ChannelId.CONTROL, ChannelId.CALIBRATION):
        if not isinstance(msg.payload, TextPayload):
            raise InvalidMessage("text channels carry a TextPayload")
        body = _encode_text(msg.payload.text)
    else:  # pragma: no cover - ChannelId is closed
        raise InvalidMessage(f"unhandled channel {msg.channel}")

    return HEADER.pack(MAGIC, VERSION, int(msg.channel), msg.seq, msg.timestamp_us, len(body)) + body


def _decode_pose(body: bytes, offset: int = 0) -> PosePayload:
    vals = _POSE.unpack_from(body, offset)
    position = vals[0:3]
    orientation = vals[3:7]
    for v in position:
        if not math.isfinite(v):
            raise MalformedPayload(f"non-finite position component {v}")
    norm = math.sqrt(sum(c * c for c in orientation))
    dev = abs(norm - 1.0)
    if not dev <= QUAT_REJECT_TOL:  # NaN norms fail the comparison and are rejected
        raise NonUnitQuaternion(f"quaternion norm {norm} deviates beyond {QUAT_REJECT_TOL}")
    if dev > QUAT_RENORM_TOL:
        orientation = tuple(c / norm for c in orientation)
    return PosePayload(tuple(position), tuple(orientation))


def _decode_text(body: bytes) -> TextPayload:
    if len(body) < 4:
        raise TruncatedFrame("text payload shorter than its length prefix")
    (n,) = _U32.unpack_from(body)
    if n > MAX_CONTROL_BYTES:
        raise MalformedPayload(f"text body {n} bytes exceeds {MAX_CONTROL_BYTES}")
    if len(body) != 4 + n:
        raise MalformedPayload(f"text payload declares {n} bytes, carries {len(body) - 4}")
    try:
        return TextPayload(body[4:].decode("utf-8"))
    except UnicodeDecodeError as e:
        raise BadUtf8(str(e)) from None


def decode(frame: bytes) -> WireMessage:
    """Parse exactly one frame; inverse of encode for every valid message."""
    frame = bytes(frame)
    if len(frame) < 2:
        raise TruncatedFrame(f"{len(frame)} bytes, magic needs 2")
    if frame[0:2] != MAGIC:
        raise BadMagic(f"got {frame[0:2]!r}")
    if len(frame) < HEADER_LEN:
        raise TruncatedFrame(f"{len(frame)} bytes, header needs {HEADER_LEN}")
    _, version, channel_raw, seq, timestamp_us, payload_len = HEADER.unpack_from(frame)
    if version != VERSION:
        raise BadVersion(f"version {version}")
    try:
        channel = ChannelId(channel_raw)
    except ValueError:
        raise UnknownChannel(f"channel byte {channel_raw}") from None
    if len(frame) < HEADER_LEN + payload_len:
        raise TruncatedFrame(f"payload declares {payload_len} bytes, frame carries {len(frame) - HEADER_LEN}")
    if len(frame) > HEADER_LEN + payload_len:
        raise TrailingBytes(f"{len(frame) - HEADER_LEN - payload_len} bytes past end of frame")
    body = frame[HEADER_LEN:]

    if channel == ChannelId.EXPERT_POSE:
        if payload_len != _POSE.size:
            raise MalformedPayload(f"pose payload must be {_POSE.size} bytes, got {payload_len}")
        payload = _decode_pose(body)
    elif channel == ChannelId.FOLLOWER_FORCE_POSE:
        if payload_len != _FORCE_POSE.size:
            raise MalformedPayload(f"force-pose payload must be {_FORCE_POSE.size} bytes, got {payload_len}")
        force = struct.unpack_from("<3d", body)
        for v in force:
            if not math.isfinite(v):
                raise MalformedPayload(f"non-finite force component {v}")
        payload = ForcePosePayload(force, _decode_pose(body, 24))
    else:
        payload = _decode_text(body)

    return WireMessage(channel=channel, seq=seq, timestamp_us=timestamp_us, payload=payload)


class ChannelSequencer:
    """Per-channel strictly-increasing sequence numbers for one sender."""

    def __init__(self):
        self._next = {ch: 0 for ch in ChannelId}

    def take(self, channel: ChannelId) -> int:
        seq = self._next[channel]
        self._next[channel] = seq + 1
        return seq
