/**
 * Binary wire codec, byte-compatible with the engine.
 *
 * Frame, little-endian: magic A1 1D | version 01 | channel | seq u32 |
 * timestamp_us u64 | payload_length u32 | payload. Pose payloads are seven
 * f64 (px py pz qw qx qy qz); force-pose prepends three f64; the control and
 * calibration channels carry a u32-length-prefixed UTF-8 text body.
 */

export const MAGIC0 = 0xa1;
export const MAGIC1 = 0x1d;
export const VERSION = 1;
export const HEADER_LEN = 20;
export const MAX_CONTROL_BYTES = 4096;

const QUAT_RENORM_TOL = 1e-9;
const QUAT_REJECT_TOL = 1e-3;

export enum ChannelId {
  ExpertPose = 0,
  FollowerForcePose = 1,
  Control = 2,
  Calibration = 3,
}

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number]; // (w, x, y, z)

export interface PosePayload {
  position: Vec3;
  orientation: Quat;
}

export interface ForcePosePayload {
  force: Vec3;
  pose: PosePayload;
}

export interface TextPayload {
  text: string;
}

export type Payload = PosePayload | ForcePosePayload | TextPayload;

export interface WireMessage {
  channel: ChannelId;
  seq: number;
  timestampUs: bigint;
  payload: Payload;
}

export type ErrorKind =
  | "BadMagic"
  | "BadVersion"
  | "UnknownChannel"
  | "TruncatedFrame"
  | "TrailingBytes"
  | "NonUnitQuaternion"
  | "BadUtf8"
  | "MalformedPayload"
  | "InvalidMessage";

export class ProtocolError extends Error {
  constructor(public readonly kind: ErrorKind, message: string) {
    super(`${kind}: ${message}`);
    this.name = kind;
  }
}

export function isPose(p: Payload): p is PosePayload {
  return "orientation" in p && !("pose" in p);
}

export function isForcePose(p: Payload): p is ForcePosePayload {
  return "pose" in p;
}

export function isText(p: Payload): p is TextPayload {
  return "text" in p;
}

const utf8Decoder = new TextDecoder("utf-8", { fatal: true });
const utf8Encoder = new TextEncoder();

function readPose(view: DataView, offset: number): PosePayload {
  const position: Vec3 = [
    view.getFloat64(offset, true),
    view.getFloat64(offset + 8, true),
    view.getFloat64(offset + 16, true),
  ];
  for (const v of position) {
    if (!Number.isFinite(v)) throw new ProtocolError("MalformedPayload", `non-finite position ${v}`);
  }
  let orientation: Quat = [
    view.getFloat64(offset + 24, true),
    view.getFloat64(offset + 32, true),
    view.getFloat64(offset + 40, true),
    view.getFloat64(offset + 48, true),
  ];
  const norm = Math.hypot(...orientation);
  const dev = Math.abs(norm - 1.0);
  if (!(dev <= QUAT_REJECT_TOL)) {
    // NaN norms fail the comparison and are rejected here too
    throw new ProtocolError("NonUnitQuaternion", `quaternion norm ${norm}`);
  }
  if (dev > QUAT_RENORM_TOL) {
    orientation = orientation.map((c) => c / norm) as Quat;
  }
  return { position, orientation };
}

export function decode(buf: ArrayBuffer | Uint8Array): WireMessage {
  const bytes = buf instanceof Uint8Array ? buf : new Uint8Array(buf);
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  if (bytes.length < 2) throw new ProtocolError("TruncatedFrame", `${bytes.length} bytes, magic needs 2`);
  if (bytes[0] !== MAGIC0 || bytes[1] !== MAGIC1) {
    throw new ProtocolError("BadMagic", `got ${bytes[0]?.toString(16)} ${bytes[1]?.toString(16)}`);
  }
  if (bytes.length < HEADER_LEN) throw new ProtocolError("TruncatedFrame", `${bytes.length} bytes, header needs ${HEADER_LEN}`);
  const version = bytes[2]!;
  if (version !== VERSION) throw new ProtocolError("BadVersion", `version ${version}`);
  const channelRaw = bytes[3]!;
  if (!(channelRaw in ChannelId)) throw new ProtocolError("UnknownChannel", `channel byte ${channelRaw}`);
  const channel = channelRaw as ChannelId;
  const seq = view.getUint32(4, true);
  const timestampUs = view.getBigUint64(8, true);
  const payloadLen = view.getUint32(16, true);
  if (bytes.length < HEADER_LEN + payloadLen) {
    throw new ProtocolError("TruncatedFrame", `payload declares ${payloadLen}, frame carries ${bytes.length - HEADER_LEN}`);
  }
  if (bytes.length > HEADER_LEN + payloadLen) {
    throw new ProtocolError("TrailingBytes", `${bytes.length - HEADER_LEN - payloadLen} bytes past end of frame`);
  }

  let payload: Payload;
  if (channel === ChannelId.ExpertPose) {
    if (payloadLen !== 56) throw new ProtocolError("MalformedPayload", `pose payload must be 56 bytes, got ${payloadLen}`);
    payload = readPose(view, HEADER_LEN);
  } else if (channel === ChannelId.FollowerForcePose) {
    if (payloadLen !== 80) throw new ProtocolError("MalformedPayload", `force-pose payload must be 80 bytes, got ${payloadLen}`);
    const force: Vec3 = [
      view.getFloat64(HEADER_LEN, true),
      view.getFloat64(HEADER_LEN + 8, true),
      view.getFloat64(HEADER_LEN + 16, true),
    ];
    for (const v of force) {
      if (!Number.isFinite(v)) throw new ProtocolError("MalformedPayload", `non-finite force ${v}`);
    }
    payload = { force, pose: readPose(view, HEADER_LEN + 24) };
  } else {
    if (payloadLen < 4) throw new ProtocolError("TruncatedFrame", "text payload shorter than its length prefix");
    const textLen = view.getUint32(HEADER_LEN, true);
    if (textLen > MAX_CONTROL_BYTES) throw new ProtocolError("MalformedPayload", `text body ${textLen} exceeds ${MAX_CONTROL_BYTES}`);
    if (payloadLen !== 4 + textLen) {
      throw new ProtocolError("MalformedPayload", `text declares ${textLen} bytes, carries ${payloadLen - 4}`);
    }
    let text: string;
    try {
      text = utf8Decoder.decode(bytes.subarray(HEADER_LEN + 4, HEADER_LEN + 4 + textLen));
    } catch {
      throw new ProtocolError("BadUtf8", "invalid UTF-8 in text body");
    }
    payload = { text };
  }
  return { channel, seq, timestampUs, payload };
}

function writePose(view: DataView, offset: number, pose: PosePayload): void {
  const [px, py, pz] = pose.position;
  const [qw, qx, qy, qz] = pose.orientation;
  const norm = Math.hypot(qw, qx, qy, qz);
  if (Math.abs(norm - 1.0) > 1e-6) throw new ProtocolError("InvalidMessage", `quaternion norm ${norm}`);
  for (const [i, v] of [px, py, pz, qw, qx, qy, qz].entries()) {
    if (!Number.isFinite(v)) throw new ProtocolError("InvalidMessage", `non-finite component ${i}`);
    view.setFloat64(offset + 8 * i, v, true);
  }
}

export function encode(msg: WireMessage): Uint8Array {
  if (msg.seq < 0 || msg.seq > 0xffffffff) throw new ProtocolError("InvalidMessage", `seq ${msg.seq}`);
  let body: Uint8Array;
  if (msg.channel === ChannelId.ExpertPose) {
    if (!isPose(msg.payload)) throw new ProtocolError("InvalidMessage", "ExpertPose carries a PosePayload");
    body = new Uint8Array(56);
    writePose(new DataView(body.buffer), 0, msg.payload);
  } else if (msg.channel === ChannelId.FollowerForcePose) {
    if (!isForcePose(msg.payload)) throw new ProtocolError("InvalidMessage", "FollowerForcePose carries a ForcePosePayload");
    body = new Uint8Array(80);
    const v = new DataView(body.buffer);
    msg.payload.force.forEach((f, i) => v.setFloat64(8 * i, f, true));
    writePose(v, 24, msg.payload.pose);
  } else if (msg.channel === ChannelId.Control || msg.channel === ChannelId.Calibration) {
    if (!isText(msg.payload)) throw new ProtocolError("InvalidMessage", "text channels carry a TextPayload");
    const raw = utf8Encoder.encode(msg.payload.text);
    if (raw.length > MAX_CONTROL_BYTES) throw new ProtocolError("InvalidMessage", `text body ${raw.length} bytes`);
    body = new Uint8Array(4 + raw.length);
    new DataView(body.buffer).setUint32(0, raw.length, true);
    body.set(raw, 4);
  } else {
    throw new ProtocolError("InvalidMessage", `unknown channel ${msg.channel}`);
  }
  const frame = new Uint8Array(HEADER_LEN + body.length);
  const view = new DataView(frame.buffer);
  frame[0] = MAGIC0;
  frame[1] = MAGIC1;
  frame[2] = VERSION;
  frame[3] = msg.channel;
  view.setUint32(4, msg.seq, true);
  view.setBigUint64(8, msg.timestampUs, true);
  view.setUint32(16, body.length, true);
  frame.set(body, HEADER_LEN);
  return frame;
}

/** Per-channel strictly increasing sequence numbers for this console. */
export class ChannelSequencer {
  private next = new Map<ChannelId, number>();

  take(channel: ChannelId): number {
    const seq = this.next.get(channel) ?? 0;
    this.next.set(channel, seq + 1);
    return seq;
  }
}
