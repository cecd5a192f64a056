/**
 * Console state: a pure reducer over received wire messages.
 *
 * The console owns no physics: every field below renders only what the
 * engine streamed. Force and follower pose come from FollowerForcePose
 * frames; phase, calibration step, live RMSE, and the fitted ellipsoid
 * arrive in Control STATE text frames; Calibration frames carry capture
 * events for the step indicator.
 */

import {
  ChannelId,
  isForcePose,
  isText,
  type Vec3,
  type PosePayload,
  type WireMessage,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "reconnecting" | "closed";

export interface EllipsoidParams {
  center: Vec3;
  semiAxes: [number, number, number]; // (a, b, c) paired with (z, y, x)
}

export interface ConsoleState {
  connection: ConnectionStatus;
  closeReason: string | null;
  protocolVersion: string | null;
  phase: string;
  calStep: number;
  tUs: bigint;
  follower: PosePayload | null;
  force: Vec3 | null;
  rmsePosMm: number;
  rmseAngDeg: number;
  ellipsoid: EllipsoidParams | null;
  events: string[];
  framesReceived: number;
  decodeErrors: number;
}

export function initialState(): ConsoleState {
  return {
    connection: "connecting",
    closeReason: null,
    protocolVersion: null,
    phase: "idle",
    calStep: 0,
    tUs: 0n,
    follower: null,
    force: null,
    rmsePosMm: 0,
    rmseAngDeg: 0,
    ellipsoid: null,
    events: [],
    framesReceived: 0,
    decodeErrors: 0,
  };
}

function parseKv(text: string): Map<string, string> {
  const out = new Map<string, string>();
  for (const tok of text.split(/\s+/)) {
    const eq = tok.indexOf("=");
    if (eq > 0) out.set(tok.slice(0, eq), tok.slice(eq + 1));
  }
  return out;
}

function parseEllipsoid(raw: string | undefined): EllipsoidParams | null {
  if (!raw) return null;
  const vals = raw.split(",").map(Number);
  if (vals.length !== 6 || vals.some((v) => !Number.isFinite(v))) return null;
  return {
    center: [vals[0]!, vals[1]!, vals[2]!],
    semiAxes: [vals[3]!, vals[4]!, vals[5]!],
  };
}

export function applyStateText(state: ConsoleState, text: string): ConsoleState {
  const kv = parseKv(text);
  const next = { ...state };
  next.phase = kv.get("phase") ?? state.phase;
  if (kv.has("cal_step")) next.calStep = Number(kv.get("cal_step"));
  if (kv.has("t_us")) next.tUs = BigInt(kv.get("t_us")!);
  if (kv.has("rmse_pos_mm")) next.rmsePosMm = Number(kv.get("rmse_pos_mm"));
  if (kv.has("rmse_ang_deg")) next.rmseAngDeg = Number(kv.get("rmse_ang_deg"));
  const ell = parseEllipsoid(kv.get("ellipsoid"));
  if (ell) next.ellipsoid = ell;
  return next;
}

export function applyMessage(state: ConsoleState, msg: WireMessage): ConsoleState {
  const base: ConsoleState = { ...state, framesReceived: state.framesReceived + 1 };
  if (msg.channel === ChannelId.FollowerForcePose && isForcePose(msg.payload)) {
    return { ...base, follower: msg.payload.pose, force: msg.payload.force, tUs: msg.timestampUs };
  }
  if (msg.channel === ChannelId.Control && isText(msg.payload)) {
    const text = msg.payload.text;
    if (text.startsWith("STATE ")) return applyStateText(base, text);
    return base;
  }
  if (msg.channel === ChannelId.Calibration && isText(msg.payload)) {
    const events = [...state.events, msg.payload.text].slice(-5);
    return { ...base, events };
  }
  return base;
}

/** Connection transitions clear stale physics so nothing dead renders. */
export function applyConnection(state: ConsoleState, status: ConnectionStatus, reason?: string): ConsoleState {
  const next: ConsoleState = { ...state, connection: status, closeReason: reason ?? null };
  if (status !== "open") {
    next.force = null; // never show a stale force after a disconnect
  }
  return next;
}
