/**
 * Canvas scene: ellipsoid wireframe, both transducer glyphs, the force
 * arrow (scaled in Newtons), and a placeholder bed-plane grid until the
 * ellipsoid arrives. World is the patient frame (x longitudinal, y up,
 * z lateral); the camera is a fixed-orbit orthographic projection, so all
 * projection math is pure and unit-testable.
 */

import type { PosePayload, Vec3 } from "./protocol.js";
import type { ConsoleState, EllipsoidParams } from "./state.js";
import { rotateVector } from "./quat.js";

export interface Camera {
  yawRad: number;
  pitchRad: number;
  scalePxPerM: number;
  screenW: number;
  screenH: number;
  target: Vec3;
}

export function defaultCamera(w: number, h: number): Camera {
  return {
    yawRad: Math.PI / 5,
    pitchRad: Math.PI / 8,
    scalePxPerM: Math.min(w, h) * 1.1,
    screenW: w,
    screenH: h,
    target: [0.5, 0.15, 0.0],
  };
}

/** Orthographic project; returns [xPx, yPx, depth] with +y world up on screen. */
export function projectPoint(p: Vec3, cam: Camera): [number, number, number] {
  const dx = p[0] - cam.target[0];
  const dy = p[1] - cam.target[1];
  const dz = p[2] - cam.target[2];
  const cy = Math.cos(cam.yawRad);
  const sy = Math.sin(cam.yawRad);
  const cp = Math.cos(cam.pitchRad);
  const sp = Math.sin(cam.pitchRad);
  // yaw about the world y axis, then pitch about the camera x axis
  const x1 = cx_of(dx, dz, cy, sy);
  const z1 = -sy * dx + cy * dz;
  const y2 = cp * dy - sp * z1;
  const z2 = sp * dy + cp * z1;
  return [cam.screenW / 2 + x1 * cam.scalePxPerM, cam.screenH / 2 - y2 * cam.scalePxPerM, z2];
}

function cx_of(dx: number, dz: number, cy: number, sy: number): number {
  return cy * dx + sy * dz;
}

export type Polyline = Vec3[];

/** Latitude/longitude rings of the ellipsoid; (a, b, c) pair with (z, y, x). */
export function ellipsoidWireframe(e: EllipsoidParams, rings = 5, segments = 48): Polyline[] {
  const [a, b, cAxis] = e.semiAxes;
  const [cx, cy, cz] = e.center;
  const xr = Math.min(cAxis, 0.45); // the longitudinal axis is deliberately huge; clip for display
  const out: Polyline[] = [];
  for (let r = 0; r < rings; r++) {
    const x = ((r + 0.5) / rings - 0.5) * 2 * xr * 0.8;
    const shrink = Math.sqrt(Math.max(0, 1 - (x / cAxis) ** 2));
    const ring: Polyline = [];
    for (let s = 0; s <= segments; s++) {
      const th = (2 * Math.PI * s) / segments;
      ring.push([cx + x, cy + b * shrink * Math.sin(th), cz + a * shrink * Math.cos(th)]);
    }
    out.push(ring);
  }
  // one longitudinal profile in the xy plane and one in the xz plane
  for (const plane of ["xy", "xz"] as const) {
    const line: Polyline = [];
    for (let s = 0; s <= segments; s++) {
      const x = ((s / segments) - 0.5) * 2 * xr * 0.8;
      const shrink = Math.sqrt(Math.max(0, 1 - (x / cAxis) ** 2));
      line.push(
        plane === "xy"
          ? [cx + x, cy + b * shrink, cz]
          : [cx + x, cy, cz + a * shrink],
      );
    }
    out.push(line);
  }
  return out;
}

export function bedPlaneGrid(y = 0.05, halfSpan = 0.35, lines = 8): Polyline[] {
  const out: Polyline[] = [];
  const c: Vec3 = [0.5, y, 0.0];
  for (let i = 0; i <= lines; i++) {
    const t = (i / lines - 0.5) * 2 * halfSpan;
    out.push([
      [c[0] - halfSpan, y, c[2] + t],
      [c[0] + halfSpan, y, c[2] + t],
    ]);
    out.push([
      [c[0] + t, y, c[2] - halfSpan],
      [c[0] + t, y, c[2] + halfSpan],
    ]);
  }
  return out;
}

/** Probe glyph: body segment along the pose's -y axis plus a head crossbar. */
export function transducerGlyph(pose: PosePayload, size = 0.05): Polyline[] {
  const o = pose.position;
  const q = pose.orientation;
  const tip: Vec3 = o;
  const top = add(o, rotateVector(q, [0, size, 0]));
  const left = add(top, rotateVector(q, [0, 0, -size / 2]));
  const right = add(top, rotateVector(q, [0, 0, size / 2]));
  const nose = add(top, rotateVector(q, [size / 3, 0, 0]));
  return [
    [tip, top],
    [left, right],
    [top, nose],
  ];
}

/** Force arrow from the probe tip, world meters per Newton. */
export function forceArrow(origin: Vec3, force: Vec3, scaleMPerN = 0.02): Polyline[] {
  const mag = Math.hypot(...force);
  if (mag === 0) return [];
  const end = add(origin, scale(force, scaleMPerN));
  const back = scale(force, -0.15 * scaleMPerN);
  const side: Vec3 = Math.abs(force[1]) > 0.9 * mag ? [1, 0, 0] : [0, 1, 0];
  const perp = normalize3(cross(force, side));
  const w = 0.12 * scaleMPerN * mag;
  return [
    [origin, end],
    [add(add(end, back), scale(perp, w)), end, add(add(end, back), scale(perp, -w))],
  ];
}

function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

function normalize3(a: Vec3): Vec3 {
  const n = Math.hypot(...a) || 1;
  return scale(a, 1 / n);
}

export interface SceneStroke {
  points: [number, number][];
  style: string;
  width: number;
}

/** Project everything drawable from the state into screen-space strokes. */
export function buildScene(state: ConsoleState, leaderPose: PosePayload | null, cam: Camera): SceneStroke[] {
  const strokes: SceneStroke[] = [];
  const emit = (polys: Polyline[], style: string, width = 1) => {
    for (const poly of polys) {
      strokes.push({ points: poly.map((p) => { const [x, y] = projectPoint(p, cam); return [x, y] as [number, number]; }), style, width });
    }
  };
  if (state.ellipsoid) {
    emit(ellipsoidWireframe(state.ellipsoid), "#4a7", 1);
  } else {
    emit(bedPlaneGrid(), "#445", 1); // placeholder until calibration fits the patient
  }
  if (leaderPose) emit(transducerGlyph(leaderPose), "#fb3", 2);
  if (state.follower) emit(transducerGlyph(state.follower), "#3af", 2);
  if (state.force && state.follower && leaderPose) {
    emit(forceArrow(leaderPose.position, state.force), "#f44", 2);
  }
  return strokes;
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  state: ConsoleState,
  leaderPose: PosePayload | null,
  cam: Camera,
): void {
  ctx.clearRect(0, 0, cam.screenW, cam.screenH);
  for (const stroke of buildScene(state, leaderPose, cam)) {
    ctx.strokeStyle = stroke.style;
    ctx.lineWidth = stroke.width;
    ctx.beginPath();
    stroke.points.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
    ctx.stroke();
  }
}
