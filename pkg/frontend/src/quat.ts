/** Minimal unit-quaternion helpers, (w, x, y, z) order, matching the wire. */

import type { Quat, Vec3 } from "./protocol.js";

export const IDENTITY: Quat = [1, 0, 0, 0];

export function multiply(a: Quat, b: Quat): Quat {
  const [w1, x1, y1, z1] = a;
  const [w2, x2, y2, z2] = b;
  return [
    w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
    w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
    w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
    w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
  ];
}

export function normalize(q: Quat): Quat {
  const n = Math.hypot(...q);
  return q.map((c) => c / n) as Quat;
}

export function fromAxisAngle(axis: Vec3, angleRad: number): Quat {
  const n = Math.hypot(...axis) || 1;
  const s = Math.sin(angleRad / 2);
  return [Math.cos(angleRad / 2), (s * axis[0]) / n, (s * axis[1]) / n, (s * axis[2]) / n];
}

export function rotateVector(q: Quat, v: Vec3): Vec3 {
  const [w, x, y, z] = q;
  // q * (0,v) * conj(q), expanded
  const tx = 2 * (y * v[2] - z * v[1]);
  const ty = 2 * (z * v[0] - x * v[2]);
  const tz = 2 * (x * v[1] - y * v[0]);
  return [
    v[0] + w * tx + y * tz - z * ty,
    v[1] + w * ty + z * tx - x * tz,
    v[2] + w * tz + x * ty - y * tx,
  ];
}
