"""Scripted leader: waypoint trajectories with smooth interpolation.

The default scan is a serpentine raster over the fitted ellipsoid, lanes
spread laterally, strokes along the patient axis, with the probe pressed a
few millimeters into the surface and a gentle tilt oscillation. Waypoints
are timed from path length and stroke speed; between waypoints position
follows a smoothstep blend and orientation slerps.
"""

from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from . import quat
from .geometry import EllipsoidModel


@dataclass(frozen=True)
class ScanPattern:
    x_span_m: float = 0.3
    z_span_m: float = 0.2
    lanes: int = 6
    press_depth_mm: float = 5.0
    speed_mm_s: float = 45.0
    tilt_deg: float = 12.0

    def __post_init__(self):
        if self.lanes < 1:
            raise ValueError("lanes must be >= 1")
        if self.speed_mm_s <= 0:
            raise ValueError("speed_mm_s must be positive")


@dataclass(frozen=True)
class Waypoint:
    t_s: float
    position: np.ndarray
    orientation: np.ndarray


def _smoothstep(u: float) -> float:
    return u * u * (3.0 - 2.0 * u)


class WaypointLeader:
    """Piecewise smooth pose source over a time-stamped waypoint list."""

    def __init__(self, waypoints: list[Waypoint]):
        if not waypoints:
            raise ValueError("need at least one waypoint")
        self._wp = sorted(waypoints, key=lambda w: w.t_s)
        self._times = [w.t_s for w in self._wp]

    @property
    def end_t_s(self) -> float:
        return self._times[-1]

    def pose(self, t_s: float) -> tuple[np.ndarray, np.ndarray]:
        wp = self._wp
        if t_s <= self._times[0]:
            return wp[0].position.copy(), wp[0].orientation.copy()
        if t_s >= self._times[-1]:
            return wp[-1].position.copy(), wp[-1].orientation.copy()
        i = bisect_right(self._times, t_s) - 1
        w0, w1 = wp[i], wp[i + 1]
        u = (t_s - w0.t_s) / (w1.t_s - w0.t_s)
        s = _smoothstep(u)
        pos = w0.position + s * (w1.position - w0.position)
        ori = quat.slerp(w0.orientation, w1.orientation, s)
        return pos, ori


def hover_pose(xiphoid, clearance_m: float = 0.08) -> tuple[np.ndarray, np.ndarray]:
    """Parked leader pose above the patient while calibration runs."""
    pos = np.asarray(xiphoid, dtype=np.float64) + np.array([0.0, clearance_m, 0.0])
    return pos, quat.IDENTITY.copy()


def _surface_point(model: EllipsoidModel, x: float, z: float, press_m: float) -> np.ndarray:
    a, b, c = model.semi_axes
    xc, yc, zc = model.center
    rest = 1.0 - ((z - zc) / a) ** 2 - ((x - xc) / c) ** 2
    y = yc + b * np.sqrt(max(rest, 1e-6))
    surf = np.array([x, y, z])
    n = (surf - model.center) * model.q_diag
    nhat = n / np.linalg.norm(n)
    return surf - press_m * nhat


def build_scan_waypoints(
    model: EllipsoidModel,
    pattern: ScanPattern,
    start_pose: tuple[np.ndarray, np.ndarray],
    start_t_s: float,
    min_duration_s: float,
    approach_s: float = 1.5,
    step_m: float = 0.03,
) -> list[Waypoint]:
    """Serpentine raster waypoints covering at least min_duration_s of motion."""
    xc, yc, zc = model.center
    xs0, xs1 = xc - pattern.x_span_m / 2.0, xc + pattern.x_span_m / 2.0
    if pattern.lanes == 1:
        lane_zs = [zc]
    else:
        lane_zs = list(np.linspace(zc - pattern.z_span_m / 2.0, zc + pattern.z_span_m / 2.0, pattern.lanes))
    press_m = pattern.press_depth_mm / 1000.0
    tilt = np.deg2rad(pattern.tilt_deg)
    speed = pattern.speed_mm_s / 1000.0

    # one serpentine pass: lanes along x, alternating direction
    pass_points: list[np.ndarray] = []
    pass_phases: list[float] = []  # oscillation phase driving the tilt
    phase = 0.0
    for lane, z in enumerate(lane_zs):
        n_steps = max(2, int(np.ceil((xs1 - xs0) / step_m)) + 1)
        xs = np.linspace(xs0, xs1, n_steps)
        if lane % 2 == 1:
            xs = xs[::-1]
        for x in xs:
            pass_points.append(_surface_point(model, float(x), float(z), press_m))
            pass_phases.append(phase)
            phase += 2.0 * np.pi / (2.0 * n_steps)

    waypoints = [Waypoint(start_t_s, np.asarray(start_pose[0], dtype=np.float64), np.asarray(start_pose[1], dtype=np.float64))]
    t = start_t_s + approach_s
    prev = pass_points[0]
    idx = 0
    direction = 1
    while t - start_t_s < min_duration_s + approach_s:
        p = pass_points[idx]
        ph = pass_phases[idx]
        ori = quat.multiply(
            quat.from_axis_angle([0.0, 1.0, 0.0], 0.5 * tilt * np.cos(ph)),
            quat.from_axis_angle([1.0, 0.0, 0.0], tilt * np.sin(ph)),
        )
        waypoints.append(Waypoint(t, p, ori))
        # ping-pong over the pass so the scan keeps moving for any duration
        if idx + direction < 0 or idx + direction >= len(pass_points):
            direction = -direction
        nxt = pass_points[idx + direction]
        t += max(float(np.linalg.norm(nxt - p)) / speed, 1e-3)
        prev = p
        idx += direction
    return waypoints
