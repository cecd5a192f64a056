"""Ellipsoid patient model: fit, membership, normals, penetration, contact force.

Patient frame: +x along the patient's longitudinal axis, +y vertically up
from the bed, +z lateral with z(patient-right) > z(patient-left). The
ellipsoid semi-axes (a, b, c) pair with (z, y, x) respectively; c is the
deliberately-large longitudinal semi-axis.

All positions are meters, forces Newtons. Vectors are float64 numpy arrays
of shape (3,) in (x, y, z) order.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels


class DegenerateCalibration(ValueError):
    """Calibration points cannot define a valid ellipsoid."""


class DegeneratePoint(ValueError):
    """Point coincides with the ellipsoid center; normal is undefined."""


NO_INTERSECTION = _kernels.NO_INTERSECTION

#: Default longitudinal semi-axis, meters. Deliberately much larger than any
#: torso so the model is insensitive along x.
DEFAULT_LONG_SEMI_AXIS = 10.0


def vec3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([x, y, z], dtype=np.float64)


def _as_vec3(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite, got {a}")
    return a


@dataclass(frozen=True)
class CalibrationSet:
    """The four pressed points: xiphoid, patient extreme left/right, bed level."""

    p_xiphoid: np.ndarray
    p_left: np.ndarray
    p_right: np.ndarray
    p_bed: np.ndarray

    def __post_init__(self):
        for name in ("p_xiphoid", "p_left", "p_right", "p_bed"):
            object.__setattr__(self, name, _as_vec3(getattr(self, name), name))
        if not self.p_right[2] > self.p_left[2]:
            raise DegenerateCalibration(
                f"patient-right z ({self.p_right[2]}) must exceed patient-left z ({self.p_left[2]})"
            )
        if not self.p_xiphoid[1] > self.p_bed[1]:
            raise DegenerateCalibration(
                f"xiphoid height ({self.p_xiphoid[1]}) must exceed bed height ({self.p_bed[1]})"
            )


@dataclass(frozen=True)
class EllipsoidModel:
    """Axis-aligned ellipsoid: center plus semi-axes (a, b, c) along (z, y, x)."""

    center: np.ndarray
    semi_axes: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center, "center"))
        a, b, c = (float(s) for s in self.semi_axes)
        if not (a > 0 and b > 0 and c > 0):
            raise ValueError(f"semi-axes must be positive, got {(a, b, c)}")
        if c < max(a, b):
            raise ValueError(f"longitudinal semi-axis c={c} must be >= max(a, b)={max(a, b)}")
        object.__setattr__(self, "semi_axes", (a, b, c))

    @property
    def q_diag(self) -> np.ndarray:
        """Diagonal of the inverse shape matrix in (x, y, z) order."""
        a, b, c = self.semi_axes
        return np.array([1.0 / (c * c), 1.0 / (b * b), 1.0 / (a * a)])


@dataclass(frozen=True)
class ContactParams:
    """Diagonal spring (N/m) and damper (N*s/m) gains, (x, y, z) order."""

    kp: np.ndarray = field(default_factory=lambda: np.array([500.0, 500.0, 500.0]))
    kd: np.ndarray = field(default_factory=lambda: np.array([5.0, 5.0, 5.0]))

    def __post_init__(self):
        object.__setattr__(self, "kp", _as_vec3(self.kp, "kp"))
        object.__setattr__(self, "kd", _as_vec3(self.kd, "kd"))
        if np.any(self.kp < 0) or np.any(self.kd < 0):
            raise ValueError("contact gains must be non-negative")


@dataclass(frozen=True)
class ContactResult:
    penetrating: bool
    depth: float
    normal: np.ndarray
    force: np.ndarray


def fit_ellipsoid(cal: CalibrationSet, long_semi_axis: float = DEFAULT_LONG_SEMI_AXIS) -> EllipsoidModel:
    """Fit the patient ellipsoid from the four calibration points.

    a spans the patient laterally, b vertically; the fit leaves the
    ellipsoid tangent to the bed plane (center_y - b == bed_y exactly).
    """
    z2 = cal.p_left[2]
    z3 = cal.p_right[2]
    y1 = cal.p_xiphoid[1]
    y4 = cal.p_bed[1]
    a = (z3 - z2) / 2.0
    b = (y1 - y4) / 2.0
    z_c = (z3 + z2) / 2.0
    y_c = (y1 + y4) / 2.0
    x_c = cal.p_xiphoid[0]
    if long_semi_axis < max(a, b):
        raise DegenerateCalibration(
            f"longitudinal semi-axis {long_semi_axis} smaller than fitted lateral/vertical axes {(a, b)}"
        )
    return EllipsoidModel(center=vec3(x_c, y_c, z_c), semi_axes=(a, b, long_semi_axis))


def _points_2d(p) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    return arr.reshape(1, 3) if arr.ndim == 1 else arr


def _check_off_center(points: np.ndarray, center: np.ndarray):
    if np.any(np.all(points == center, axis=1)):
        raise DegeneratePoint("point coincides with ellipsoid center")


def implicit_value(m: EllipsoidModel, p) -> float:
    """Evaluate the ellipsoid's quadratic form at p (<1 strictly inside)."""
    return float(_kernels.implicit_value_batch(_points_2d(p), m.center, m.q_diag)[0])


def implicit_value_batch(m: EllipsoidModel, points) -> np.ndarray:
    return _kernels.implicit_value_batch(_points_2d(points), m.center, m.q_diag)


def surface_normal(m: EllipsoidModel, p) -> np.ndarray:
    """Outward unit normal of the scaled ellipsoid passing through p."""
    pts = _points_2d(p)
    _check_off_center(pts, m.center)
    n = (pts[0] - m.center) * m.q_diag
    return n / np.linalg.norm(n)


def penetration_depth(m: EllipsoidModel, p) -> tuple[float, np.ndarray]:
    """Signed depth along the outward normal to the ellipsoid surface.

    Positive iff p is strictly inside. Of the two ray-surface roots the one
    of smaller magnitude (the near-surface intersection) is returned;
    NO_INTERSECTION if the ray misses entirely.
    """
    pts = _points_2d(p)
    _check_off_center(pts, m.center)
    depth, nhat = _kernels.penetration_batch(pts, m.center, m.q_diag)
    return float(depth[0]), nhat[0]


def penetration_depth_batch(m: EllipsoidModel, points) -> tuple[np.ndarray, np.ndarray]:
    pts = _points_2d(points)
    _check_off_center(pts, m.center)
    return _kernels.penetration_batch(pts, m.center, m.q_diag)


def contact_force(m: EllipsoidModel, p, v, params: ContactParams) -> ContactResult:
    """Spring-damper proxy force at handle position p with handle velocity v.

    Out of contact (depth <= 0) the force is identically zero: damping is
    only applied while penetrating, so free-space motion stays force-free.
    """
    pts = _points_2d(p)
    _check_off_center(pts, m.center)
    vel = _points_2d(_as_vec3(v, "velocity"))
    depth, nhat, force = _kernels.contact_force_batch(pts, vel, m.center, m.q_diag, params.kp, params.kd)
    d = float(depth[0])
    return ContactResult(penetrating=d > 0.0, depth=d, normal=nhat[0], force=force[0])


def contact_force_batch(m: EllipsoidModel, points, vels, params: ContactParams):
    pts = _points_2d(points)
    _check_off_center(pts, m.center)
    return _kernels.contact_force_batch(pts, _points_2d(vels), m.center, m.q_diag, params.kp, params.kd)
