"""Unit-quaternion helpers, (w, x, y, z) component order throughout.

Functions accept shape (4,) or (n, 4) float64 arrays; batch inputs produce
batch outputs. Quaternions q and -q denote the same rotation; sign-handling
is explicit in each function that cares.
"""

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    return q / n


def conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def multiply(q1, q2) -> np.ndarray:
    """Hamilton product q1 * q2 (appl. order: q2's rotation, then q1's)."""
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    w1, x1, y1, z1 = np.moveaxis(q1, -1, 0)
    w2, x2, y2, z2 = np.moveaxis(q2, -1, 0)
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def from_axis_angle(axis, angle_rad: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle_rad
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def rotation_angle(q) -> np.ndarray:
    """Geodesic rotation angle in radians, sign-insensitive.

    2*atan2(||vec||, |w|): equal to 2*acos(|w|) but stable near identity.
    """
    q = np.asarray(q, dtype=np.float64)
    vec = np.linalg.norm(q[..., 1:], axis=-1)
    return 2.0 * np.arctan2(vec, np.abs(q[..., 0]))


def sign_align(q, reference=None) -> np.ndarray:
    """Flip quaternion signs so dot(q, reference) >= 0 (reference: identity)."""
    q = np.asarray(q, dtype=np.float64)
    ref = IDENTITY if reference is None else np.asarray(reference, dtype=np.float64)
    dots = (q * ref).sum(axis=-1, keepdims=True)
    return np.where(dots < 0, -q, q)


def slerp(q0, q1, alpha: float) -> np.ndarray:
    """Spherical interpolation from q0 (alpha=0) to q1 (alpha=1), short arc."""
    q0 = normalize(q0)
    q1 = normalize(q1)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > 1.0 - 1e-12:
        return normalize(q0 + alpha * (q1 - q0))
    theta = np.arccos(min(dot, 1.0))
    s = np.sin(theta)
    return (np.sin((1.0 - alpha) * theta) * q0 + np.sin(alpha * theta) * q1) / s


def chordal_mean(quats) -> np.ndarray:
    """Normalized arithmetic mean of sign-aligned quaternions."""
    q = sign_align(np.asarray(quats, dtype=np.float64).reshape(-1, 4))
    m = q.mean(axis=0)
    n = np.linalg.norm(m)
    if n == 0.0:
        return IDENTITY.copy()
    return m / n


def rotate_vector(q, v) -> np.ndarray:
    """Rotate 3-vector(s) v by unit quaternion q."""
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    qv = np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)
    return multiply(multiply(q, qv), conjugate(q))[..., 1:]
