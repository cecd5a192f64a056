"""Hot numeric kernels for ellipsoid contact evaluation.

All kernels operate on float64 arrays in patient-frame (x, y, z) component
order and take the ellipsoid as (center, q_diag) where q_diag is the
diagonal of the inverse shape matrix, (1/c^2, 1/b^2, 1/a^2). The component
ordering pairs the longitudinal semi-axis c with x and the lateral
semi-axis a with z.

Each kernel ships in two builds with identical semantics: a numba @njit
build and a pure-numpy build. Set TELEOP_PURE_NUMPY=1 to force the numpy
build; otherwise numba is used whenever it imports. `benchmarks/
bench_kernels.py` compares the two.
"""

import os

import numpy as np

# Sentinel depth for points whose normal ray misses the ellipsoid entirely
# (quadratic discriminant < 0). Negative, so "not penetrating" holds.
NO_INTERSECTION = -np.inf


def _want_numba() -> bool:
    if os.environ.get("TELEOP_PURE_NUMPY", "").strip().lower() in ("1", "true", "yes"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


# ---------------------------------------------------------------------------
# pure-numpy builds
# ---------------------------------------------------------------------------

def implicit_value_np(points, center, q_diag):
    """Quadratic form value per point: <1 inside, 1 on surface, >1 outside."""
    u = points - center
    return (u * u) @ q_diag


def penetration_np(points, center, q_diag):
    """Depth along the outward surface normal, per point.

    Returns (depth, nhat). depth > 0 iff the point is strictly inside;
    depth is the root of smaller magnitude of the intersection quadratic,
    NO_INTERSECTION when the ray misses. Rows equal to the center produce
    NaN; callers reject those beforehand.
    """
    u = points - center
    n = u * q_diag
    nn = np.sqrt((n * n).sum(axis=1))
    nhat = n / nn[:, None]
    qa = (nhat * nhat) @ q_diag
    qb = 2.0 * ((u * q_diag) * nhat).sum(axis=1)
    qc = (u * u) @ q_diag - 1.0
    disc = qb * qb - 4.0 * qa * qc
    ok = disc >= 0.0
    root = np.sqrt(np.where(ok, disc, 0.0))
    # stable near-root: -2c / (b + sqrt(disc)); b = 2*||Q u|| > 0 off-center
    depth = np.where(ok, -2.0 * qc / (qb + root), NO_INTERSECTION)
    return depth, nhat


def contact_force_np(points, vels, center, q_diag, kp, kd):
    """Spring-damper proxy force per point: d*Kp*nhat - Kd*v while d > 0."""
    depth, nhat = penetration_np(points, center, q_diag)
    pen = depth > 0.0
    force = np.where(pen[:, None], depth[:, None] * (kp * nhat) - kd * vels, 0.0)
    return depth, nhat, force


# ---------------------------------------------------------------------------
# numba builds
# ---------------------------------------------------------------------------

HAVE_NUMBA = _want_numba()

if HAVE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def implicit_value_nb(points, center, q_diag):
        n = points.shape[0]
        out = np.empty(n)
        for i in range(n):
            s = 0.0
            for k in range(3):
                du = points[i, k] - center[k]
                s += du * du * q_diag[k]
            out[i] = s
        return out

    @njit(cache=True)
    def penetration_nb(points, center, q_diag):
        n = points.shape[0]
        depth = np.empty(n)
        nhat = np.empty((n, 3))
        for i in range(n):
            nn = 0.0
            for k in range(3):
                du = points[i, k] - center[k]
                nk = du * q_diag[k]
                nhat[i, k] = nk
                nn += nk * nk
            nn = np.sqrt(nn)
            qa = 0.0
            qb = 0.0
            qc = -1.0
            for k in range(3):
                du = points[i, k] - center[k]
                nk = nhat[i, k] / nn
                nhat[i, k] = nk
                qa += nk * nk * q_diag[k]
                qb += 2.0 * du * q_diag[k] * nk
                qc += du * du * q_diag[k]
            disc = qb * qb - 4.0 * qa * qc
            if disc >= 0.0:
                depth[i] = -2.0 * qc / (qb + np.sqrt(disc))
            else:
                depth[i] = NO_INTERSECTION
        return depth, nhat

    @njit(cache=True)
    def contact_force_nb(points, vels, center, q_diag, kp, kd):
        depth, nhat = penetration_nb(points, center, q_diag)
        n = points.shape[0]
        force = np.zeros((n, 3))
        for i in range(n):
            if depth[i] > 0.0:
                for k in range(3):
                    force[i, k] = depth[i] * kp[k] * nhat[i, k] - kd[k] * vels[i, k]
        return depth, nhat, force

    implicit_value_batch = implicit_value_nb
    penetration_batch = penetration_nb
    contact_force_batch = contact_force_nb
else:
    implicit_value_batch = implicit_value_np
    penetration_batch = penetration_np
    contact_force_batch = contact_force_np
