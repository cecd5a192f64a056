"""Four-point calibration: scripted presses and the threshold-hold capture logic.

The capture side consumes the follower's force+pose stream: a point is
recorded at the first instant the force magnitude has stayed above the
threshold continuously for the hold time, and the force must drop back
below threshold before the next step arms. Steps run in the fixed order
xiphoid, patient extreme left, patient extreme right, bed.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import quat
from .geometry import CalibrationSet, EllipsoidModel, fit_ellipsoid


class CalibrationTimeout(RuntimeError):
    def __init__(self, step: int, elapsed_s: float):
        self.step = step
        super().__init__(f"calibration step {step} exceeded its time limit ({elapsed_s:.1f}s)")


@dataclass(frozen=True)
class CalibrationConfig:
    force_threshold_n: float = 5.0
    hold_ms: float = 300.0
    step_timeout_s: float = 10.0
    press_force_n: float = 6.0
    press_s: float = 0.6
    travel_s: float = 1.0
    xiphoid: tuple = (0.5, 0.25, 0.0)
    left: tuple = (0.5, 0.12, -0.15)
    right: tuple = (0.5, 0.12, 0.15)
    bed: tuple = (0.3, 0.05, 0.1)
    long_semi_axis_m: float = 10.0

    def __post_init__(self):
        if self.force_threshold_n <= 0:
            raise ValueError("force threshold must be positive")
        if self.hold_ms < 0 or self.step_timeout_s <= 0:
            raise ValueError("hold and timeout must be sensible")

    @property
    def points(self) -> tuple:
        return (self.xiphoid, self.left, self.right, self.bed)


#: press-force ramp up/down time within a scripted press
RAMP_S = 0.1
#: dwell after a press before traveling on (lets the force drop below threshold)
RELEASE_S = 0.3


class CalibrationScript:
    """Deterministic follower behavior while calibration runs.

    Timeline per point: travel (smoothstep move), press (trapezoidal force
    profile, position pinned on the point), release dwell.
    """

    def __init__(self, cfg: CalibrationConfig, start_position):
        self.cfg = cfg
        self._segments = []  # (t_end_s, kind, p0, p1)
        t = 0.0
        prev = np.asarray(start_position, dtype=np.float64)
        for pt in cfg.points:
            p = np.asarray(pt, dtype=np.float64)
            t += cfg.travel_s
            self._segments.append((t, "travel", prev, p))
            t += cfg.press_s
            self._segments.append((t, "press", p, p))
            t += RELEASE_S
            self._segments.append((t, "release", p, p))
            prev = p
        self.end_t_s = t

    def sample(self, t_s: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Pose and measured force at script time t_s (seconds from phase start)."""
        ori = quat.IDENTITY.copy()
        seg_start = 0.0
        for t_end, kind, p0, p1 in self._segments:
            if t_s <= t_end:
                u = (t_s - seg_start) / (t_end - seg_start)
                if kind == "travel":
                    s = u * u * (3.0 - 2.0 * u)
                    return p0 + s * (p1 - p0), ori, np.zeros(3)
                if kind == "press":
                    dur = t_end - seg_start
                    ramp = min(RAMP_S, dur / 3.0)
                    dt_in = t_s - seg_start
                    dt_out = t_end - t_s
                    mag = self.cfg.press_force_n * min(1.0, dt_in / ramp, dt_out / ramp)
                    return p0.copy(), ori, np.array([0.0, max(mag, 0.0), 0.0])
                return p0.copy(), ori, np.zeros(3)
            seg_start = t_end
        last = self._segments[-1][3]
        return last.copy(), ori, np.zeros(3)


class CalibrationProcedure:
    """Leader-side capture state machine over the received force+pose stream."""

    def __init__(self, cfg: CalibrationConfig):
        self.cfg = cfg
        self.step = 1  # 1..4 while running, 5 when complete
        self.points: list[np.ndarray] = []
        self.model: EllipsoidModel | None = None
        self.capture_times_us: list[int] = []
        self._hold_us = int(round(cfg.hold_ms * 1000.0))
        self._timeout_us = int(round(cfg.step_timeout_s * 1e6))
        self._cross_start_us: int | None = None
        self._await_release = False
        self._step_start_us: int | None = None

    @property
    def done(self) -> bool:
        return self.model is not None

    def feed(self, t_us: int, force, position) -> int | None:
        """Consume one sample; returns the step number on a capture.

        Raises CalibrationTimeout when the current step overruns its limit.
        On the fourth capture the ellipsoid is fitted and exposed as .model.
        """
        if self.done:
            return None
        if self._step_start_us is None:
            self._step_start_us = t_us
        if t_us - self._step_start_us > self._timeout_us:
            raise CalibrationTimeout(self.step, (t_us - self._step_start_us) / 1e6)

        mag = math.sqrt(float(np.dot(force, force)))
        if self._await_release:
            if mag <= self.cfg.force_threshold_n:
                self._await_release = False
            return None
        if mag > self.cfg.force_threshold_n:
            if self._cross_start_us is None:
                self._cross_start_us = t_us
            elif t_us - self._cross_start_us >= self._hold_us:
                return self._capture(t_us, position)
        else:
            self._cross_start_us = None
        return None

    def force_capture(self, t_us: int, position) -> int | None:
        """Manual step advance: record the given position for the current step."""
        if self.done:
            return None
        return self._capture(t_us, position)

    def _capture(self, t_us: int, position) -> int:
        captured_step = self.step
        self.points.append(np.asarray(position, dtype=np.float64).copy())
        self.capture_times_us.append(t_us)
        self.step += 1
        self._cross_start_us = None
        self._await_release = True
        self._step_start_us = t_us
        if captured_step == 4:
            cal = CalibrationSet(
                p_xiphoid=self.points[0],
                p_left=self.points[1],
                p_right=self.points[2],
                p_bed=self.points[3],
            )
            self.model = fit_ellipsoid(cal, self.cfg.long_semi_axis_m)
        return captured_step


def run_calibration(cfg: CalibrationConfig, stream) -> EllipsoidModel:
    """Drive the capture logic over an iterable of (t_us, force, position)."""
    proc = CalibrationProcedure(cfg)
    last_t = 0
    for t_us, force, position in stream:
        last_t = t_us
        proc.feed(t_us, force, position)
        if proc.done:
            return proc.model
    elapsed = 0.0 if proc._step_start_us is None else (last_t - proc._step_start_us) / 1e6
    raise CalibrationTimeout(proc.step, elapsed)
