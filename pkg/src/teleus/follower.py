"""Follower tracking-behavior model.

A reaction-delay line (on top of whatever the network adds) feeds a
first-order lag toward the delayed leader pose composed with a constant
per-session offset; white pose noise is added to the reported output only.
The lag state snaps to its first available target: the follower places the
transducer on the virtual one before tracking begins, so with a constant
leader the error equals the constant offset immediately and exactly.
"""

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import quat


@dataclass(frozen=True)
class FollowerParams:
    reaction_delay_ms: float = 250.0
    time_constant_ms: float = 150.0
    offset_mm: tuple | None = None  # None: magnitude sampled from offset_range_mm
    offset_range_mm: tuple = (5.0, 40.0)
    rot_offset: tuple | None = None  # (angle_deg, axis) or None: sampled
    rot_offset_range_deg: tuple = (3.0, 10.0)
    noise_pos_mm: float = 2.0
    noise_rot_deg: float = 1.0

    def __post_init__(self):
        if self.reaction_delay_ms < 0 or self.time_constant_ms < 0:
            raise ValueError("delays must be non-negative")
        if self.noise_pos_mm < 0 or self.noise_rot_deg < 0:
            raise ValueError("noise levels must be non-negative")


def _unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    n = np.linalg.norm(v)
    while n < 1e-12:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
    return v / n


class FollowerModel:
    def __init__(
        self,
        params: FollowerParams,
        tick_dt_s: float,
        noise_rng: np.random.Generator,
        offset_rng: np.random.Generator,
    ):
        self.params = params
        self._dt = tick_dt_s
        self._rng = noise_rng
        tau = params.time_constant_ms / 1000.0
        self._alpha = 1.0 if tau == 0.0 else 1.0 - math.exp(-tick_dt_s / tau)
        self._reaction_us = int(round(params.reaction_delay_ms * 1000.0))

        if params.offset_mm is not None:
            self.offset_m = np.asarray(params.offset_mm, dtype=np.float64) / 1000.0
        else:
            lo, hi = params.offset_range_mm
            self.offset_m = _unit_vector(offset_rng) * (offset_rng.uniform(lo, hi) / 1000.0)
        if params.rot_offset is not None:
            angle_deg, axis = params.rot_offset
            self.rot_offset = quat.from_axis_angle(np.asarray(axis, dtype=np.float64), np.deg2rad(angle_deg))
        else:
            lo, hi = params.rot_offset_range_deg
            self.rot_offset = quat.from_axis_angle(_unit_vector(offset_rng), np.deg2rad(offset_rng.uniform(lo, hi)))

        self._pending: deque = deque()  # (available_at_us, position, orientation)
        self._target: tuple | None = None
        self._pos: np.ndarray | None = None
        self._ori: np.ndarray | None = None

    def observe(self, delivered_us: int, position, orientation) -> None:
        """Feed one network-delayed leader pose into the reaction-delay line."""
        self._pending.append(
            (delivered_us + self._reaction_us, np.asarray(position, dtype=np.float64), np.asarray(orientation, dtype=np.float64))
        )

    def step(self, now_us: int) -> tuple[np.ndarray, np.ndarray] | None:
        """Advance one tick; returns the reported pose, or None before any target."""
        while self._pending and self._pending[0][0] <= now_us:
            _, pos, ori = self._pending.popleft()
            self._target = (pos, ori)
        if self._target is None:
            return None
        tgt_pos = self._target[0] + self.offset_m
        tgt_ori = quat.multiply(self._target[1], self.rot_offset)
        if self._pos is None:
            self._pos = tgt_pos.copy()
            self._ori = tgt_ori.copy()
        else:
            self._pos = self._pos + self._alpha * (tgt_pos - self._pos)
            self._ori = quat.slerp(self._ori, tgt_ori, self._alpha)

        out_pos = self._pos
        out_ori = self._ori
        if self.params.noise_pos_mm > 0.0:
            out_pos = out_pos + self._rng.normal(0.0, self.params.noise_pos_mm / 1000.0, 3)
        if self.params.noise_rot_deg > 0.0:
            wobble = quat.from_axis_angle(
                _unit_vector(self._rng), self._rng.normal(0.0, np.deg2rad(self.params.noise_rot_deg))
            )
            out_ori = quat.multiply(out_ori, wobble)
        return out_pos.copy(), quat.normalize(out_ori)
