"""Deterministic session engine: fixed-rate tick loop over the emulated link.

Each tick: sample the leader pose, stream it over the forward link, feed
arrivals through the follower model (calibration script first, tracking
once the ellipsoid is fitted), stream the follower's force+pose back,
run the capture logic on what arrived, render the leader-side proxy
contact force, and append one trajectory record. (config, seed) fully
determine the log.
"""

import math
from dataclasses import replace
from enum import Enum

import numpy as np

from . import quat
from .calibration import CalibrationProcedure, CalibrationScript
from .config import SessionConfig, config_hash
from .follower import FollowerModel
from .geometry import contact_force
from .leader import WaypointLeader, build_scan_waypoints, hover_pose
from .netsim import EmulatedLink
from .protocol import (
    ChannelId,
    ChannelSequencer,
    ForcePosePayload,
    PosePayload,
    TextPayload,
    WireMessage,
    decode,
    encode,
)
from .trajectory import Pose, TrajectoryLog, TrajectoryRecord, records_to_log

#: leader-handle velocity estimate: first differences through this low-pass
VELOCITY_CUTOFF_HZ = 20.0


class SessionPhase(Enum):
    CALIBRATION = "calibration"
    SCANNING = "scanning"
    FROZEN = "frozen"
    ENDED = "ended"


class SessionError(RuntimeError):
    pass


class _VelocityFilter:
    def __init__(self, dt_s: float, cutoff_hz: float = VELOCITY_CUTOFF_HZ):
        self._dt = dt_s
        self._beta = 1.0 - math.exp(-2.0 * math.pi * cutoff_hz * dt_s)
        self._prev: np.ndarray | None = None
        self.value = np.zeros(3)

    def update(self, position: np.ndarray) -> np.ndarray:
        if self._prev is not None:
            raw = (position - self._prev) / self._dt
            self.value = self.value + self._beta * (raw - self.value)
        self._prev = position.copy()
        return self.value


class SessionEngine:
    def __init__(self, config: SessionConfig, live: bool = False):
        self.config = config
        self.live = live
        self.dt_us = int(round(1e6 / config.tick_rate_hz))
        self.dt_s = self.dt_us / 1e6
        self.n_ticks = int(round(config.duration_s * config.tick_rate_hz))

        seeds = np.random.SeedSequence(config.seed).generate_state(4, np.uint64)
        self.link_fwd = EmulatedLink(replace(config.network, seed=int(seeds[0])))
        self.link_back = EmulatedLink(replace(config.network, seed=int(seeds[1])))
        self.follower = FollowerModel(
            config.follower,
            self.dt_s,
            noise_rng=np.random.Generator(np.random.PCG64(int(seeds[2]))),
            offset_rng=np.random.Generator(np.random.PCG64(int(seeds[3]))),
        )
        self.cal_proc = CalibrationProcedure(config.calibration)
        self.cal_script = CalibrationScript(config.calibration, start_position=config.calibration.bed)

        self.phase = SessionPhase.CALIBRATION
        self.ellipsoid = None
        self.contact = config.contact
        self.leader_traj: WaypointLeader | None = None
        self.scan_start_us: int | None = None
        self._hover = hover_pose(config.calibration.xiphoid)
        self._freeze_pose: tuple | None = None
        self._freeze_requested = False
        self._live_pose: tuple = self._hover

        self._now_us = 0
        self._seq_leader = ChannelSequencer()
        self._seq_follower = ChannelSequencer()
        self._seq_bridge = ChannelSequencer()
        self._v_leader = _VelocityFilter(self.dt_s)
        self._v_follower = _VelocityFilter(self.dt_s)
        self._last_follower: tuple = self.cal_script.sample(0.0)[:2]

        self.records: list[TrajectoryRecord] = []
        self.outbox: list[bytes] = []  # frames for the live console bridge
        self._err_n = 0
        self._err_sq_pos = 0.0
        self._err_sq_ang = 0.0
        self._err_sum = np.zeros(3)

    # ------------------------------------------------------------------
    # live-mode inputs (drained by the serve bridge before each tick)
    # ------------------------------------------------------------------

    def set_leader_pose(self, position, orientation) -> None:
        self._live_pose = (
            np.asarray(position, dtype=np.float64),
            quat.normalize(np.asarray(orientation, dtype=np.float64)),
        )

    def handle_control(self, text: str) -> None:
        parts = text.split()
        if not parts:
            return
        cmd, args = parts[0].upper(), parts[1:]
        if cmd == "FREEZE":
            self._freeze_requested = True
        elif cmd == "UNFREEZE":
            self._freeze_requested = False
        elif cmd == "GAIN":
            kp, kd = self.contact.kp.copy(), self.contact.kd.copy()
            for arg in args:
                key, _, val = arg.partition("=")
                if key == "kp":
                    kp = np.full(3, float(val))
                elif key == "kd":
                    kd = np.full(3, float(val))
            self.contact = replace(self.contact, kp=kp, kd=kd)
        elif cmd == "ADVANCE" and self.phase == SessionPhase.CALIBRATION:
            # manual step advance: capture the follower's last reported position
            step = self.cal_proc.force_capture(self._now_us, self._last_follower[0])
            if step is not None:
                self._on_capture(step)

    # ------------------------------------------------------------------
    # tick loop
    # ------------------------------------------------------------------

    def run(self) -> TrajectoryLog:
        for i in range(self.n_ticks):
            self.tick(i * self.dt_us)
        self.phase = SessionPhase.ENDED
        return self.build_log()

    def _leader_pose(self, now_us: int, phase: SessionPhase) -> tuple:
        if self.live:
            return self._live_pose
        if phase == SessionPhase.CALIBRATION:
            return self._hover
        if phase == SessionPhase.FROZEN and self._freeze_pose is not None:
            return self._freeze_pose
        return self.leader_traj.pose((now_us - self.scan_start_us) / 1e6)

    def _update_freeze(self, now_us: int) -> None:
        if self.phase not in (SessionPhase.SCANNING, SessionPhase.FROZEN):
            return
        if self.live:
            want_frozen = self._freeze_requested
        else:
            t_rel = (now_us - self.scan_start_us) / 1e6
            want_frozen = any(a <= t_rel < b for a, b in self.config.freeze_windows)
        if want_frozen and self.phase == SessionPhase.SCANNING:
            self.phase = SessionPhase.FROZEN
            self._freeze_pose = self._last_leader
        elif not want_frozen and self.phase == SessionPhase.FROZEN:
            self.phase = SessionPhase.SCANNING
            self._freeze_pose = None

    def _phase_tag(self, phase: SessionPhase, cal_step: int) -> str:
        if phase == SessionPhase.CALIBRATION:
            return f"cal-{min(cal_step, 4)}"
        return "frozen" if phase == SessionPhase.FROZEN else "scan"

    def _on_capture(self, step: int) -> None:
        pt = self.cal_proc.points[step - 1]
        text = f"POINT step={step} x={pt[0]!r} y={pt[1]!r} z={pt[2]!r}"
        self._emit_calibration_event(text)
        if self.cal_proc.done:
            self._begin_scanning()

    def _emit_calibration_event(self, text: str) -> None:
        msg = WireMessage(
            ChannelId.CALIBRATION,
            self._seq_leader.take(ChannelId.CALIBRATION),
            self._now_us,
            TextPayload(text),
        )
        frame = encode(msg)
        self.link_fwd.send(frame, self._now_us, channel=ChannelId.CALIBRATION)
        self.outbox.append(frame)

    def _begin_scanning(self) -> None:
        self.ellipsoid = self.cal_proc.model
        self.phase = SessionPhase.SCANNING
        self.scan_start_us = self._now_us
        m = self.ellipsoid
        self._emit_calibration_event(
            "FITTED cx={!r} cy={!r} cz={!r} a={!r} b={!r} c={!r}".format(*m.center, *m.semi_axes)
        )
        if not self.live:
            remaining_s = (self.n_ticks * self.dt_us - self._now_us) / 1e6
            self.leader_traj = WaypointLeader(
                build_scan_waypoints(m, self.config.scan, self._hover, 0.0, remaining_s)
            )

    def tick(self, now_us: int) -> None:
        self._now_us = now_us
        self._update_freeze(now_us)
        # snapshot: a capture mid-tick changes self.phase for the NEXT tick only
        phase = self.phase
        cal_step = self.cal_proc.step

        lpos, lori = self._leader_pose(now_us, phase)
        self._last_leader = (lpos, lori)
        v_leader = self._v_leader.update(lpos)

        frame = encode(
            WireMessage(
                ChannelId.EXPERT_POSE,
                self._seq_leader.take(ChannelId.EXPERT_POSE),
                now_us,
                PosePayload(tuple(lpos), tuple(lori)),
            )
        )
        self.link_fwd.send(frame, now_us, channel=ChannelId.EXPERT_POSE)

        for t_del, raw in self.link_fwd.poll_with_times(now_us):
            msg = decode(raw)
            if msg.channel == ChannelId.EXPERT_POSE:
                self.follower.observe(t_del, msg.payload.position, msg.payload.orientation)

        if phase == SessionPhase.CALIBRATION:
            fpos, fori, f_meas = self.cal_script.sample(now_us / 1e6)
            self._v_follower.update(fpos)
        else:
            stepped = self.follower.step(now_us)
            if stepped is not None:
                fpos, fori = stepped
            else:
                fpos, fori = self._last_follower
            v_f = self._v_follower.update(fpos)
            f_meas = np.zeros(3)
            if self.ellipsoid is not None and not np.array_equal(fpos, self.ellipsoid.center):
                f_meas = contact_force(self.ellipsoid, fpos, v_f, self.contact).force
        self._last_follower = (fpos, fori)

        back = encode(
            WireMessage(
                ChannelId.FOLLOWER_FORCE_POSE,
                self._seq_follower.take(ChannelId.FOLLOWER_FORCE_POSE),
                now_us,
                ForcePosePayload(tuple(f_meas), PosePayload(tuple(fpos), tuple(quat.normalize(fori)))),
            )
        )
        self.link_back.send(back, now_us, channel=ChannelId.FOLLOWER_FORCE_POSE)

        for _, raw in self.link_back.poll_with_times(now_us):
            msg = decode(raw)
            if msg.channel != ChannelId.FOLLOWER_FORCE_POSE:
                continue
            if self.phase == SessionPhase.CALIBRATION and not self.cal_proc.done:
                step = self.cal_proc.feed(msg.timestamp_us, msg.payload.force, msg.payload.pose.position)
                if step is not None:
                    self._on_capture(step)

        force = np.zeros(3)
        if phase in (SessionPhase.SCANNING, SessionPhase.FROZEN) and self.ellipsoid is not None:
            force = contact_force(self.ellipsoid, lpos, v_leader, self.contact).force
            e = fpos - lpos
            r = quat.multiply(quat.conjugate(lori), fori)
            self._err_n += 1
            self._err_sq_pos += float(e @ e)
            self._err_sum += e
            self._err_sq_ang += float(quat.rotation_angle(r)) ** 2

        self.records.append(
            TrajectoryRecord(
                t_us=now_us,
                leader=Pose(lpos.copy(), np.asarray(lori, dtype=np.float64).copy()),
                follower=Pose(fpos.copy(), np.asarray(fori, dtype=np.float64).copy()),
                force=np.asarray(force, dtype=np.float64).copy(),
                phase=self._phase_tag(phase, cal_step),
            )
        )

        if self.live:
            self._emit_live_frames(now_us, fpos, fori, force)

    # ------------------------------------------------------------------
    # live streaming + summary
    # ------------------------------------------------------------------

    def rmse_so_far(self) -> tuple[float, float]:
        """(position mm, orientation deg) RMSE over scanning-phase ticks so far."""
        if self._err_n == 0:
            return 0.0, 0.0
        return (
            math.sqrt(self._err_sq_pos / self._err_n) * 1000.0,
            math.degrees(math.sqrt(self._err_sq_ang / self._err_n)),
        )

    def _emit_live_frames(self, now_us: int, fpos, fori, force) -> None:
        self.outbox.append(
            encode(
                WireMessage(
                    ChannelId.FOLLOWER_FORCE_POSE,
                    self._seq_bridge.take(ChannelId.FOLLOWER_FORCE_POSE),
                    now_us,
                    ForcePosePayload(tuple(force), PosePayload(tuple(fpos), tuple(quat.normalize(fori)))),
                )
            )
        )
        rp, ra = self.rmse_so_far()
        state = (
            f"STATE phase={self.phase.value} cal_step={min(self.cal_proc.step, 4)} "
            f"t_us={now_us} rmse_pos_mm={rp:.6f} rmse_ang_deg={ra:.6f}"
        )
        if self.ellipsoid is not None:
            m = self.ellipsoid
            state += " ellipsoid=" + ",".join(repr(float(v)) for v in (*m.center, *m.semi_axes))
        self.outbox.append(
            encode(
                WireMessage(
                    ChannelId.CONTROL,
                    self._seq_bridge.take(ChannelId.CONTROL),
                    now_us,
                    TextPayload(state),
                )
            )
        )

    def build_log(self) -> TrajectoryLog:
        header = {
            "format": "1",
            "config_hash": config_hash(self.config),
            "seed": str(self.config.seed),
            "scan_id": str(self.config.scan_id),
            "tick_rate_hz": str(self.config.tick_rate_hz),
            "duration_s": repr(float(self.config.duration_s)),
            "offset_m": ",".join(repr(float(v)) for v in self.follower.offset_m),
            "rot_offset": ",".join(repr(float(v)) for v in self.follower.rot_offset),
            "kp": ",".join(repr(float(v)) for v in self.contact.kp),
            "kd": ",".join(repr(float(v)) for v in self.contact.kd),
        }
        if self.ellipsoid is not None:
            m = self.ellipsoid
            header["ellipsoid"] = ",".join(repr(float(v)) for v in (*m.center, *m.semi_axes))
        return records_to_log(self.records, header)


def run_session(config: SessionConfig) -> TrajectoryLog:
    return SessionEngine(config).run()
