#!/usr/bin/env python3
"""Generate cross-language wire-protocol test vectors for the browser console.

Writes frontend/tests/fixtures/frames.json: known-good frames with their
decoded fields, known-bad frames with the expected typed error, and a live
engine run's bridge stream paired with the forces it logged (the console's
force readout must reproduce those bytes exactly).
"""

import json
import pathlib
import sys

import numpy as np

from teleus import protocol as proto
from teleus import quat
from teleus.config import SessionConfig
from teleus.follower import FollowerParams
from teleus.netsim import NetworkPreset
from teleus.session import SessionEngine

OUT = pathlib.Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures" / "frames.json"


def good_frames():
    cases = [
        proto.WireMessage(
            proto.ChannelId.EXPERT_POSE, 0, 0,
            proto.PosePayload((0.0, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0)),
        ),
        proto.WireMessage(
            proto.ChannelId.EXPERT_POSE, 4294967295, 2**63 + 12345,
            proto.PosePayload((0.5, -0.25, 1e-9), tuple(quat.normalize([0.9, 0.1, -0.2, 0.4]))),
        ),
        proto.WireMessage(
            proto.ChannelId.FOLLOWER_FORCE_POSE, 77, 123456789,
            proto.ForcePosePayload((0.0, 2.5, -0.125), proto.PosePayload((0.45, 0.21, -0.05), (1.0, 0.0, 0.0, 0.0))),
        ),
        proto.WireMessage(proto.ChannelId.CONTROL, 3, 17, proto.TextPayload("STOP")),
        proto.WireMessage(proto.ChannelId.CONTROL, 9, 42, proto.TextPayload("STATE phase=scanning cal_step=4 t_us=100000 rmse_pos_mm=12.5 rmse_ang_deg=3.25 ellipsoid=0.5,0.15,0.0,0.15,0.1,10.0")),
        proto.WireMessage(proto.ChannelId.CALIBRATION, 1, 5, proto.TextPayload("POINT step=2 x=0.5 y=0.12 z=-0.15")),
        proto.WireMessage(proto.ChannelId.CONTROL, 0, 0, proto.TextPayload("unicode é✓☃")),
    ]
    out = []
    for msg in cases:
        entry = {
            "hex": proto.encode(msg).hex(),
            "channel": int(msg.channel),
            "seq": msg.seq,
            "timestampUs": str(msg.timestamp_us),
        }
        if isinstance(msg.payload, proto.PosePayload):
            entry["position"] = list(msg.payload.position)
            entry["orientation"] = list(msg.payload.orientation)
        elif isinstance(msg.payload, proto.ForcePosePayload):
            entry["force"] = list(msg.payload.force)
            entry["position"] = list(msg.payload.pose.position)
            entry["orientation"] = list(msg.payload.pose.orientation)
        else:
            entry["text"] = msg.payload.text
        out.append(entry)
    return out


def bad_frames():
    base = proto.encode(
        proto.WireMessage(proto.ChannelId.EXPERT_POSE, 1, 2, proto.PosePayload((0.1, 0.2, 0.3), (1.0, 0.0, 0.0, 0.0)))
    )
    def mut(i, v):
        b = bytearray(base)
        b[i] = v
        return bytes(b)

    import struct
    non_unit = proto.HEADER.pack(proto.MAGIC, 1, 0, 0, 0, 56) + struct.pack("<7d", 0, 0, 0, 0.7, 0.7, 0.7, 0)
    bad_utf8 = proto.HEADER.pack(proto.MAGIC, 1, 2, 0, 0, 6) + struct.pack("<I", 2) + b"\xff\xfe"
    return [
        {"hex": mut(0, 0x00).hex(), "error": "BadMagic"},
        {"hex": mut(2, 9).hex(), "error": "BadVersion"},
        {"hex": mut(3, 7).hex(), "error": "UnknownChannel"},
        {"hex": base[:-1].hex(), "error": "TruncatedFrame"},
        {"hex": (base + b"\x00").hex(), "error": "TrailingBytes"},
        {"hex": base[:8].hex(), "error": "TruncatedFrame"},
        {"hex": non_unit.hex(), "error": "NonUnitQuaternion"},
        {"hex": bad_utf8.hex(), "error": "BadUtf8"},
        {"hex": "", "error": "TruncatedFrame"},
    ]


def live_stream():
    """Short live session; pair every bridge frame with the logged force."""
    cfg = SessionConfig(
        tick_rate_hz=100,
        duration_s=2.0,
        seed=2024,
        network=NetworkPreset(),
        follower=FollowerParams(noise_pos_mm=0.5, noise_rot_deg=0.2),
    )
    engine = SessionEngine(cfg, live=True)
    engine.set_leader_pose([0.5, 0.22, 0.0], [1.0, 0.0, 0.0, 0.0])
    frames = []
    for i in range(engine.n_ticks):
        if i == 150:  # press into the fitted surface once scanning starts
            engine.set_leader_pose([0.5, 0.244, 0.0], [1.0, 0.0, 0.0, 0.0])
        engine.tick(i * engine.dt_us)
        frames.extend(f.hex() for f in engine.outbox)
        engine.outbox.clear()
    log = engine.build_log()
    return {
        "frames": frames,
        "tickUs": engine.dt_us,
        "loggedForces": {str(int(t)): list(map(float, f)) for t, f in zip(log.t_us, log.force)},
        "phases": [str(p) for p in log.phase],
    }


def main():
    OUT.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "protocolVersion": 1,
        "good": good_frames(),
        "bad": bad_frames(),
        "live": live_stream(),
    }
    OUT.write_text(json.dumps(doc, indent=1), encoding="utf-8")
    print(f"wrote {OUT} ({OUT.stat().st_size} bytes)", file=sys.stderr)


if __name__ == "__main__":
    main()
