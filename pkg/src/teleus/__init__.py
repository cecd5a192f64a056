"""teleus: desk-scale human-teleoperation engine for tele-ultrasound.

An ellipsoid patient model fitted from four pressed points renders contact
forces to a leader steering a virtual transducer over an emulated network;
a follower model (or a live browser console) tracks it, and the analytics
reproduce raw and offset-normalized tracking RMSE plus image-quality
aggregation.
"""

from .geometry import (
    CalibrationSet,
    ContactParams,
    ContactResult,
    EllipsoidModel,
    contact_force,
    fit_ellipsoid,
    implicit_value,
    penetration_depth,
    surface_normal,
    vec3,
)
from .netsim import EmulatedLink, NetworkPreset, preset
from .protocol import ChannelId, WireMessage, decode, encode
from .session import SessionEngine, run_session
from .trajectory import TrajectoryLog, read_log, write_log

__version__ = "0.1.0"

__all__ = [
    "CalibrationSet",
    "ChannelId",
    "ContactParams",
    "ContactResult",
    "EllipsoidModel",
    "EmulatedLink",
    "NetworkPreset",
    "SessionEngine",
    "TrajectoryLog",
    "WireMessage",
    "contact_force",
    "decode",
    "encode",
    "fit_ellipsoid",
    "implicit_value",
    "penetration_depth",
    "preset",
    "read_log",
    "run_session",
    "surface_normal",
    "vec3",
    "write_log",
]
