"""Run configuration: documented text schema, defaults, validation, hashing.

Config files are INI-style ([section] / key = value). Every key has a
default; unknown sections or keys are rejected so a config file plus a seed
fully and unambiguously describes a run. `configs/default.cfg` ships the
schema with comments.
"""

import configparser
import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import CalibrationConfig
from .follower import FollowerParams
from .geometry import ContactParams
from .leader import ScanPattern
from .netsim import PRESETS, NetworkPreset


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    tick_rate_hz: int = 100
    duration_s: float = 60.0
    seed: int = 0
    scan_id: int = 1
    freeze_windows: tuple = ()  # (start_s, end_s) pairs, relative to scan start
    network: NetworkPreset = field(default_factory=lambda: PRESETS["wifi"])
    follower: FollowerParams = field(default_factory=FollowerParams)
    contact: ContactParams = field(default_factory=ContactParams)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    scan: ScanPattern = field(default_factory=ScanPattern)

    def __post_init__(self):
        if not 10 <= self.tick_rate_hz <= 1000:
            raise ConfigError(f"tick_rate out of range [10, 1000]: {self.tick_rate_hz}")
        if self.duration_s <= 0:
            raise ConfigError(f"duration_s must be positive: {self.duration_s}")
        for win in self.freeze_windows:
            if len(win) != 2 or not win[0] < win[1]:
                raise ConfigError(f"freeze window must be start < end, got {win}")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, np.ndarray):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, (tuple, list)):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


def _parse_vec(text: str, n: int, key: str) -> tuple:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != n:
        raise ConfigError(f"{key}: expected {n} comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"{key}: bad number in {text!r}") from None


def _parse_bool(text: str, key: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _parse_freeze(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    windows = []
    for part in text.split(";"):
        a, sep, b = part.partition(":")
        if not sep:
            raise ConfigError(f"freeze: expected start:end, got {part!r}")
        windows.append((float(a), float(b)))
    return tuple(windows)


def _vec_or_none(text: str, n: int, key: str):
    return None if not text.strip() else _parse_vec(text, n, key)


def _rot_or_none(text: str, key: str):
    """Rotation offset literal: 'angle_deg@ax,ay,az'."""
    text = text.strip()
    if not text:
        return None
    angle, sep, axis = text.partition("@")
    if not sep:
        raise ConfigError(f"{key}: expected angle_deg@ax,ay,az, got {text!r}")
    return (float(angle), _parse_vec(axis, 3, key))


# section -> key -> (parser, doc). Parsers close over no state; they map the
# raw string to the value stored in the sections dict consumed below.
_SCHEMA = {
    "session": {
        "tick_rate_hz": (lambda s: int(s), "engine tick rate, Hz"),
        "duration_s": (lambda s: float(s), "total simulated session length, seconds"),
        "seed": (lambda s: int(s), "master seed; all component streams derive from it"),
        "scan_id": (lambda s: int(s), "scan identifier recorded in the log header"),
        "freeze": (_parse_freeze, "image-freeze windows, 'start:end;start:end' seconds after scan start"),
    },
    "network": {
        "preset": (lambda s: s.strip(), "ideal | wifi | 5g | custom"),
        "mean_one_way_delay_ms": (lambda s: float(s), "custom preset: mean one-way delay"),
        "jitter_sd_ms": (lambda s: float(s), "custom preset: delay standard deviation"),
        "drop_prob": (lambda s: float(s), "probability a message is silently dropped"),
        "allow_reorder": (lambda s: _parse_bool(s, "allow_reorder"), "deliver strictly in send order when false"),
    },
    "follower": {
        "reaction_delay_ms": (lambda s: float(s), "human reaction delay line"),
        "time_constant_ms": (lambda s: float(s), "first-order tracking lag"),
        "offset_mm": (lambda s: _vec_or_none(s, 3, "offset_mm"), "constant tracking offset; blank = sampled"),
        "offset_range_mm": (lambda s: _parse_vec(s, 2, "offset_range_mm"), "magnitude range for sampled offset"),
        "rot_offset": (lambda s: _rot_or_none(s, "rot_offset"), "constant rotation offset 'deg@axis'; blank = sampled"),
        "rot_offset_range_deg": (lambda s: _parse_vec(s, 2, "rot_offset_range_deg"), "angle range for sampled rotation offset"),
        "noise_pos_mm": (lambda s: float(s), "per-tick position noise, sd"),
        "noise_rot_deg": (lambda s: float(s), "per-tick orientation noise, sd"),
    },
    "contact": {
        "kp": (lambda s: _parse_vec(s, 3, "kp"), "spring gains, N/m, per axis"),
        "kd": (lambda s: _parse_vec(s, 3, "kd"), "damper gains, N*s/m, per axis"),
    },
    "calibration": {
        "force_threshold_n": (lambda s: float(s), "press force that arms a capture"),
        "hold_ms": (lambda s: float(s), "continuous time above threshold before capture"),
        "step_timeout_s": (lambda s: float(s), "per-point timeout"),
        "press_force_n": (lambda s: float(s), "scripted follower press force"),
        "press_s": (lambda s: float(s), "scripted press duration"),
        "travel_s": (lambda s: float(s), "scripted travel time between points"),
        "xiphoid": (lambda s: _parse_vec(s, 3, "xiphoid"), "calibration point 1, meters"),
        "left": (lambda s: _parse_vec(s, 3, "left"), "calibration point 2: patient extreme left"),
        "right": (lambda s: _parse_vec(s, 3, "right"), "calibration point 3: patient extreme right"),
        "bed": (lambda s: _parse_vec(s, 3, "bed"), "calibration point 4: bed level"),
        "long_semi_axis_m": (lambda s: float(s), "fixed longitudinal semi-axis"),
    },
    "scan": {
        "x_span_m": (lambda s: float(s), "raster extent along the patient axis"),
        "z_span_m": (lambda s: float(s), "raster extent laterally"),
        "lanes": (lambda s: int(s), "raster lane count"),
        "press_depth_mm": (lambda s: float(s), "target penetration while scanning"),
        "speed_mm_s": (lambda s: float(s), "scan stroke speed"),
        "tilt_deg": (lambda s: float(s), "probe tilt oscillation amplitude"),
    },
}


def _sections_from_config(cfg: SessionConfig) -> dict:
    net_preset = "custom"
    for name, p in PRESETS.items():
        if (
            p.mean_one_way_delay_ms == cfg.network.mean_one_way_delay_ms
            and p.jitter_sd_ms == cfg.network.jitter_sd_ms
        ):
            net_preset = name
            break
    f = cfg.follower
    rot = "" if f.rot_offset is None else f"{_fmt(f.rot_offset[0])}@{_fmt(f.rot_offset[1])}"
    return {
        "session": {
            "tick_rate_hz": cfg.tick_rate_hz,
            "duration_s": cfg.duration_s,
            "seed": cfg.seed,
            "scan_id": cfg.scan_id,
            "freeze": ";".join(f"{_fmt(a)}:{_fmt(b)}" for a, b in cfg.freeze_windows),
        },
        "network": {
            "preset": net_preset,
            "mean_one_way_delay_ms": cfg.network.mean_one_way_delay_ms,
            "jitter_sd_ms": cfg.network.jitter_sd_ms,
            "drop_prob": cfg.network.drop_prob,
            "allow_reorder": cfg.network.allow_reorder,
        },
        "follower": {
            "reaction_delay_ms": f.reaction_delay_ms,
            "time_constant_ms": f.time_constant_ms,
            "offset_mm": "" if f.offset_mm is None else _fmt(f.offset_mm),
            "offset_range_mm": f.offset_range_mm,
            "rot_offset": rot,
            "rot_offset_range_deg": f.rot_offset_range_deg,
            "noise_pos_mm": f.noise_pos_mm,
            "noise_rot_deg": f.noise_rot_deg,
        },
        "contact": {"kp": cfg.contact.kp, "kd": cfg.contact.kd},
        "calibration": {
            "force_threshold_n": cfg.calibration.force_threshold_n,
            "hold_ms": cfg.calibration.hold_ms,
            "step_timeout_s": cfg.calibration.step_timeout_s,
            "press_force_n": cfg.calibration.press_force_n,
            "press_s": cfg.calibration.press_s,
            "travel_s": cfg.calibration.travel_s,
            "xiphoid": cfg.calibration.xiphoid,
            "left": cfg.calibration.left,
            "right": cfg.calibration.right,
            "bed": cfg.calibration.bed,
            "long_semi_axis_m": cfg.calibration.long_semi_axis_m,
        },
        "scan": {
            "x_span_m": cfg.scan.x_span_m,
            "z_span_m": cfg.scan.z_span_m,
            "lanes": cfg.scan.lanes,
            "press_depth_mm": cfg.scan.press_depth_mm,
            "speed_mm_s": cfg.scan.speed_mm_s,
            "tilt_deg": cfg.scan.tilt_deg,
        },
    }


def canonical_dump(cfg: SessionConfig) -> str:
    """Stable text rendering of the fully-resolved config."""
    sections = _sections_from_config(cfg)
    lines = []
    for sec in sorted(sections):
        for key in sorted(sections[sec]):
            lines.append(f"{sec}.{key}={_fmt(sections[sec][key])}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: SessionConfig) -> str:
    return hashlib.sha256(canonical_dump(cfg).encode("utf-8")).hexdigest()


def _build(sections: dict) -> SessionConfig:
    s = sections["session"]
    n = sections["network"]
    f = sections["follower"]
    c = sections["contact"]
    cal = sections["calibration"]
    sc = sections["scan"]

    if n["preset"] == "custom":
        network = NetworkPreset(
            n["mean_one_way_delay_ms"], n["jitter_sd_ms"], n["drop_prob"], n["allow_reorder"]
        )
    else:
        try:
            base = PRESETS[n["preset"]]
        except KeyError:
            raise ConfigError(f"unknown network preset {n['preset']!r}") from None
        network = replace(base, drop_prob=n["drop_prob"], allow_reorder=n["allow_reorder"])

    try:
        follower = FollowerParams(
            reaction_delay_ms=f["reaction_delay_ms"],
            time_constant_ms=f["time_constant_ms"],
            offset_mm=f["offset_mm"],
            offset_range_mm=f["offset_range_mm"],
            rot_offset=f["rot_offset"],
            rot_offset_range_deg=f["rot_offset_range_deg"],
            noise_pos_mm=f["noise_pos_mm"],
            noise_rot_deg=f["noise_rot_deg"],
        )
        contact = ContactParams(kp=np.array(c["kp"]), kd=np.array(c["kd"]))
        calibration = CalibrationConfig(
            force_threshold_n=cal["force_threshold_n"],
            hold_ms=cal["hold_ms"],
            step_timeout_s=cal["step_timeout_s"],
            press_force_n=cal["press_force_n"],
            press_s=cal["press_s"],
            travel_s=cal["travel_s"],
            xiphoid=cal["xiphoid"],
            left=cal["left"],
            right=cal["right"],
            bed=cal["bed"],
            long_semi_axis_m=cal["long_semi_axis_m"],
        )
        scan = ScanPattern(
            x_span_m=sc["x_span_m"],
            z_span_m=sc["z_span_m"],
            lanes=sc["lanes"],
            press_depth_mm=sc["press_depth_mm"],
            speed_mm_s=sc["speed_mm_s"],
            tilt_deg=sc["tilt_deg"],
        )
        return SessionConfig(
            tick_rate_hz=s["tick_rate_hz"],
            duration_s=s["duration_s"],
            seed=s["seed"],
            scan_id=s["scan_id"],
            freeze_windows=s["freeze"],
            network=network,
            follower=follower,
            contact=contact,
            calibration=calibration,
            scan=scan,
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None


def default_config() -> SessionConfig:
    return SessionConfig()


def load_config(path: str) -> SessionConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except configparser.Error as e:
        raise ConfigError(f"malformed config {path}: {e}") from None

    sections = _sections_from_config(SessionConfig())  # defaults
    # re-parse defaults through the schema so every entry has its final type
    parsed = {sec: dict(vals) for sec, vals in sections.items()}
    for sec, vals in parsed.items():
        for key in vals:
            parser_fn = _SCHEMA[sec][key][0]
            vals[key] = parser_fn(_fmt(vals[key]))

    for sec in parser.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown config section [{sec}]")
        for key, raw in parser.items(sec):
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in section [{sec}]")
            try:
                parsed[sec][key] = _SCHEMA[sec][key][0](raw)
            except ConfigError:
                raise
            except ValueError:
                raise ConfigError(f"[{sec}] {key}: cannot parse {raw!r}") from None
    return _build(parsed)


def apply_overrides(cfg: SessionConfig, seed=None, preset_name=None, duration_s=None, scan_id=None) -> SessionConfig:
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(f"unknown network preset {preset_name!r}")
        cfg = replace(cfg, network=replace(PRESETS[preset_name], drop_prob=cfg.network.drop_prob,
                                           allow_reorder=cfg.network.allow_reorder))
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if duration_s is not None:
        cfg = replace(cfg, duration_s=duration_s)
    if scan_id is not None:
        cfg = replace(cfg, scan_id=scan_id)
    return cfg
