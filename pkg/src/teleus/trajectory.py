"""Pose and trajectory-record types plus the text trajectory-log format.

Log layout: '#'-prefixed header lines (format tag, then key=value pairs,
then a columns line), followed by one record per line:

    t_us  7 leader pose floats  7 follower pose floats  3 force floats  phase

Floats are written with repr (shortest exact form), so a written log parses
back bit-identically and identical runs produce byte-identical files.
"""

from dataclasses import dataclass, field

import numpy as np

FORMAT_TAG = "teleus-log v1"
COLUMNS = (
    "t_us lx ly lz lqw lqx lqy lqz fx fy fz fqw fqx fqy fqz Fx Fy Fz phase"
)

#: phase tags as they appear in the log's last column
PHASE_TAGS = ("cal-1", "cal-2", "cal-3", "cal-4", "scan", "frozen")
#: tags counted as scanning-phase data by the analytics
SCANNING_TAGS = ("scan", "frozen")


class MalformedLog(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        super().__init__(message if line_no is None else f"line {line_no}: {message}")


@dataclass(frozen=True)
class Pose:
    position: np.ndarray  # (3,) meters
    orientation: np.ndarray  # (4,) unit quaternion (w, x, y, z)

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64).reshape(3))
        object.__setattr__(self, "orientation", np.asarray(self.orientation, dtype=np.float64).reshape(4))


@dataclass(frozen=True)
class TrajectoryRecord:
    t_us: int
    leader: Pose
    follower: Pose
    force: np.ndarray
    phase: str


@dataclass
class TrajectoryLog:
    """Column-oriented view of a session log."""

    header: dict
    t_us: np.ndarray
    leader_pos: np.ndarray
    leader_quat: np.ndarray
    follower_pos: np.ndarray
    follower_quat: np.ndarray
    force: np.ndarray
    phase: np.ndarray  # unicode tags
    path: str | None = None

    def __len__(self) -> int:
        return len(self.t_us)

    def scanning_mask(self) -> np.ndarray:
        return np.isin(self.phase, SCANNING_TAGS)


def records_to_log(records: list[TrajectoryRecord], header: dict) -> TrajectoryLog:
    n = len(records)
    t = np.empty(n, dtype=np.int64)
    lp = np.empty((n, 3))
    lq = np.empty((n, 4))
    fp = np.empty((n, 3))
    fq = np.empty((n, 4))
    fr = np.empty((n, 3))
    ph = np.empty(n, dtype="U8")
    for i, r in enumerate(records):
        t[i] = r.t_us
        lp[i] = r.leader.position
        lq[i] = r.leader.orientation
        fp[i] = r.follower.position
        fq[i] = r.follower.orientation
        fr[i] = r.force
        ph[i] = r.phase
    return TrajectoryLog(header, t, lp, lq, fp, fq, fr, ph)


def _fmt_floats(*vals) -> str:
    return " ".join(repr(float(v)) for v in vals)


def write_log(log: TrajectoryLog, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# {FORMAT_TAG}\n")
        for key in sorted(log.header):
            f.write(f"# {key}={log.header[key]}\n")
        f.write(f"# columns: {COLUMNS}\n")
        for i in range(len(log)):
            f.write(
                f"{log.t_us[i]} "
                f"{_fmt_floats(*log.leader_pos[i], *log.leader_quat[i])} "
                f"{_fmt_floats(*log.follower_pos[i], *log.follower_quat[i])} "
                f"{_fmt_floats(*log.force[i])} "
                f"{log.phase[i]}\n"
            )


def read_log(path: str) -> TrajectoryLog:
    header: dict = {}
    rows = []
    phases = []
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
        if first.strip() != f"# {FORMAT_TAG}":
            raise MalformedLog(f"expected '# {FORMAT_TAG}' header", line_no=1)
        for line_no, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("columns:"):
                    continue
                key, sep, value = body.partition("=")
                if sep:
                    header[key.strip()] = value.strip()
                continue
            parts = line.split()
            if len(parts) != 19:
                raise MalformedLog(f"expected 19 columns, got {len(parts)}", line_no=line_no)
            try:
                rows.append([int(parts[0])] + [float(p) for p in parts[1:18]])
            except ValueError as e:
                raise MalformedLog(str(e), line_no=line_no) from None
            if parts[18] not in PHASE_TAGS:
                raise MalformedLog(f"unknown phase tag {parts[18]!r}", line_no=line_no)
            phases.append(parts[18])
    if rows:
        data = np.array(rows, dtype=np.float64)
        t = data[:, 0].astype(np.int64)
        lp, lq = data[:, 1:4], data[:, 4:8]
        fp, fq = data[:, 8:11], data[:, 11:15]
        fr = data[:, 15:18]
    else:
        t = np.empty(0, dtype=np.int64)
        lp, fp, fr = (np.empty((0, 3)) for _ in range(3))
        lq, fq = (np.empty((0, 4)) for _ in range(2))
    return TrajectoryLog(header, t, lp, lq, fp, fq, fr, np.array(phases, dtype="U8"), path=path)
