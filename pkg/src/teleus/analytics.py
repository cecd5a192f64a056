"""Tracking metrics, image-quality aggregation, and RMSE-quality correlation.

Position error is the per-sample 3-vector follower minus leader; orientation
error is the geodesic angle of the error rotation leader^-1 * follower.
"Normalized" metrics subtract the mean error first: the arithmetic mean for
position, the normalized chordal mean rotation for orientation. Reports are
in millimeters and degrees (exactly 1000x / (180/pi)x the internal SI
values). Scanning and frozen records both count as scanning-phase data.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sstats

from . import quat
from .trajectory import TrajectoryLog


class EmptyLog(ValueError):
    pass


class EmptyList(ValueError):
    pass


class InsufficientData(ValueError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class MalformedScores(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        super().__init__(message if line_no is None else f"line {line_no}: {message}")


@dataclass(frozen=True)
class TrackingReport:
    rmse_pos_mm: float
    nrmse_pos_mm: float
    rmse_ang_deg: float
    nrmse_ang_deg: float
    mean_offset_mm: np.ndarray
    mean_rot_offset: np.ndarray
    sample_count: int
    scan_id: int = 0


def _scanning_errors(log: TrajectoryLog):
    mask = log.scanning_mask()
    if int(mask.sum()) < 2:
        raise EmptyLog("need at least 2 scanning-phase records")
    return mask


def position_metrics(log: TrajectoryLog) -> tuple[float, float, np.ndarray]:
    """(rmse_mm, normalized rmse_mm, mean offset vector mm) over the scan."""
    mask = _scanning_errors(log)
    e = log.follower_pos[mask] - log.leader_pos[mask]
    rmse = math.sqrt(float((e * e).sum(axis=1).mean()))
    mean = e.mean(axis=0)
    r = e - mean
    nrmse = math.sqrt(float((r * r).sum(axis=1).mean()))
    return rmse * 1000.0, nrmse * 1000.0, mean * 1000.0


def orientation_metrics(log: TrajectoryLog) -> tuple[float, float, np.ndarray]:
    """(rmse_deg, normalized rmse_deg, mean error rotation) over the scan."""
    mask = _scanning_errors(log)
    lq = log.leader_quat[mask]
    fq = quat.sign_align(log.follower_quat[mask], lq)
    err = quat.multiply(quat.conjugate(lq), fq)
    angles = quat.rotation_angle(err)
    rmse = math.sqrt(float((angles * angles).mean()))
    mean_rot = quat.chordal_mean(err)
    resid = quat.multiply(quat.conjugate(mean_rot), quat.sign_align(err))
    r_angles = quat.rotation_angle(resid)
    nrmse = math.sqrt(float((r_angles * r_angles).mean()))
    return math.degrees(rmse), math.degrees(nrmse), mean_rot


def tracking_report(log: TrajectoryLog, scan_id: int | None = None) -> TrackingReport:
    rmse_pos, nrmse_pos, mean_off = position_metrics(log)
    rmse_ang, nrmse_ang, mean_rot = orientation_metrics(log)
    if scan_id is None:
        scan_id = int(log.header.get("scan_id", 0))
    return TrackingReport(
        rmse_pos_mm=rmse_pos,
        nrmse_pos_mm=nrmse_pos,
        rmse_ang_deg=rmse_ang,
        nrmse_ang_deg=nrmse_ang,
        mean_offset_mm=mean_off,
        mean_rot_offset=mean_rot,
        sample_count=int(log.scanning_mask().sum()),
        scan_id=scan_id,
    )


def mean_sd(values) -> tuple[float, float]:
    """Arithmetic mean and sample standard deviation; sd of one value is 0."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise EmptyList("no values")
    sd = 0.0 if v.size == 1 else float(v.std(ddof=1))
    return float(v.mean()), sd


AGGREGATE_METRICS = ("rmse_pos_mm", "nrmse_pos_mm", "rmse_ang_deg", "nrmse_ang_deg")


def aggregate_scans(reports: list[TrackingReport]) -> dict[str, tuple[float, float]]:
    """Per-metric mean +/- sample sd across scans."""
    if not reports:
        raise EmptyList("no reports")
    return {m: mean_sd([getattr(r, m) for r in reports]) for m in AGGREGATE_METRICS}


# ---------------------------------------------------------------------------
# image-quality scores
# ---------------------------------------------------------------------------

SCORES_FORMAT_TAG = "teleus-scores v1"


@dataclass(frozen=True)
class QualityScore:
    scan_id: int
    target_id: int  # the five standard targets, 1..5
    rater: str
    value: int  # 0..5; 0 means the target was not obtained

    def __post_init__(self):
        if self.value not in (0, 1, 2, 3, 4, 5):
            raise MalformedScores(f"score must be 0..5, got {self.value}")
        if not 1 <= self.target_id <= 5:
            raise MalformedScores(f"target id must be 1..5, got {self.target_id}")


@dataclass(frozen=True)
class QualitySummary:
    mean: float | None  # over scores of targets no rater marked missing
    sd: float | None
    frac_ge3_all_raters: float | None
    distribution: dict  # score value -> count, all scores incl. zeros
    missing_per_rater: dict  # rater -> count of 0-scores
    missing_union: int  # targets at least one rater marked missing
    n_targets: int
    n_scores: int


def quality_summary(scores: list[QualityScore]) -> QualitySummary:
    distribution: dict = {}
    by_target: dict = {}
    missing_per_rater: dict = {}
    for s in scores:
        distribution[s.value] = distribution.get(s.value, 0) + 1
        by_target.setdefault((s.scan_id, s.target_id), []).append(s)
        missing_per_rater.setdefault(s.rater, 0)
        if s.value == 0:
            missing_per_rater[s.rater] += 1

    union_missing = {k for k, ss in by_target.items() if any(s.value == 0 for s in ss)}
    kept = {k: ss for k, ss in by_target.items() if k not in union_missing}
    kept_values = [s.value for ss in kept.values() for s in ss]

    if kept_values:
        mean, sd = mean_sd(kept_values)
        ge3 = sum(1 for ss in kept.values() if all(s.value >= 3 for s in ss))
        frac = ge3 / len(kept)
    else:
        mean = sd = frac = None
    return QualitySummary(
        mean=mean,
        sd=sd,
        frac_ge3_all_raters=frac,
        distribution=distribution,
        missing_per_rater=missing_per_rater,
        missing_union=len(union_missing),
        n_targets=len(by_target),
        n_scores=len(scores),
    )


def mean_quality_per_scan(scores: list[QualityScore]) -> dict[int, float]:
    """Per-scan mean score, excluding targets any rater marked missing."""
    by_scan: dict = {}
    for s in scores:
        by_scan.setdefault(s.scan_id, []).append(s)
    out = {}
    for scan_id, ss in by_scan.items():
        summary = quality_summary(ss)
        if summary.mean is not None:
            out[scan_id] = summary.mean
    return out


def read_scores(path: str) -> tuple[list[QualityScore], dict]:
    """Parse the score table: one 'scan target rater score' row per line.

    Returns the scores plus the '# key=value' header entries (config_hash
    pairing, typically).
    """
    scores = []
    header: dict = {}
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
        if first.strip() != f"# {SCORES_FORMAT_TAG}":
            raise MalformedScores(f"expected '# {SCORES_FORMAT_TAG}' header", line_no=1)
        for line_no, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                key, sep, value = body.partition("=")
                if sep:
                    header[key.strip()] = value.strip()
                continue
            parts = line.split()
            if len(parts) != 4:
                raise MalformedScores(f"expected 4 columns, got {len(parts)}", line_no=line_no)
            try:
                scores.append(QualityScore(int(parts[0]), int(parts[1]), parts[2], int(parts[3])))
            except (ValueError, MalformedScores) as e:
                raise MalformedScores(str(e), line_no=line_no) from None
    return scores, header


# ---------------------------------------------------------------------------
# correlation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorrelationResult:
    pearson_r: float
    pearson_p: float
    spearman_rho: float
    spearman_p: float
    n: int


def _pearson_with_t_test(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    n = len(x)
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float((xc * xc).sum()) * float((yc * yc).sum()))
    r = float((xc * yc).sum()) / denom
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = abs(r) * math.sqrt((n - 2) / (1.0 - r * r))
    p = 2.0 * float(sstats.t.sf(t, n - 2))
    return r, p


def rmse_quality_correlation(rmse_values, quality_values) -> CorrelationResult:
    """Pearson r (two-sided t-test, n-2 dof) plus rank-based Spearman rho."""
    x = np.asarray(rmse_values, dtype=np.float64)
    y = np.asarray(quality_values, dtype=np.float64)
    if x.shape != y.shape:
        raise InsufficientData("paired inputs differ in length")
    if len(x) < 3:
        raise InsufficientData("need >= 3 pairs")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise InsufficientData("zero variance")
    r, p = _pearson_with_t_test(x, y)
    rho, rho_p = _pearson_with_t_test(sstats.rankdata(x), sstats.rankdata(y))
    return CorrelationResult(r, p, rho, rho_p, len(x))
