"""Metric, quality-aggregation, and correlation tests with frozen oracles."""

import math

import numpy as np
import pytest
from scipy import stats as sstats

from teleus import analytics, quat
from teleus.analytics import (
    EmptyList,
    EmptyLog,
    InsufficientData,
    QualityScore,
    TrackingReport,
    aggregate_scans,
    mean_quality_per_scan,
    mean_sd,
    orientation_metrics,
    position_metrics,
    quality_summary,
    rmse_quality_correlation,
    tracking_report,
)
from teleus.trajectory import TrajectoryLog

TABLE_POS = (31.9, 41.3, 29.8, 30.8, 44.3, 32.7, 22.7, 51.8, 19.3, 22.7, 24.0)
TABLE_NPOS = (14.2, 6.99, 8.88, 8.09, 18.5, 11.3, 9.13, 11.6, 5.14, 8.90, 7.84)
TABLE_ANG = (18.3, 11.5, 8.04, 9.21, 15.2, 11.5, 6.46, 15.1, 8.89, 11.5, 9.59)
# quality means per scan: scan 2 lowest at 2.1, scan 8 highest at 5.0
QUALITY_MEANS = (4.3, 2.1, 4.6, 4.4, 3.9, 4.1, 4.7, 5.0, 4.5, 4.2, 4.4)


def make_log(leader_pos, follower_pos, leader_quat=None, follower_quat=None) -> TrajectoryLog:
    n = len(leader_pos)
    if leader_quat is None:
        leader_quat = np.tile(quat.IDENTITY, (n, 1))
    if follower_quat is None:
        follower_quat = leader_quat.copy()
    return TrajectoryLog(
        header={},
        t_us=np.arange(n, dtype=np.int64) * 10_000,
        leader_pos=np.asarray(leader_pos, dtype=np.float64),
        leader_quat=np.asarray(leader_quat, dtype=np.float64),
        follower_pos=np.asarray(follower_pos, dtype=np.float64),
        follower_quat=np.asarray(follower_quat, dtype=np.float64),
        force=np.zeros((n, 3)),
        phase=np.array(["scan"] * n, dtype="U8"),
    )


def random_walk(rng, n):
    return np.cumsum(rng.normal(0, 0.002, (n, 3)), axis=0) + np.array([0.5, 0.2, 0.0])


# ---------------------------------------------------------------------------
# position metrics
# ---------------------------------------------------------------------------


def test_identical_trajectories_zero():
    rng = np.random.default_rng(1)
    p = random_walk(rng, 300)
    rmse, nrmse, off = position_metrics(make_log(p, p.copy()))
    assert rmse == 0.0 and nrmse == 0.0
    np.testing.assert_array_equal(off, np.zeros(3))


def test_pure_offset():
    rng = np.random.default_rng(2)
    p = random_walk(rng, 400)
    log = make_log(p, p + np.array([0.010, 0.0, 0.0]))
    rmse, nrmse, off = position_metrics(log)
    assert rmse == pytest.approx(10.0, abs=1e-9)
    assert nrmse <= 1e-9
    np.testing.assert_allclose(off, [10.0, 0.0, 0.0], atol=1e-9)


def test_offset_plus_noise_closed_form():
    rng = np.random.default_rng(3)
    n = 10_000
    p = random_walk(rng, n)
    noise = rng.normal(0.0, 0.005, (n, 3))
    log = make_log(p, p + np.array([0.030, 0.0, 0.0]) + noise)
    rmse, nrmse, _ = position_metrics(log)
    assert rmse == pytest.approx(math.sqrt(30**2 + 3 * 5**2), rel=0.03)
    assert nrmse == pytest.approx(math.sqrt(75), rel=0.03)


def test_normalization_dominance_property():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n = int(rng.integers(2, 200))
        log = make_log(rng.normal(size=(n, 3)), rng.normal(size=(n, 3)))
        rmse, nrmse, _ = position_metrics(log)
        assert nrmse <= rmse + 1e-9


def test_empty_log_rejected():
    log = make_log(np.zeros((5, 3)), np.zeros((5, 3)))
    log.phase = np.array(["cal-1"] * 5, dtype="U8")
    with pytest.raises(EmptyLog):
        position_metrics(log)


def test_scale_is_exactly_metric():
    rng = np.random.default_rng(5)
    p = random_walk(rng, 50)
    f = p + rng.normal(0, 0.01, (50, 3))
    rmse, nrmse, off = position_metrics(make_log(p, f))
    e = f - p
    assert rmse == math.sqrt(float((e * e).sum(axis=1).mean())) * 1000.0
    np.testing.assert_array_equal(off, e.mean(axis=0) * 1000.0)


# ---------------------------------------------------------------------------
# orientation metrics
# ---------------------------------------------------------------------------


def rand_quats(rng, n, spread=1.0):
    q = rng.normal(size=(n, 4)) * spread + np.array([2.0, 0, 0, 0])
    return quat.normalize(q)


def test_identical_orientations_zero():
    rng = np.random.default_rng(6)
    p = random_walk(rng, 200)
    q = rand_quats(rng, 200)
    rmse, nrmse, mean_rot = orientation_metrics(make_log(p, p, q, q.copy()))
    assert rmse == pytest.approx(0.0, abs=1e-9)
    assert nrmse == pytest.approx(0.0, abs=1e-9)
    assert abs(abs(mean_rot[0]) - 1.0) <= 1e-12


def test_constant_rotation_offset():
    rng = np.random.default_rng(7)
    n = 300
    p = random_walk(rng, n)
    lq = rand_quats(rng, n)
    off = quat.from_axis_angle([0, 0, 1], math.radians(10.0))
    fq = quat.multiply(lq, off)
    rmse, nrmse, mean_rot = orientation_metrics(make_log(p, p, lq, fq))
    assert rmse == pytest.approx(10.0, abs=1e-9)
    assert nrmse <= 1e-6
    assert math.degrees(quat.rotation_angle(quat.multiply(quat.conjugate(mean_rot), off))) <= 1e-6


def test_injected_offset_recovered_under_noise():
    rng = np.random.default_rng(8)
    n = 4000
    p = random_walk(rng, n)
    lq = rand_quats(rng, n)
    off = quat.from_axis_angle([1, 2, 0.5], math.radians(6.0))
    noise = np.stack([quat.from_axis_angle(rng.normal(size=3), rng.normal(0, math.radians(1.5))) for _ in range(n)])
    fq = quat.multiply(quat.multiply(lq, np.tile(off, (n, 1))), noise)
    rmse, nrmse, mean_rot = orientation_metrics(make_log(p, p, lq, fq))
    residual = quat.rotation_angle(quat.multiply(quat.conjugate(mean_rot), off))
    assert math.degrees(residual) <= 0.5
    assert nrmse <= rmse


def test_quaternion_sign_flip_invariance():
    rng = np.random.default_rng(9)
    n = 500
    p = random_walk(rng, n)
    lq = rand_quats(rng, n)
    fq = quat.multiply(lq, quat.from_axis_angle([0, 1, 0], 0.2))
    base = orientation_metrics(make_log(p, p, lq, fq))
    flips_l = np.where(rng.random(n) < 0.5, -1.0, 1.0)[:, None]
    flips_f = np.where(rng.random(n) < 0.5, -1.0, 1.0)[:, None]
    flipped = orientation_metrics(make_log(p, p, lq * flips_l, fq * flips_f))
    assert flipped[0] == pytest.approx(base[0], abs=1e-12)
    assert flipped[1] == pytest.approx(base[1], abs=1e-9)


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


def reports_from_values(pos, npos=None, ang=None, nang=None):
    n = len(pos)
    npos = npos or [0.0] * n
    ang = ang or [0.0] * n
    nang = nang or [0.0] * n
    return [
        TrackingReport(p, q, a, b, np.zeros(3), quat.IDENTITY, 100, scan_id=i + 1)
        for i, (p, q, a, b) in enumerate(zip(pos, npos, ang, nang))
    ]


def test_published_aggregate_position():
    agg = aggregate_scans(reports_from_values(TABLE_POS, npos=TABLE_NPOS))
    mean, sd = agg["rmse_pos_mm"]
    assert mean == pytest.approx(31.9, abs=0.1)
    assert sd == pytest.approx(10.2, abs=0.1)
    nmean, nsd = agg["nrmse_pos_mm"]
    assert nmean == pytest.approx(10.1, abs=0.1)
    assert nsd == pytest.approx(3.7, abs=0.1)


def test_single_report_sd_zero():
    agg = aggregate_scans(reports_from_values([31.9]))
    assert agg["rmse_pos_mm"] == (31.9, 0.0)


def test_empty_aggregate_rejected():
    with pytest.raises(EmptyList):
        aggregate_scans([])
    with pytest.raises(EmptyList):
        mean_sd([])


# ---------------------------------------------------------------------------
# quality scores
# ---------------------------------------------------------------------------


def test_all_fives():
    scores = [QualityScore(s, t, r, 5) for s in (1, 2) for t in range(1, 6) for r in "AB"]
    out = quality_summary(scores)
    assert out.mean == 5.0 and out.sd == 0.0
    assert out.frac_ge3_all_raters == 1.0
    assert out.missing_union == 0


def test_single_zero_marks_target_missing_for_union():
    scores = [
        QualityScore(1, 1, "A", 0),
        QualityScore(1, 1, "B", 4),
        QualityScore(1, 2, "A", 4),
        QualityScore(1, 2, "B", 4),
    ]
    out = quality_summary(scores)
    assert out.missing_union == 1
    assert out.mean == 4.0  # the stray 4 on the missing target is excluded too
    assert out.n_scores == 4


def make_55_target_fixture():
    missing_a = {(1, 1), (1, 2), (1, 3), (1, 4)}
    missing_b = {(1, 2), (1, 3), (1, 4), (2, 1), (2, 2), (2, 3)}
    scores = []
    for scan in range(1, 12):
        for tgt in range(1, 6):
            for ri, rater in enumerate("AB"):
                v = 3 + ((scan * 5 + tgt + ri * 2) % 3)
                if rater == "A" and (scan, tgt) in missing_a:
                    v = 0
                if rater == "B" and (scan, tgt) in missing_b:
                    v = 0
                if (scan, tgt, rater) == (3, 1, "A"):
                    v = 2
                scores.append(QualityScore(scan, tgt, rater, v))
    return scores


def test_55_target_fixture_matches_hand_computed():
    out = quality_summary(make_55_target_fixture())
    assert out.n_targets == 55 and out.n_scores == 110
    assert out.missing_union == 7
    assert out.missing_per_rater == {"A": 4, "B": 6}
    assert out.mean == pytest.approx(3.9791666667, abs=1e-9)
    assert out.sd == pytest.approx(0.8457841789, abs=1e-9)
    assert out.frac_ge3_all_raters == pytest.approx(47 / 48, abs=1e-12)
    assert out.distribution == {0: 10, 2: 1, 3: 33, 4: 32, 5: 34}
    assert sum(out.distribution.values()) == out.n_scores


def test_mean_quality_per_scan():
    means = mean_quality_per_scan(make_55_target_fixture())
    assert means[1] == pytest.approx(3.5)
    assert means[2] == pytest.approx(4.25)
    assert means[3] == pytest.approx(3.8)


def test_empty_scores_summary():
    out = quality_summary([])
    assert out.mean is None and out.frac_ge3_all_raters is None
    assert out.distribution == {} and out.n_scores == 0


# ---------------------------------------------------------------------------
# correlation
# ---------------------------------------------------------------------------


def test_perfect_linear_pairs():
    x = np.arange(10, dtype=float)
    res = rmse_quality_correlation(x, 2.0 * x + 1.0)
    assert res.pearson_r == pytest.approx(1.0)
    assert res.pearson_p < 0.05
    assert res.spearman_rho == pytest.approx(1.0)


def test_constant_quality_zero_variance():
    with pytest.raises(InsufficientData, match="zero variance"):
        rmse_quality_correlation([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])


def test_too_few_pairs():
    with pytest.raises(InsufficientData):
        rmse_quality_correlation([1.0, 2.0], [3.0, 4.0])


def test_paper_style_pairs_uncorrelated():
    for values in (TABLE_POS, TABLE_ANG):
        res = rmse_quality_correlation(values, QUALITY_MEANS)
        assert abs(res.pearson_r) < 0.35
        assert res.pearson_p > 0.05
        assert res.spearman_p > 0.05


def test_against_scipy_reference():
    rng = np.random.default_rng(10)
    for _ in range(20):
        n = int(rng.integers(3, 40))
        x = rng.normal(size=n)
        y = rng.normal(size=n) + 0.3 * x
        res = rmse_quality_correlation(x, y)
        r_ref, p_ref = sstats.pearsonr(x, y)
        rho_ref, rho_p_ref = sstats.spearmanr(x, y)
        assert res.pearson_r == pytest.approx(r_ref, abs=1e-12)
        assert res.pearson_p == pytest.approx(p_ref, abs=1e-9)
        assert res.spearman_rho == pytest.approx(rho_ref, abs=1e-12)
        assert res.spearman_p == pytest.approx(rho_p_ref, abs=1e-6)


def test_correlation_symmetry_and_bounds():
    rng = np.random.default_rng(11)
    x, y = rng.normal(size=30), rng.normal(size=30)
    a = rmse_quality_correlation(x, y)
    b = rmse_quality_correlation(y, x)
    assert a.pearson_r == pytest.approx(b.pearson_r, abs=1e-15)
    assert abs(a.pearson_r) <= 1.0 and abs(a.spearman_rho) <= 1.0


# ---------------------------------------------------------------------------
# report from a synthetic rigid-offset log (offset cancellation end to end)
# ---------------------------------------------------------------------------


def test_rigid_offset_cancellation_report():
    rng = np.random.default_rng(12)
    n = 2000
    p = random_walk(rng, n)
    lq = rand_quats(rng, n)
    off_t = np.array([0.012, -0.004, 0.007])
    off_r = quat.from_axis_angle([0.3, 1.0, -0.2], math.radians(7.0))
    log = make_log(p, p + off_t, lq, quat.multiply(lq, off_r))
    rep = tracking_report(log)
    assert rep.nrmse_pos_mm <= 1e-9
    assert rep.nrmse_ang_deg <= 1e-6
    assert rep.rmse_pos_mm == pytest.approx(np.linalg.norm(off_t) * 1000, rel=1e-9)
    assert rep.rmse_ang_deg == pytest.approx(7.0, abs=1e-9)
    assert rep.sample_count == n
