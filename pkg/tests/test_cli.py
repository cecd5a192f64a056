"""CLI subcommand behavior through the real argparse entry point."""

import numpy as np
import pytest

from teleus import quat
from teleus.analytics import SCORES_FORMAT_TAG
from teleus.cli import main
from teleus.trajectory import read_log, write_log

TABLE_ROWS = (
    # (pos_rmse, pos_nrmse, ang_rmse, ang_nrmse) per published scan
    (31.9, 14.2, 18.3, 5.70),
    (41.3, 6.99, 11.5, 3.82),
    (29.8, 8.88, 8.04, 3.73),
    (30.8, 8.09, 9.21, 3.72),
    (44.3, 18.5, 15.2, 4.19),
    (32.7, 11.3, 11.5, 10.9),
    (22.7, 9.13, 6.46, 2.63),
    (51.8, 11.6, 15.1, 13.2),
    (19.3, 5.14, 8.89, 5.16),
    (22.7, 8.90, 11.5, 6.94),
    (24.0, 7.84, 9.59, 3.96),
)
QUALITY_MEANS = (4.3, 2.1, 4.6, 4.4, 3.9, 4.1, 4.7, 5.0, 4.5, 4.2, 4.4)


def synth_log_with_metrics(scan_id, rmse_mm, nrmse_mm, rmse_deg, nrmse_deg, n=200):
    """Build a log whose tracking metrics equal the requested values exactly.

    Constant offset of magnitude sqrt(rmse^2 - nrmse^2) plus an alternating
    +/- residual of magnitude nrmse; same construction about the z axis for
    the rotations (the half-angle algebra makes the chordal mean exact).
    """
    from teleus.trajectory import TrajectoryLog

    assert n % 2 == 0
    off = np.sqrt(max(rmse_mm**2 - nrmse_mm**2, 0.0)) / 1000.0
    dev = nrmse_mm / 1000.0
    leader_pos = np.tile(np.array([0.5, 0.2, 0.0]), (n, 1))
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    follower_pos = leader_pos + np.array([off, 0.0, 0.0]) + signs[:, None] * np.array([0.0, dev, 0.0])

    ang_off = np.deg2rad(np.sqrt(max(rmse_deg**2 - nrmse_deg**2, 0.0)))
    ang_dev = np.deg2rad(nrmse_deg)
    leader_quat = np.tile(quat.IDENTITY, (n, 1))
    follower_quat = np.stack(
        [quat.from_axis_angle([0, 0, 1], ang_off + s * ang_dev) for s in signs]
    )
    return TrajectoryLog(
        header={"scan_id": str(scan_id), "config_hash": "f" * 64},
        t_us=np.arange(n, dtype=np.int64) * 10_000,
        leader_pos=leader_pos,
        leader_quat=leader_quat,
        follower_pos=follower_pos,
        follower_quat=follower_quat,
        force=np.zeros((n, 3)),
        phase=np.array(["scan"] * n, dtype="U8"),
    )


def parse_kv(lines):
    out = []
    for line in lines:
        d = {}
        for tok in line.split():
            k, sep, v = tok.partition("=")
            if sep:
                d[k] = v
        out.append((line, d))
    return out


@pytest.fixture
def table_logs(tmp_path):
    paths = []
    for i, row in enumerate(TABLE_ROWS, start=1):
        p = tmp_path / f"scan{i:02d}.log"
        write_log(synth_log_with_metrics(i, *row), str(p))
        paths.append(str(p))
    return paths


@pytest.fixture
def scores_file(tmp_path):
    # integer scores whose per-scan means (after union-missing exclusion)
    # equal QUALITY_MEANS: encode each mean m as alternating scores around it
    p = tmp_path / "scores.txt"
    lines = [f"# {SCORES_FORMAT_TAG}"]
    for scan, mean in enumerate(QUALITY_MEANS, start=1):
        # 10 scores per scan with the exact mean: k scores of 5 and 10-k of x
        # simpler: two raters, 5 targets; use value pairs bracketing the mean
        total = round(mean * 10)
        vals = []
        for _ in range(10):
            hi = min(5, max(1, -(-total // (10 - len(vals)))))
            vals.append(hi)
            total -= hi
        idx = 0
        for tgt in range(1, 6):
            for rater in ("A", "B"):
                lines.append(f"{scan} {tgt} {rater} {vals[idx]}")
                idx += 1
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(p)


def test_bundled_config_equals_defaults():
    from pathlib import Path

    from teleus.config import config_hash, default_config, load_config

    cfg = load_config(str(Path(__file__).parent.parent / "configs" / "default.cfg"))
    assert config_hash(cfg) == config_hash(default_config())


def test_run_determinism(tmp_path, capsys):
    out1, out2 = tmp_path / "a.log", tmp_path / "b.log"
    assert main(["run", "--seed", "42", "--duration", "8", "--out", str(out1)]) == 0
    assert main(["run", "--seed", "42", "--duration", "8", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    captured = capsys.readouterr().out
    assert "config_hash=" in captured and "records=800" in captured


def test_run_rejects_bad_tick_rate(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[session]\ntick_rate_hz = 5\n", encoding="utf-8")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "x.log")]) == 2
    assert "tick_rate out of range" in capsys.readouterr().err


def test_run_rejects_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[session]\ntick_rate = 100\n", encoding="utf-8")
    assert main(["run", "--config", str(cfg)]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_analyze_reproduces_published_aggregate(table_logs, capsys):
    assert main(["analyze", *table_logs]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    aggs = {d["metric"]: (float(d["mean"]), float(d["sd"])) for line, d in parse_kv(lines) if line.startswith("aggregate")}
    assert aggs["rmse_pos_mm"][0] == pytest.approx(31.9, abs=0.1)
    assert aggs["rmse_pos_mm"][1] == pytest.approx(10.2, abs=0.1)
    assert aggs["nrmse_pos_mm"][0] == pytest.approx(10.1, abs=0.1)
    assert aggs["nrmse_pos_mm"][1] == pytest.approx(3.7, abs=0.1)
    assert aggs["rmse_ang_deg"][0] == pytest.approx(11.4, abs=0.1)
    assert aggs["nrmse_ang_deg"][0] == pytest.approx(5.81, abs=0.1)


def test_analyze_rejects_log_without_scan_data(tmp_path, capsys):
    log = synth_log_with_metrics(1, 30.0, 10.0, 10.0, 5.0)
    log.phase = np.array(["cal-1"] * len(log), dtype="U8")
    p = tmp_path / "cal_only.log"
    write_log(log, str(p))
    assert main(["analyze", str(p)]) == 2
    assert "no scanning-phase data" in capsys.readouterr().err


def test_analyze_rejects_malformed_log_with_line_number(tmp_path, capsys):
    p = tmp_path / "broken.log"
    good = synth_log_with_metrics(1, 30.0, 10.0, 10.0, 5.0, n=4)
    write_log(good, str(p))
    with open(p, "a", encoding="utf-8") as f:
        f.write("1 2 3 not-enough-columns\n")
    assert main(["analyze", str(p)]) == 2
    assert "line" in capsys.readouterr().err


def test_analyze_correlation_block(table_logs, scores_file, capsys):
    assert main(["analyze", *table_logs, "--scores", scores_file]) == 0
    out = capsys.readouterr().out
    rows = {d.get("metric"): d for line, d in parse_kv(out.splitlines()) if line.startswith("correlation")}
    assert "rmse_pos_mm" in rows and "rmse_ang_deg" in rows
    for d in rows.values():
        assert abs(float(d["pearson_r"])) <= 1.0
        assert 0.0 <= float(d["pearson_p"]) <= 1.0
        assert "spearman_rho" in d
    assert "quality" in out


def test_replay_validates_logged_forces(tmp_path, capsys):
    out = tmp_path / "r.log"
    assert main(["run", "--seed", "5", "--duration", "12", "--out", str(out)]) == 0
    assert main(["replay", str(out)]) == 0
    kv = dict(
        tok.split("=", 1)
        for line in capsys.readouterr().out.splitlines()
        for tok in [line.strip()]
        if "=" in tok
    )
    assert float(kv["max_force_deviation_n"]) == 0.0


def test_replay_detects_gain_change(tmp_path, capsys):
    out = tmp_path / "r.log"
    main(["run", "--seed", "5", "--duration", "12", "--out", str(out)])
    text = out.read_text(encoding="utf-8").replace("# kp=500.0,500.0,500.0", "# kp=400.0,400.0,400.0")
    tampered = tmp_path / "tampered.log"
    tampered.write_text(text, encoding="utf-8")
    assert main(["replay", str(tampered)]) == 1


def test_scores_hash_mismatch_warns(table_logs, tmp_path, capsys):
    p = tmp_path / "scores.txt"
    p.write_text(f"# {SCORES_FORMAT_TAG}\n# config_hash={'0' * 64}\n1 1 A 5\n", encoding="utf-8")
    assert main(["analyze", table_logs[0], "--scores", str(p)]) == 0
    assert "matches no analyzed log" in capsys.readouterr().err
