"""Command-line entry point: run / analyze / replay / serve.

stdout carries machine-parseable key=value lines; diagnostics go to stderr.
Exit codes: 0 success, 1 replay tolerance exceeded, 2 config or input error,
3 runtime error, 4 serve port in use.
"""

import argparse
import logging
import os
import sys

import numpy as np

from .analytics import (
    EmptyLog,
    InsufficientData,
    MalformedScores,
    aggregate_scans,
    mean_quality_per_scan,
    quality_summary,
    read_scores,
    rmse_quality_correlation,
    tracking_report,
)
from .calibration import CalibrationTimeout
from .config import ConfigError, apply_overrides, config_hash, default_config, load_config
from .geometry import ContactParams, EllipsoidModel, contact_force
from .netsim import PRESETS
from .session import SessionEngine, _VelocityFilter
from .trajectory import MalformedLog, read_log, write_log

log = logging.getLogger("teleus")


def _setup_logging() -> None:
    level = os.environ.get("TELEOP_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_run_config(args):
    cfg = load_config(args.config) if args.config else default_config()
    return apply_overrides(cfg, seed=args.seed, preset_name=args.preset, duration_s=args.duration)


def cmd_run(args) -> int:
    try:
        cfg = _load_run_config(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        engine = SessionEngine(cfg)
        session_log = engine.run()
        write_log(session_log, args.out)
    except (CalibrationTimeout, RuntimeError, ValueError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 3
    print(f"log={args.out}")
    print(f"config_hash={config_hash(cfg)}")
    print(f"seed={cfg.seed}")
    print(f"records={len(session_log)}")
    try:
        rep = tracking_report(session_log)
        print(f"rmse_pos_mm={rep.rmse_pos_mm:.6f}")
        print(f"nrmse_pos_mm={rep.nrmse_pos_mm:.6f}")
        print(f"rmse_ang_deg={rep.rmse_ang_deg:.6f}")
        print(f"nrmse_ang_deg={rep.nrmse_ang_deg:.6f}")
    except EmptyLog:
        log.warning("session produced no scanning-phase data")
    return 0


def cmd_analyze(args) -> int:
    reports = []
    hashes = set()
    for path in args.logs:
        try:
            tlog = read_log(path)
            rep = tracking_report(tlog)
        except (OSError, MalformedLog) as e:
            print(f"cannot read {path}: {e}", file=sys.stderr)
            return 2
        except EmptyLog:
            print(f"{path}: no scanning-phase data", file=sys.stderr)
            return 2
        hashes.add(tlog.header.get("config_hash", ""))
        reports.append(rep)
        off = rep.mean_offset_mm
        print(
            f"scan={rep.scan_id} rmse_pos_mm={rep.rmse_pos_mm:.6f} nrmse_pos_mm={rep.nrmse_pos_mm:.6f} "
            f"rmse_ang_deg={rep.rmse_ang_deg:.6f} nrmse_ang_deg={rep.nrmse_ang_deg:.6f} "
            f"mean_offset_mm={off[0]:.3f},{off[1]:.3f},{off[2]:.3f} samples={rep.sample_count}"
        )
    agg = aggregate_scans(reports)
    for metric, (mean, sd) in agg.items():
        print(f"aggregate metric={metric} mean={mean:.6f} sd={sd:.6f}")

    if not args.scores:
        return 0
    try:
        scores, score_header = read_scores(args.scores)
    except (OSError, MalformedScores) as e:
        print(f"cannot read {args.scores}: {e}", file=sys.stderr)
        return 2
    declared = score_header.get("config_hash")
    if declared and declared not in hashes:
        print(f"warning: scores file config_hash {declared[:12]} matches no analyzed log", file=sys.stderr)
    summary = quality_summary(scores)
    if summary.mean is not None:
        print(f"quality mean={summary.mean:.6f} sd={summary.sd:.6f} frac_ge3_all={summary.frac_ge3_all_raters:.6f}")
    print(f"quality missing_union={summary.missing_union} n_targets={summary.n_targets} n_scores={summary.n_scores}")
    dist = " ".join(f"{k}:{v}" for k, v in sorted(summary.distribution.items()))
    print(f"quality distribution {dist}")

    means = mean_quality_per_scan(scores)
    paired = [(r, means[r.scan_id]) for r in reports if r.scan_id in means]
    if len(paired) >= 3:
        for metric in ("rmse_pos_mm", "rmse_ang_deg"):
            x = [getattr(r, metric) for r, _ in paired]
            y = [q for _, q in paired]
            try:
                res = rmse_quality_correlation(x, y)
            except InsufficientData as e:
                print(f"correlation {metric}: skipped ({e.reason})", file=sys.stderr)
                continue
            print(
                f"correlation metric={metric} n={res.n} pearson_r={res.pearson_r:.6f} "
                f"pearson_p={res.pearson_p:.6f} spearman_rho={res.spearman_rho:.6f} spearman_p={res.spearman_p:.6f}"
            )
    else:
        print("correlation: skipped (fewer than 3 paired scans)", file=sys.stderr)
    return 0


def cmd_replay(args) -> int:
    try:
        tlog = read_log(args.log)
    except (OSError, MalformedLog) as e:
        print(f"cannot read {args.log}: {e}", file=sys.stderr)
        return 2
    header = tlog.header
    try:
        ell = [float(v) for v in header["ellipsoid"].split(",")]
        kp = np.array([float(v) for v in header["kp"].split(",")])
        kd = np.array([float(v) for v in header["kd"].split(",")])
        tick_rate = int(header["tick_rate_hz"])
    except KeyError as e:
        print(f"log header missing {e} (was the ellipsoid fitted?)", file=sys.stderr)
        return 2
    model = EllipsoidModel(center=np.array(ell[:3]), semi_axes=tuple(ell[3:]))
    params = ContactParams(kp=kp, kd=kd)

    vf = _VelocityFilter(1.0 / tick_rate)
    scanning = tlog.scanning_mask()
    max_dev = 0.0
    for i in range(len(tlog)):
        v = vf.update(tlog.leader_pos[i])
        if scanning[i]:
            force = contact_force(model, tlog.leader_pos[i], v, params).force
            dev = float(np.max(np.abs(force - tlog.force[i])))
            max_dev = max(max_dev, dev)
    print(f"records={len(tlog)}")
    print(f"scanning_records={int(scanning.sum())}")
    print(f"max_force_deviation_n={max_dev:.3e}")
    print(f"tolerance_n={args.tol:.3e}")
    if max_dev > args.tol:
        print("replay: force deviation exceeds tolerance", file=sys.stderr)
        return 1
    return 0


def cmd_serve(args) -> int:
    try:
        cfg = load_config(args.config) if args.config else default_config()
        cfg = apply_overrides(cfg, seed=args.seed, preset_name=args.preset)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    from .server import ConsoleBridge

    try:
        bridge = ConsoleBridge(cfg, host=args.host, port=args.port, out_path=args.out)
    except OSError as e:
        print(f"cannot bind port {args.port}: {e}", file=sys.stderr)
        return 4
    try:
        bridge.serve_forever()
    except KeyboardInterrupt:
        bridge.shutdown()
    return 0


def main(argv=None) -> int:
    _setup_logging()
    parser = argparse.ArgumentParser(prog="teleus", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scripted session and write its trajectory log")
    p_run.add_argument("--config", help="config file (INI schema; defaults apply when omitted)")
    p_run.add_argument("--seed", type=int, help="master seed override")
    p_run.add_argument("--preset", choices=sorted(PRESETS), help="network preset override")
    p_run.add_argument("--duration", type=float, help="session length override, seconds")
    p_run.add_argument("--out", default="session.log", help="trajectory log path")
    p_run.set_defaults(func=cmd_run)

    p_an = sub.add_parser("analyze", help="per-scan tracking reports, aggregates, quality, correlation")
    p_an.add_argument("logs", nargs="+", help="trajectory log files, one per scan")
    p_an.add_argument("--scores", help="image-quality score table")
    p_an.set_defaults(func=cmd_analyze)

    p_rp = sub.add_parser("replay", help="re-render contact forces from a logged leader trajectory")
    p_rp.add_argument("log", help="trajectory log file")
    p_rp.add_argument("--tol", type=float, default=1e-9, help="max allowed force deviation, N")
    p_rp.set_defaults(func=cmd_replay)

    p_sv = sub.add_parser("serve", help="live engine with a WebSocket console bridge")
    p_sv.add_argument("--host", default="127.0.0.1")
    p_sv.add_argument("--port", type=int, default=8765)
    p_sv.add_argument("--config", help="config file")
    p_sv.add_argument("--seed", type=int, help="master seed override")
    p_sv.add_argument("--preset", choices=sorted(PRESETS), help="network preset override")
    p_sv.add_argument("--out", default="live-session.log", help="trajectory log path")
    p_sv.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
