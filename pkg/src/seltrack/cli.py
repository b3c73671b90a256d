"""Batch commands: track a sequence, evaluate, sweep thresholds, make data.

Configuration precedence is flags > config file (key=value lines) > built-in
defaults; the effective configuration is echoed into the stats file so any
run can be reproduced from its outputs alone.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from seltrack import io as mot_io
from seltrack import metrics, synth
from seltrack.gating import (
    GateConfig,
    MODE_ALWAYS_EXTRACT,
    MODE_BASE_GATE,
    MODE_SELECTIVE,
)
from seltrack.tracker import MatchConfig, NullFeatureProvider, run_sequence

MODE_ALIASES = {
    "selective": MODE_SELECTIVE,
    "base": MODE_BASE_GATE,
    "base_gate": MODE_BASE_GATE,
    "always": MODE_ALWAYS_EXTRACT,
    "always_extract": MODE_ALWAYS_EXTRACT,
}

CONFIG_DEFAULTS = {
    "mode": "selective",
    "iou_th": 0.2,
    "ars_th": 0.6,
    "ars": True,
    "match": "cascade",
    "appearance_gate": 0.4,
    "iou_gate": 0.3,
    "fused_weight": 1.0,
    "conf_high": 0.6,
    "byte": None,  # strategy-dependent default
    "min_hits": 1,
    "max_age": 30,
    "ema_alpha": 0.9,
    "emit": "kalman",
}

_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _parse_config_file(path) -> dict:
    out = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_DEFAULTS:
            raise ValueError(f"{path}:{line_no}: unknown config key {key!r}")
        default = CONFIG_DEFAULTS[key]
        if key == "byte":
            out[key] = _BOOL_WORDS.get(value.lower())
            if out[key] is None:
                raise ValueError(f"{path}:{line_no}: bad boolean {value!r}")
        elif isinstance(default, bool):
            if value.lower() not in _BOOL_WORDS:
                raise ValueError(f"{path}:{line_no}: bad boolean {value!r}")
            out[key] = _BOOL_WORDS[value.lower()]
        elif isinstance(default, float):
            out[key] = float(value)
        elif isinstance(default, int):
            out[key] = int(value)
        else:
            out[key] = value
    return out


def _effective_config(args) -> dict:
    cfg = dict(CONFIG_DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(_parse_config_file(args.config))
    for key in CONFIG_DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _build_configs(cfg: dict) -> tuple[GateConfig, MatchConfig]:
    mode = MODE_ALIASES.get(cfg["mode"])
    if mode is None:
        raise ValueError(f"unknown mode {cfg['mode']!r}; choose from {sorted(MODE_ALIASES)}")
    gate = GateConfig(
        theta_iou=cfg["iou_th"],
        theta_alpha=cfg["ars_th"],
        ars_enabled=cfg["ars"],
        mode=mode,
    )
    match = MatchConfig(
        strategy=cfg["match"],
        appearance_gate=cfg["appearance_gate"],
        iou_gate=cfg["iou_gate"],
        fused_weight=cfg["fused_weight"],
        conf_high=cfg["conf_high"],
        byte_low=cfg["byte"],
        min_hits=cfg["min_hits"],
        max_age=cfg["max_age"],
        ema_alpha=cfg["ema_alpha"],
        emit=cfg["emit"],
    )
    return gate, match


def _config_lines(cfg: dict, match: MatchConfig) -> list[str]:
    resolved = dict(cfg)
    resolved["byte"] = match.byte_low  # post-resolution value
    return [f"config.{key}={resolved[key]}" for key in sorted(resolved)]


def _make_provider(features_path):
    if features_path is None:
        return NullFeatureProvider()
    return mot_io.FeatureFileProvider(features_path)


def _add_tracking_options(p: argparse.ArgumentParser):
    p.add_argument("--det", required=True, help="detection file (MOT rows)")
    p.add_argument("--features", help="binary feature file; omit for IoU-only tracking")
    p.add_argument("--config", help="key=value config file (flags win over it)")
    p.add_argument("--mode", choices=sorted(MODE_ALIASES), help="gating mode (default selective)")
    p.add_argument("--iou-th", dest="iou_th", type=float, help="candidacy IoU threshold (default 0.2)")
    p.add_argument("--ars-th", dest="ars_th", type=float, help="blended aspect-ratio threshold (default 0.6)")
    p.add_argument("--no-ars", dest="ars", action="store_false", default=None,
                   help="disable the aspect-ratio gate")
    p.add_argument("--match", choices=["cascade", "fused"], help="association strategy (default cascade)")
    p.add_argument("--appearance-gate", dest="appearance_gate", type=float,
                   help="max cosine distance in the appearance stage (default 0.4)")
    p.add_argument("--iou-gate", dest="iou_gate", type=float,
                   help="min IoU for a feasible IoU match (default 0.3)")
    p.add_argument("--fused-weight", dest="fused_weight", type=float,
                   help="appearance weight in fused cost (default 1.0)")
    p.add_argument("--conf-high", dest="conf_high", type=float,
                   help="high-confidence split (default 0.6)")
    p.add_argument("--byte", dest="byte", action="store_true", default=None,
                   help="second IoU association of low-confidence detections")
    p.add_argument("--no-byte", dest="byte", action="store_false", default=None)
    p.add_argument("--min-hits", dest="min_hits", type=int, help="matches before confirmation (default 1)")
    p.add_argument("--max-age", dest="max_age", type=int, help="misses before deletion (default 30)")
    p.add_argument("--ema-alpha", dest="ema_alpha", type=float, help="EMA base weight (default 0.9)")
    p.add_argument("--emit", choices=["kalman", "detection"],
                   help="output box convention (default kalman)")


def _run_tracking(args, cfg):
    gate, match = _build_configs(cfg)
    frames = mot_io.read_detections(args.det)
    provider = _make_provider(args.features)
    output, stats = run_sequence(frames, provider, gate, match)
    return output, stats, match


def _stats_lines(stats, cfg, match) -> list[str]:
    value = metrics.pde(stats)
    pde_text = "n/a" if value is None else f"{value:.4f}"
    return [
        f"pde={pde_text}",
        f"fetches={stats.fetches}",
        f"detections={stats.detections}",
        f"high_detections={stats.high_detections}",
        f"frames={stats.frames}",
        *_config_lines(cfg, match),
    ]


def cmd_track(args) -> int:
    cfg = _effective_config(args)
    output, stats, match = _run_tracking(args, cfg)
    mot_io.write_results(args.out, output)
    stats_path = args.stats or (args.out + ".stats")
    Path(stats_path).write_text("\n".join(_stats_lines(stats, cfg, match)) + "\n")
    value = metrics.pde(stats)
    print(f"wrote {args.out} ({len(output.rows)} rows), stats {stats_path}")
    print(f"pde={'n/a' if value is None else f'{value:.4f}'} fetches={stats.fetches}")
    return 0


def _read_stats_file(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            out[key] = value
    return out


def cmd_eval(args) -> int:
    gt = mot_io.read_trajectories(args.gt)
    pred = mot_io.read_trajectories(args.pred)
    gt_frames = {f for traj in gt.values() for f in traj}
    pred_frames = {f for traj in pred.values() for f in traj}
    if pred_frames and gt_frames:
        if min(pred_frames) < min(gt_frames) or max(pred_frames) > max(gt_frames):
            raise ValueError(
                "prediction frames fall outside the ground-truth frame span; "
                "are these files from the same sequence?"
            )
    elif pred_frames and not gt_frames:
        raise ValueError("ground truth is empty but predictions are not")
    report = metrics.evaluate(gt, pred, iou_match=args.iou_match)
    if args.stats:
        kv = _read_stats_file(args.stats)
        if kv.get("pde", "n/a") != "n/a":
            report.pde = float(kv["pde"])
        report.fetches = int(kv.get("fetches", 0))
        report.detections = int(kv.get("high_detections", 0))
    text = "\n".join(report.kv_lines()) if args.format == "kv" else report.table()
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


def cmd_sweep(args) -> int:
    try:
        grid = [float(v) for v in args.iou_th_grid.split(",") if v.strip() != ""]
    except ValueError:
        raise ValueError(f"bad --iou-th-grid {args.iou_th_grid!r}") from None
    if not grid:
        raise ValueError("empty --iou-th-grid")
    gt = mot_io.read_trajectories(args.gt)
    frames = mot_io.read_detections(args.det)

    def run_point(mode: str, theta: float):
        cfg = _effective_config(args)
        cfg["mode"] = mode
        cfg["iou_th"] = theta
        gate, match = _build_configs(cfg)
        output, stats = run_sequence(frames, _make_provider(args.features), gate, match)
        report = metrics.evaluate(gt, output.trajectories(), stats=stats)
        return report

    rows = [("baseline", run_point("always", 0.0))]
    for theta in grid:
        rows.append((f"{theta:.2f}", run_point("selective", theta)))

    lines = [f"{'theta_iou':>10} {'pde':>8} {'idf1':>10} {'id_switches':>12}"]
    for label, report in rows:
        pde_text = "n/a" if report.pde is None else f"{report.pde:.2f}"
        lines.append(
            f"{label:>10} {pde_text:>8} {report.idf1:>10.6f} {report.id_switches:>12}"
        )
    text = "\n".join(lines)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


def cmd_synth(args) -> int:
    if args.preset not in synth.PRESETS:
        raise ValueError(
            f"unknown preset {args.preset!r}; available: {', '.join(sorted(synth.PRESETS))}"
        )
    kwargs = {}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.preset == "parade":
        if args.targets is not None:
            kwargs["n_targets"] = args.targets
        if args.frames is not None:
            kwargs["frames"] = args.frames
    elif args.preset == "grid" and args.frames is not None:
        kwargs["frames"] = args.frames
    elif args.targets is not None or args.frames is not None:
        raise ValueError(f"preset {args.preset!r} does not take --targets/--frames")
    scenario = synth.PRESETS[args.preset](**kwargs)
    det, feat, gt = synth.generate_to_dir(scenario, args.out)
    print(f"wrote {det}\nwrote {feat}\nwrote {gt}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seltrack",
        description="Tracking-by-detection with selective feature extraction.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_track = sub.add_parser("track", help="run the tracker over a detection file")
    _add_tracking_options(p_track)
    p_track.add_argument("--out", required=True, help="result file to write")
    p_track.add_argument("--stats", help="stats file (default: <out>.stats)")
    p_track.set_defaults(func=cmd_track)

    p_eval = sub.add_parser("eval", help="score a result file against ground truth")
    p_eval.add_argument("--gt", required=True)
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--stats", help="stats file to echo PDE from")
    p_eval.add_argument("--iou-match", dest="iou_match", type=float, default=0.5)
    p_eval.add_argument("--format", choices=["table", "kv"], default="table")
    p_eval.add_argument("--out", help="also write the report here")
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="table of PDE/IDF1 across IoU thresholds")
    _add_tracking_options(p_sweep)
    p_sweep.add_argument("--gt", required=True)
    p_sweep.add_argument(
        "--iou-th-grid",
        dest="iou_th_grid",
        default="0.0,0.1,0.2,0.3,0.4,0.5",
        help="comma-separated thresholds (default 0.0..0.5)",
    )
    p_sweep.add_argument("--out", help="also write the table here")
    p_sweep.set_defaults(func=cmd_sweep)

    p_synth = sub.add_parser("synth", help="materialize a synthetic scenario")
    p_synth.add_argument("--preset", required=True)
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--seed", type=int)
    p_synth.add_argument("--targets", type=int, help="target count (parade)")
    p_synth.add_argument("--frames", type=int, help="frame count (parade/grid)")
    p_synth.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
