"""Command line front end.

Four subcommands cover the full loop: ``simulate`` renders a scenario config
into a replay plus aligned ground truth, ``track`` runs the tracker over a
replay, ``evaluate`` scores results against ground truth, and ``sweep`` grids
over association weights. All file outputs and stdout are deterministic for
fixed inputs; timing information goes to stderr only.

Bare relative config paths that do not exist in the working directory are
also looked up under $FUSETRACK_CONFIG_DIR.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

from .association import CostWeights, cost_matrix
from .fileio import (
    ParseError,
    load_yaml,
    read_ground_truth,
    read_replay,
    read_results,
    results_to_predictions,
    results_to_records,
    tracker_config_from_dict,
    write_ground_truth,
    write_replay,
    write_results,
)
from .fusion import PillarDims
from .geometry import CameraModel
from .metrics import MetricsReport, amota
from .oracle import _MAX_ASSIGNMENT_SIZE, matching_cost, optimal_assignment
from .simulator import ScenarioConfig, generate
from .tracker import Tracker, TrackerConfig, run_sequence


def _resolve_config(path: str) -> str:
    """Leave existing / absolute paths alone; try $FUSETRACK_CONFIG_DIR for
    bare relative names that do not resolve locally."""
    if os.path.isabs(path) or os.path.exists(path):
        return path
    base = os.environ.get("FUSETRACK_CONFIG_DIR")
    if base:
        candidate = os.path.join(base, path)
        if os.path.exists(candidate):
            return candidate
    return path


def _load_camera(path: str) -> CameraModel:
    data = load_yaml(_resolve_config(path))
    if "camera" not in data:
        raise ValueError(f"{path}: expected a 'camera' section")
    return CameraModel.from_dict(data["camera"])


def _parse_class_names(spec: Optional[str]) -> Optional[List[str]]:
    if not spec:
        return None
    names = [s.strip() for s in spec.split(",") if s.strip()]
    return names or None


def _parse_grid(spec: Optional[str], fallback: float) -> List[float]:
    if not spec:
        return [fallback]
    try:
        values = [float(s) for s in spec.split(",") if s.strip()]
    except ValueError:
        raise ValueError(f"bad grid value in {spec!r}: expected comma-separated numbers")
    if not values:
        return [fallback]
    return values


def _add_tracker_flags(sp: argparse.ArgumentParser, weight_grids: bool) -> None:
    if weight_grids:
        sp.add_argument("--alpha", help="comma-separated pixel-term weights")
        sp.add_argument("--beta", help="comma-separated depth-term weights")
        sp.add_argument("--delta", help="comma-separated velocity-term weights")
        sp.add_argument("--radius", help="comma-separated gate radii (pixels)")
    else:
        sp.add_argument("--alpha", type=float, help="pixel-term weight")
        sp.add_argument("--beta", type=float, help="depth-term weight")
        sp.add_argument("--delta", type=float, help="velocity-term weight")
        sp.add_argument("--radius", type=float, help="gate radius in pixels")
    sp.add_argument("--max-age", dest="max_age", type=int, help="frames a track may coast before it is dropped")
    sp.add_argument("--depth-tolerance", dest="depth_tolerance", type=float, help="relative frustum depth window")
    sp.add_argument("--min-confidence", dest="min_confidence", type=float, help="detection confidence floor")
    sp.add_argument("--fusion", action=argparse.BooleanOptionalAction, default=None, help="radar fusion on/off")
    sp.add_argument("--pillar-width", dest="pillar_width", type=float, help="pillar width (y), meters")
    sp.add_argument("--pillar-height", dest="pillar_height", type=float, help="pillar height (z), meters")
    sp.add_argument("--pillar-depth", dest="pillar_depth", type=float, help="pillar depth (x), meters")


def _base_config(args) -> TrackerConfig:
    """Library defaults, overridden by --config, overridden by flags."""
    cfg = TrackerConfig()
    if getattr(args, "config", None):
        cfg = tracker_config_from_dict(load_yaml(_resolve_config(args.config)))
    dims = cfg.pillar_dims
    dims = PillarDims(
        width_y=dims.width_y if args.pillar_width is None else args.pillar_width,
        height_z=dims.height_z if args.pillar_height is None else args.pillar_height,
        depth_x=dims.depth_x if args.pillar_depth is None else args.pillar_depth,
    )
    return TrackerConfig(
        weights=cfg.weights,
        pillar_dims=dims,
        depth_tolerance=cfg.depth_tolerance if args.depth_tolerance is None else args.depth_tolerance,
        max_age=cfg.max_age if args.max_age is None else args.max_age,
        min_confidence=cfg.min_confidence if args.min_confidence is None else args.min_confidence,
        fusion_enabled=cfg.fusion_enabled if args.fusion is None else args.fusion,
    )


def _scalar_weights(args, base: CostWeights) -> CostWeights:
    return CostWeights(
        alpha=base.alpha if args.alpha is None else args.alpha,
        beta=base.beta if args.beta is None else args.beta,
        delta=base.delta if args.delta is None else args.delta,
        radius=base.radius if args.radius is None else args.radius,
    )


def _cmd_simulate(args) -> int:
    data = load_yaml(_resolve_config(args.config))
    cfg = ScenarioConfig.from_dict(data)
    scene = generate(cfg)  # build everything before touching the filesystem
    os.makedirs(args.out, exist_ok=True)
    replay_path = os.path.join(args.out, "replay.jsonl")
    gt_path = os.path.join(args.out, "ground_truth.jsonl")
    write_replay(replay_path, scene.frames)
    write_ground_truth(gt_path, scene.ground_truth)
    n_det = sum(len(f.detections) for f in scene.frames)
    n_radar = sum(len(f.radar) for f in scene.frames)
    n_gt = sum(len(g.objects) for g in scene.ground_truth)
    print(
        f"seed {cfg.seed}: {len(scene.frames)} frames, {n_det} detections, "
        f"{n_radar} radar points, {n_gt} ground-truth observations"
    )
    print(f"wrote {replay_path}")
    print(f"wrote {gt_path}")
    return 0


def _cmd_track(args) -> int:
    frames = read_replay(args.replay)
    config = _base_config(args)
    config = replace(config, weights=_scalar_weights(args, config.weights))
    camera = _load_camera(args.scene) if args.scene else None
    if config.fusion_enabled and camera is None:
        print(
            "error: radar fusion needs a camera; pass --scene scenario.yaml or disable it with --no-fusion",
            file=sys.stderr,
        )
        return 2
    results, stats = run_sequence(frames, config, camera)
    if args.out == "-":
        out = sys.stdout
        for rec in results_to_records(results):
            out.write(json.dumps(rec, separators=(",", ":")) + "\n")
    else:
        write_results(args.out, results)
    print(
        f"latency over {stats.count} steps: median {stats.median_ms:.3f} ms, "
        f"p99 {stats.p99_ms:.3f} ms, max {stats.max_ms:.3f} ms",
        file=sys.stderr,
    )
    return 0


def _check_sequences(preds, gts) -> None:
    """Same-length, same-frame-index pairing, reported by the first frame
    where the two sequences disagree."""
    for p, g in zip(preds, gts):
        if p.frame_index != g.frame_index:
            raise ValueError(
                f"misaligned sequences: results frame {p.frame_index} paired with ground-truth frame {g.frame_index}"
            )
    if len(preds) != len(gts):
        longer, name = (preds, "results") if len(preds) > len(gts) else (gts, "ground truth")
        first_extra = longer[min(len(preds), len(gts))].frame_index
        raise ValueError(f"{name} has extra frames starting at frame {first_extra}")


def _format_report(report: MetricsReport, names: Optional[List[str]], dist_threshold: float) -> str:
    lines = [
        f"match gate {dist_threshold:g} m, {report.num_thresholds} recall thresholds, "
        f"{report.num_gt} ground-truth objects"
    ]
    cols = ("AMOTA", "AMOTP", "MOTAR", "MOTA", "MOTP", "Recall", "GT")
    lines.append(f"{'class':<14}" + "".join(f"{c:>9}" for c in cols))

    def row(label: str, m) -> str:
        return (
            f"{label:<14}{m.amota:>9.4f}{m.amotp:>9.4f}{m.motar:>9.4f}"
            f"{m.mota:>9.4f}{m.motp:>9.4f}{m.recall:>9.4f}{m.num_gt:>9}"
        )

    for cid in sorted(report.per_class):
        if names is not None and not (0 <= cid < len(names)):
            continue
        label = names[cid] if names is not None else f"class {cid}"
        lines.append(row(label, report.per_class[cid]))
    lines.append(row("overall", report))
    return "\n".join(lines) + "\n"


def _cmd_evaluate(args) -> int:
    results = read_results(args.results)
    gt = read_ground_truth(args.gt)
    preds = results_to_predictions(results)
    _check_sequences(preds, gt)
    report = amota(
        preds,
        gt,
        num_thresholds=args.num_thresholds,
        dist_threshold=args.dist_threshold,
        workers=args.workers,
    )
    text = _format_report(report, _parse_class_names(args.classes), args.dist_threshold)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _association_gap(tracker: Tracker, weights: CostWeights, gaps: List[float]) -> int:
    """After a step: greedy total cost minus the optimal total on the same
    cost matrix. Appends the gap when both matchings keep the same number of
    pairs and the frame fits the exact solver; returns 1 on a cardinality
    shortfall, 0 otherwise. Frames with nothing to match on either side are
    skipped outright."""
    dets, tracks, assoc = tracker.last_association
    if not dets or not tracks:
        return 0
    if len(dets) > _MAX_ASSIGNMENT_SIZE or len(tracks) > _MAX_ASSIGNMENT_SIZE:
        return 0
    matrix = cost_matrix(dets, tracks, weights)
    column = {t.track_id: j for j, t in enumerate(tracks)}
    greedy_pairs = [(i, column[tid]) for i, tid in assoc.matches]
    optimal_total, optimal_pairs = optimal_assignment(matrix)
    if len(optimal_pairs) != len(greedy_pairs):
        return 1
    gaps.append(matching_cost(matrix, greedy_pairs) - optimal_total)
    return 0


def _cmd_sweep(args) -> int:
    frames = read_replay(args.replay)
    gt = read_ground_truth(args.gt)
    camera = _load_camera(args.scene)
    base = _base_config(args)

    combos: List[Tuple[float, float, float, float]] = []
    seen = set()
    for a in _parse_grid(args.alpha, base.weights.alpha):
        for b in _parse_grid(args.beta, base.weights.beta):
            for d in _parse_grid(args.delta, base.weights.delta):
                for r in _parse_grid(args.radius, base.weights.radius):
                    combo = (a, b, d, r)
                    if combo not in seen:
                        seen.add(combo)
                        combos.append(combo)

    def run_one(combo: Tuple[float, float, float, float]):
        a, b, d, r = combo
        weights = CostWeights(alpha=a, beta=b, delta=d, radius=r)
        config = replace(base, weights=weights)
        tracker = Tracker(config, camera, record_association=True)
        results = []
        gaps: List[float] = []
        shortfall = 0
        for frame in frames:
            results.append(tracker.step(frame))
            shortfall += _association_gap(tracker, weights, gaps)
        preds = results_to_predictions(results)
        _check_sequences(preds, gt)
        report = amota(
            preds, gt, num_thresholds=args.num_thresholds, dist_threshold=args.dist_threshold
        )
        gap_mean = math.fsum(gaps) / len(gaps) if gaps else None
        return combo, report, gap_mean, len(gaps), shortfall

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(run_one, combos))
    else:
        rows = [run_one(c) for c in combos]

    # Best AMOTA first; ties resolved by the grid values so the table is
    # stable for any worker count.
    rows.sort(key=lambda row: (-row[1].amota, row[0]))

    header = (
        f"{'alpha':<12}{'beta':<12}{'delta':<12}{'radius':<10}"
        f"{'AMOTA':>9}{'AMOTP':>9}{'gap-mean':>13}{'frames':>8}{'shortfall':>11}"
    )
    lines = [header]
    for (a, b, d, r), report, gap_mean, gap_frames, shortfall in rows:
        gap_text = f"{gap_mean:.6g}" if gap_mean is not None else "n/a"
        lines.append(
            f"{a:<12g}{b:<12g}{d:<12g}{r:<10g}"
            f"{report.amota:>9.4f}{report.amotp:>9.4f}{gap_text:>13}{gap_frames:>8}{shortfall:>11}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fusetrack",
        description="Radar-camera fusion tracking: simulate, track, evaluate, sweep.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="render a scenario config into a replay and ground truth")
    sim.add_argument("config", help="scenario YAML; bare names also resolve under $FUSETRACK_CONFIG_DIR")
    sim.add_argument("--out", required=True, help="output directory (replay.jsonl, ground_truth.jsonl)")
    sim.set_defaults(func=_cmd_simulate)

    trk = sub.add_parser("track", help="run the tracker over a replay")
    trk.add_argument("replay", help="replay JSONL")
    trk.add_argument("--out", default="-", help="results JSONL path, or - for stdout (default)")
    trk.add_argument("--scene", help="scenario YAML supplying the camera (required for fusion and positions)")
    trk.add_argument("--config", help="tracker config YAML")
    _add_tracker_flags(trk, weight_grids=False)
    trk.set_defaults(func=_cmd_track)

    ev = sub.add_parser("evaluate", help="score results against ground truth")
    ev.add_argument("results", help="results JSONL (needs x/y positions; track with --scene)")
    ev.add_argument("gt", help="ground truth JSONL")
    ev.add_argument("--num-thresholds", dest="num_thresholds", type=int, default=40)
    ev.add_argument("--dist-threshold", dest="dist_threshold", type=float, default=2.0, help="match gate, meters")
    ev.add_argument("--classes", help="comma-separated names for class ids 0..n-1; other ids are hidden")
    ev.add_argument("--workers", type=int, default=1, help="threads for per-threshold counting")
    ev.add_argument("--out", help="write the report here instead of stdout")
    ev.set_defaults(func=_cmd_evaluate)

    sw = sub.add_parser("sweep", help="grid-search association weights")
    sw.add_argument("replay", help="replay JSONL")
    sw.add_argument("gt", help="ground truth JSONL")
    sw.add_argument("--scene", required=True, help="scenario YAML supplying the camera")
    sw.add_argument("--config", help="tracker config YAML")
    _add_tracker_flags(sw, weight_grids=True)
    sw.add_argument("--num-thresholds", dest="num_thresholds", type=int, default=40)
    sw.add_argument("--dist-threshold", dest="dist_threshold", type=float, default=2.0)
    sw.add_argument("--workers", type=int, default=1, help="grid points evaluated in parallel")
    sw.add_argument("--out", help="write the table here instead of stdout")
    sw.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse has already written its message
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParseError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
