"""Tracking evaluation in the recall-averaged style of large AV benchmarks.

Predictions and ground truth are compared per frame on the ground plane
(vehicle-frame x/y, meters). Matching is greedy by ascending center
distance under a fixed gate (2 m by default), class-gated, and sticky: a
ground-truth object prefers the track id it was last matched to, which is
what makes identity switches countable. From the per-frame matches come the
CLEAR-style counts (IDS, FP, FN, matched distances), then:

    MOTAR(r) = clamp_0..1( 1 - (IDS + FP + FN - (1-r) * P) / (r * P) )

evaluated at the confidence floor whose achieved recall first reaches each
target recall r in {1/(n-1), ..., 1}, and AMOTA is the mean of those n-1
values. AMOTP averages the matched-distance means over the same floors.
MOTA/MOTP/Recall are reported at the confidence floor that maximizes MOTA.
All comparisons happen on squared distances so results do not depend on
square-root rounding.

The raw MOTAR formula can exceed 1 when the achieved recall overshoots the
target (discrete confidences), so the value is clamped into [0, 1]; without
the upper clamp a perfect tracker would not score AMOTA = 1.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple


@dataclass(frozen=True)
class GroundTruthObject:
    gt_id: int
    x: float
    y: float
    class_id: int


@dataclass(frozen=True)
class GroundTruthFrame:
    frame_index: int
    objects: Tuple[GroundTruthObject, ...]

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        ids = [o.gt_id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError(f"frame {self.frame_index}: duplicate ground-truth ids")


@dataclass(frozen=True)
class PredictedObject:
    """A reported track at one frame, already in ground-plane coordinates."""

    track_id: int
    x: float
    y: float
    class_id: int
    confidence: float

    def __post_init__(self):
        if not (math.isfinite(self.confidence) and self.confidence >= 0):
            raise ValueError("confidence must be finite and non-negative")


@dataclass(frozen=True)
class PredictedFrame:
    frame_index: int
    objects: Tuple[PredictedObject, ...]

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True)
class FrameMatches:
    """Per-frame matching result: (gt_id, track_id, distance) triples plus
    the leftovers on both sides (input order)."""

    matches: Tuple[Tuple[int, int, float], ...]
    false_positive_ids: Tuple[int, ...]
    false_negative_ids: Tuple[int, ...]


@dataclass(frozen=True)
class ErrorCounts:
    """Sequence-level error tally at one confidence floor."""

    ids: int
    fp: int
    fn: int
    recall: float
    matched_distances: Tuple[float, ...]
    confidence_floor: float

    @property
    def motp(self) -> float:
        """Mean matched ground-plane distance; 0 when nothing matched."""
        if not self.matched_distances:
            return 0.0
        return math.fsum(self.matched_distances) / len(self.matched_distances)


@dataclass(frozen=True)
class ClassMetrics:
    amota: float
    amotp: float
    motar: float
    mota: float
    motp: float
    recall: float
    num_gt: int


@dataclass(frozen=True)
class MetricsReport:
    per_class: Dict[int, ClassMetrics]
    amota: float
    amotp: float
    motar: float
    mota: float
    motp: float
    recall: float
    num_thresholds: int
    num_gt: int

    def __post_init__(self):
        if not (0.0 <= self.amota <= 1.0 and 0.0 <= self.motar <= 1.0):
            raise ValueError("AMOTA and MOTAR must lie in [0, 1]")


def match_frame(
    pred_objects: Sequence[PredictedObject],
    gt_frame: GroundTruthFrame,
    dist_threshold: float,
    sticky: Optional[Mapping[int, int]] = None,
) -> FrameMatches:
    """Match one frame of predictions to ground truth.

    sticky maps gt_id -> track id from earlier frames; a remembered pair is
    kept whenever that track is present, same-class, and inside the gate.
    Everything else is matched greedily by ascending ground-plane distance
    with (distance, gt input index, pred input index) as the deterministic
    order. Pairs beyond dist_threshold or across classes never match.
    """
    if not (dist_threshold > 0):
        raise ValueError("dist_threshold must be positive")
    sticky = sticky or {}
    gts = gt_frame.objects
    gate2 = dist_threshold * dist_threshold

    def dist2(gt: GroundTruthObject, pred: PredictedObject) -> float:
        dx = gt.x - pred.x
        dy = gt.y - pred.y
        return dx * dx + dy * dy

    matches: List[Tuple[int, int, float]] = []
    gt_taken = [False] * len(gts)
    pred_taken = [False] * len(pred_objects)
    pred_by_id: Dict[int, int] = {}
    for j, p in enumerate(pred_objects):
        pred_by_id.setdefault(p.track_id, j)

    # Pass 1: keep remembered correspondences that still hold.
    for i, gt in enumerate(gts):
        want = sticky.get(gt.gt_id)
        if want is None:
            continue
        j = pred_by_id.get(want)
        if j is None or pred_taken[j]:
            continue
        pred = pred_objects[j]
        if pred.class_id != gt.class_id:
            continue
        d2 = dist2(gt, pred)
        if d2 <= gate2:
            matches.append((gt.gt_id, pred.track_id, math.sqrt(d2)))
            gt_taken[i] = True
            pred_taken[j] = True

    # Pass 2: greedy over the remaining pairs by ascending distance.
    pairs = []
    for i, gt in enumerate(gts):
        if gt_taken[i]:
            continue
        for j, pred in enumerate(pred_objects):
            if pred_taken[j] or pred.class_id != gt.class_id:
                continue
            d2 = dist2(gt, pred)
            if d2 <= gate2:
                pairs.append((d2, i, j))
    pairs.sort()
    for d2, i, j in pairs:
        if gt_taken[i] or pred_taken[j]:
            continue
        matches.append((gts[i].gt_id, pred_objects[j].track_id, math.sqrt(d2)))
        gt_taken[i] = True
        pred_taken[j] = True

    fp = tuple(p.track_id for j, p in enumerate(pred_objects) if not pred_taken[j])
    fn = tuple(g.gt_id for i, g in enumerate(gts) if not gt_taken[i])
    return FrameMatches(tuple(matches), fp, fn)


def _check_alignment(pred_frames, gt_frames):
    if len(pred_frames) != len(gt_frames):
        raise ValueError("prediction and ground-truth sequences differ in length")
    for p, g in zip(pred_frames, gt_frames):
        if p.frame_index != g.frame_index:
            raise ValueError(f"misaligned frames: prediction {p.frame_index} vs ground truth {g.frame_index}")


def count_sequence_errors(
    pred_frames: Sequence[PredictedFrame],
    gt_frames: Sequence[GroundTruthFrame],
    confidence_floor: float,
    dist_threshold: float,
) -> ErrorCounts:
    """CLEAR-style counts over a sequence at one confidence floor.

    Predictions below the floor are dropped before matching. An identity
    switch is a matched ground-truth object whose track id differs from the
    id it was matched to the last time it was matched (gaps allowed).
    """
    _check_alignment(pred_frames, gt_frames)
    last_id: Dict[int, int] = {}
    ids = fp = fn = 0
    distances: List[float] = []
    total_gt = 0
    for pred_frame, gt_frame in zip(pred_frames, gt_frames):
        total_gt += len(gt_frame.objects)
        kept = [p for p in pred_frame.objects if p.confidence >= confidence_floor]
        result = match_frame(kept, gt_frame, dist_threshold, sticky=last_id)
        for gt_id, track_id, dist in result.matches:
            if gt_id in last_id and last_id[gt_id] != track_id:
                ids += 1
            last_id[gt_id] = track_id
            distances.append(dist)
        fp += len(result.false_positive_ids)
        fn += len(result.false_negative_ids)
    recall = (total_gt - fn) / total_gt if total_gt else 0.0
    return ErrorCounts(ids, fp, fn, recall, tuple(distances), confidence_floor)


def motar(counts: ErrorCounts, r: float, num_gt: int) -> float:
    """Recall-normalized tracking accuracy at recall threshold r.

    1 - (IDS + FP + FN - (1 - r) * P) / (r * P), clamped into [0, 1]. The
    lower clamp is part of the published formula; the upper clamp covers
    floors whose achieved recall overshoots r (see module docstring).
    """
    if not (0.0 < r <= 1.0):
        raise ValueError("recall threshold must lie in (0, 1]")
    if num_gt < 1:
        raise ValueError("num_gt must be >= 1")
    errors = counts.ids + counts.fp + counts.fn
    value = 1.0 - (errors - (1.0 - r) * num_gt) / (r * num_gt)
    return min(1.0, max(0.0, value))


def _class_metrics(pred_frames, gt_frames, num_thresholds, dist_threshold, counts_by_floor, num_gt):
    """Assemble one class's metrics from precomputed per-floor counts."""
    floors = sorted(counts_by_floor, reverse=True)
    amota_terms: List[float] = []
    amotp_terms: List[float] = []
    steps = num_thresholds - 1
    for k in range(1, steps + 1):
        r = k / steps
        chosen = None
        for floor in floors:  # highest floor first
            if counts_by_floor[floor].recall >= r:
                chosen = counts_by_floor[floor]
                break
        if chosen is None:
            amota_terms.append(0.0)
            amotp_terms.append(0.0)
        else:
            amota_terms.append(motar(chosen, r, num_gt))
            amotp_terms.append(chosen.motp)
    amota_value = math.fsum(amota_terms) / steps
    amotp_value = math.fsum(amotp_terms) / steps

    best = None
    for floor in floors:
        counts = counts_by_floor[floor]
        mota = 1.0 - (counts.ids + counts.fp + counts.fn) / num_gt
        key = (mota, floor)
        if best is None or key > best[0]:
            best = (key, counts)
    if best is None:
        empty = ErrorCounts(0, 0, num_gt, 0.0, (), math.inf)
        best = ((1.0 - float(num_gt) / num_gt, math.inf), empty)
    (best_mota, _), best_counts = best
    best_motar = motar(best_counts, best_counts.recall, num_gt) if best_counts.recall > 0 else 0.0
    return ClassMetrics(
        amota=amota_value,
        amotp=amotp_value,
        motar=best_motar,
        mota=best_mota,
        motp=best_counts.motp,
        recall=best_counts.recall,
        num_gt=num_gt,
    )


def amota(
    pred_frames: Sequence[PredictedFrame],
    gt_frames: Sequence[GroundTruthFrame],
    num_thresholds: int = 40,
    dist_threshold: float = 2.0,
    workers: int = 1,
) -> MetricsReport:
    """Full evaluation: per-class AMOTA/AMOTP/MOTAR/MOTA/MOTP/Recall plus
    their unweighted means over the classes present in the ground truth.

    num_thresholds is the n of the recall ladder {1/(n-1), ..., 1}; floors
    are the distinct prediction confidences. Per-floor counting is
    independent work and may be spread over threads; results are assembled
    in fixed (class, floor) order so the report is identical for any worker
    count.
    """
    if num_thresholds < 2:
        raise ValueError("num_thresholds must be >= 2")
    _check_alignment(pred_frames, gt_frames)
    class_ids = sorted({o.class_id for g in gt_frames for o in g.objects})
    if not class_ids:
        raise ValueError("ground truth contains no objects")

    jobs = []  # (class_id, floor, pred subset, gt subset)
    per_class_frames = {}
    for class_id in class_ids:
        gt_c = [GroundTruthFrame(g.frame_index, tuple(o for o in g.objects if o.class_id == class_id)) for g in gt_frames]
        pred_c = [PredictedFrame(p.frame_index, tuple(o for o in p.objects if o.class_id == class_id)) for p in pred_frames]
        per_class_frames[class_id] = (pred_c, gt_c)
        floors = sorted({o.confidence for p in pred_c for o in p.objects}, reverse=True)
        for floor in floors:
            jobs.append((class_id, floor, pred_c, gt_c))

    def run(job):
        class_id, floor, pred_c, gt_c = job
        return class_id, floor, count_sequence_errors(pred_c, gt_c, floor, dist_threshold)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(job) for job in jobs]

    counts: Dict[int, Dict[float, ErrorCounts]] = {c: {} for c in class_ids}
    for class_id, floor, result in outcomes:
        counts[class_id][floor] = result

    per_class: Dict[int, ClassMetrics] = {}
    for class_id in class_ids:
        pred_c, gt_c = per_class_frames[class_id]
        num_gt = sum(len(g.objects) for g in gt_c)
        per_class[class_id] = _class_metrics(
            pred_c, gt_c, num_thresholds, dist_threshold, counts[class_id], num_gt
        )

    def mean(values):
        return math.fsum(values) / len(values)

    return MetricsReport(
        per_class=per_class,
        amota=mean([m.amota for m in per_class.values()]),
        amotp=mean([m.amotp for m in per_class.values()]),
        motar=mean([m.motar for m in per_class.values()]),
        mota=mean([m.mota for m in per_class.values()]),
        motp=mean([m.motp for m in per_class.values()]),
        recall=mean([m.recall for m in per_class.values()]),
        num_thresholds=num_thresholds,
        num_gt=sum(len(g.objects) for g in gt_frames),
    )
