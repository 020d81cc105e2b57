"""Small exact references for cross-checking the fast paths.

Two deliberately slow but transparent computations live here rather than in
the test tree, because the CLI sweep also uses them to report how far the
greedy matcher sits from a provably optimal assignment:

* optimal_assignment: exhaustive search (dynamic program over track
  subsets, which visits every feasible matching) for the best
  detection-to-track assignment under the ordering "most pairs first, then
  least total cost". Capped at 10x10.

* recount_metrics: an independent re-derivation of the sequence error
  counts produced by metrics.count_sequence_errors, written with different
  bookkeeping (repeated global-minimum scans, end-of-run switch counting)
  so that a bug in one implementation cannot hide in the other. Capped at
  10 frames and 4 objects per frame per side.

Both raise on inputs beyond their caps instead of silently degrading.
"""

from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .metrics import ErrorCounts, GroundTruthFrame, PredictedFrame

_MAX_ASSIGNMENT_SIZE = 10
_MAX_FRAMES = 10
_MAX_OBJECTS = 4

Matching = Tuple[Tuple[int, int], ...]


def matching_cost(cost: np.ndarray, pairs: Sequence[Tuple[int, int]]) -> float:
    """Exact total cost of a matching (order-independent fsum)."""
    return math.fsum(float(cost[i, j]) for i, j in pairs)


def optimal_assignment(cost_matrix) -> Tuple[float, Matching]:
    """Best injective detection-to-track matching of a cost matrix.

    Rows are detections, columns tracks. +inf marks a forbidden pair;
    unmatched rows and columns contribute nothing. "Best" means maximum
    number of matched pairs, and among those the minimum total cost.
    Returns (total cost, pairs sorted by detection index); ties are broken
    deterministically toward the lowest track index at each detection.

    The search is exhaustive over track subsets, so it is exact but limited
    to at most 10 detections and 10 tracks.
    """
    m = np.asarray(cost_matrix, dtype=float)
    if m.size == 0:
        return 0.0, ()
    if m.ndim != 2:
        raise ValueError("cost matrix must be 2-dimensional")
    if np.isnan(m).any() or np.isneginf(m).any():
        raise ValueError("cost entries must be finite or +inf")
    n_det, n_trk = m.shape
    if n_det > _MAX_ASSIGNMENT_SIZE or n_trk > _MAX_ASSIGNMENT_SIZE:
        raise ValueError(
            f"exhaustive assignment is capped at {_MAX_ASSIGNMENT_SIZE}x{_MAX_ASSIGNMENT_SIZE}; "
            f"got {n_det}x{n_trk}"
        )

    # memo[(i, mask)] = best (pairs, cost) achievable for rows i.. with the
    # tracks in mask already taken. Lexicographic order: more pairs wins,
    # then lower cost.
    memo: Dict[Tuple[int, int], Tuple[int, float]] = {}

    def solve(i: int, mask: int) -> Tuple[int, float]:
        if i == n_det:
            return (0, 0.0)
        key = (i, mask)
        if key in memo:
            return memo[key]
        best = None
        for j in range(n_trk):
            if mask >> j & 1 or math.isinf(m[i, j]):
                continue
            sub_pairs, sub_cost = solve(i + 1, mask | (1 << j))
            cand = (sub_pairs + 1, m[i, j] + sub_cost)
            if best is None or (-cand[0], cand[1]) < (-best[0], best[1]):
                best = cand
        skip = solve(i + 1, mask)
        if best is None or (-skip[0], skip[1]) < (-best[0], best[1]):
            best = skip
        memo[key] = best
        return best

    solve(0, 0)

    # Walk the memo forward, re-testing options in the fixed order
    # "track 0, track 1, ..., skip" and taking the first that reproduces
    # the optimal value. Exact float equality holds because the same
    # arithmetic is replayed.
    pairs: List[Tuple[int, int]] = []
    mask = 0
    for i in range(n_det):
        target = memo[(i, mask)]
        chosen = None
        for j in range(n_trk):
            if mask >> j & 1 or math.isinf(m[i, j]):
                continue
            sub_pairs, sub_cost = solve(i + 1, mask | (1 << j))
            if (sub_pairs + 1, m[i, j] + sub_cost) == target:
                chosen = j
                break
        if chosen is not None:
            pairs.append((i, chosen))
            mask |= 1 << chosen
    return matching_cost(m, pairs), tuple(pairs)


def _frame_matching(preds, gts, gate2, taken_pred, taken_gt):
    """Re-derive one frame's greedy matching by brute repeated scans.

    preds/gts are lists of (index-stable) objects; indices already in
    taken_pred/taken_gt are skipped. Returns a list of (gt_index,
    pred_index, squared distance). Comparisons happen on squared distances,
    identical to the production matcher's arithmetic.
    """
    taken_gt = set(taken_gt)
    taken_pred = set(taken_pred)
    out = []
    while True:
        best = None
        for gi, gt in enumerate(gts):
            if gi in taken_gt:
                continue
            for pj, pred in enumerate(preds):
                if pj in taken_pred or pred.class_id != gt.class_id:
                    continue
                dx = gt.x - pred.x
                dy = gt.y - pred.y
                d2 = dx * dx + dy * dy
                if d2 > gate2:
                    continue
                key = (d2, gi, pj)
                if best is None or key < best:
                    best = key
        if best is None:
            return out
        d2, gi, pj = best
        taken_gt.add(gi)
        taken_pred.add(pj)
        out.append((gi, pj, d2))


def recount_metrics(
    pred_frames: Sequence[PredictedFrame],
    gt_frames: Sequence[GroundTruthFrame],
    confidence_floor: float,
    dist_threshold: float,
) -> ErrorCounts:
    """Independent recount of sequence-level IDS/FP/FN/recall.

    Follows the same published protocol as metrics.count_sequence_errors --
    confidence floor, class gate, distance gate, sticky preference for the
    remembered track id, then greedy ascending-distance matching with
    (distance, gt index, pred index) ordering -- but with none of that
    module's code: matching is a repeated global-minimum scan and identity
    switches are counted at the end from per-object match histories.

    Guarded to tiny scenes (<= 10 frames, <= 4 objects per frame per side)
    so it stays obviously-correct rather than fast.
    """
    if len(pred_frames) != len(gt_frames):
        raise ValueError("sequences differ in length")
    if len(gt_frames) > _MAX_FRAMES:
        raise ValueError(f"recount is capped at {_MAX_FRAMES} frames")
    for p, g in zip(pred_frames, gt_frames):
        if p.frame_index != g.frame_index:
            raise ValueError("misaligned frame indices")
        if len(p.objects) > _MAX_OBJECTS or len(g.objects) > _MAX_OBJECTS:
            raise ValueError(f"recount is capped at {_MAX_OBJECTS} objects per frame")
    if not (dist_threshold > 0):
        raise ValueError("dist_threshold must be positive")

    gate2 = dist_threshold * dist_threshold
    history: Dict[int, List[int]] = {}  # gt_id -> matched track ids, in time order
    remembered: Dict[int, int] = {}
    fp = fn = 0
    total_gt = 0
    distances: List[float] = []

    for pred_frame, gt_frame in zip(pred_frames, gt_frames):
        gts = list(gt_frame.objects)
        preds = [p for p in pred_frame.objects if p.confidence >= confidence_floor]
        total_gt += len(gts)

        matched_gt = set()
        matched_pred = set()
        # Sticky pass, simulated directly: first appearance of the
        # remembered id wins; ground truth is visited in input order.
        for gi, gt in enumerate(gts):
            want = remembered.get(gt.gt_id)
            if want is None:
                continue
            pj = None
            for idx, pred in enumerate(preds):
                if idx not in matched_pred and pred.track_id == want:
                    pj = idx
                    break
            if pj is None:
                continue
            pred = preds[pj]
            if pred.class_id != gt.class_id:
                continue
            dx = gt.x - pred.x
            dy = gt.y - pred.y
            d2 = dx * dx + dy * dy
            if d2 <= gate2:
                matched_gt.add(gi)
                matched_pred.add(pj)
                history.setdefault(gt.gt_id, []).append(pred.track_id)
                remembered[gt.gt_id] = pred.track_id
                distances.append(math.sqrt(d2))

        rest = _frame_matching(preds, gts, gate2, matched_pred, matched_gt)
        for gi, pj, d2 in rest:
            gt = gts[gi]
            pred = preds[pj]
            matched_gt.add(gi)
            matched_pred.add(pj)
            history.setdefault(gt.gt_id, []).append(pred.track_id)
            remembered[gt.gt_id] = pred.track_id
            distances.append(math.sqrt(d2))

        fp += len(preds) - len(matched_pred)
        fn += len(gts) - len(matched_gt)

    ids = 0
    for track_ids in history.values():
        for prev, curr in zip(track_ids, track_ids[1:]):
            if prev != curr:
                ids += 1

    recall = (total_gt - fn) / total_gt if total_gt else 0.0
    return ErrorCounts(ids, fp, fn, recall, tuple(distances), confidence_floor)
