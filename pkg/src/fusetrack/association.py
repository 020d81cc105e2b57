"""Detection-to-track association.

Each detection carries a backward displacement: ``center - displacement``
estimates where the same object sat in the previous frame. Candidate tracks
are the ones whose last observed center lies within a pixel radius of that
gated position. Among candidates, a weighted sum of squared pixel, depth,
and velocity differences picks the match; class mismatches are infinitely
expensive. Detections claim tracks greedily in descending confidence order,
which is cheap, deterministic, and at desk scale indistinguishable from the
optimal assignment (the oracle module exists to check exactly that).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np


@dataclass(frozen=True, slots=True)
class Detection:
    """One observed object in the current frame.

    u, v are the center pixel; depth is camera-axis meters; vx, vy are
    vehicle-frame m/s. du, dv point backward in time: (u - du, v - dv) is
    the estimated previous-frame center of the same object, and the match
    gate is evaluated there. bbox is the optional raw image box
    (u_min, v_min, u_max, v_max) used only by radar fusion.
    """

    u: float
    v: float
    depth: float
    vx: float
    vy: float
    class_id: int
    confidence: float
    du: float = 0.0
    dv: float = 0.0
    bbox: Optional[Tuple[float, float, float, float]] = None

    def __post_init__(self):
        values = (self.u, self.v, self.depth, self.vx, self.vy, self.confidence, self.du, self.dv)
        if not all(math.isfinite(x) for x in values):
            raise ValueError("detection fields must be finite")
        if self.depth <= 0:
            raise ValueError("detection depth must be positive")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError("confidence must lie in [0, 1]")


@dataclass(slots=True)
class Track:
    """A live track: the latest matched detection's state plus lifecycle
    bookkeeping. The class never changes after creation (cross-class matches
    cost infinity), and ids are never reused within a sequence."""

    track_id: int
    u: float
    v: float
    depth: float
    vx: float
    vy: float
    class_id: int
    confidence: float
    last_seen: int
    age: int = 0
    misses: int = 0
    fused: bool = False


@dataclass(frozen=True)
class CostWeights:
    """Weights of the squared pixel / depth / velocity terms plus the gate
    radius in pixels.

    Defaults normalize each term to roughly O(1) at gate scale for the
    800x448 default camera: alpha = 1/radius^2 so a gate-radius pixel miss
    costs 1, beta = 0.04 so a 5 m depth error costs 1, delta = 0.25 so a
    2 m/s velocity error costs 1.
    """

    alpha: float = 4e-4
    beta: float = 0.04
    delta: float = 0.25
    radius: float = 50.0

    def __post_init__(self):
        if min(self.alpha, self.beta, self.delta) < 0:
            raise ValueError("cost weights must be non-negative")
        if self.alpha == 0 and self.beta == 0 and self.delta == 0:
            raise ValueError("at least one cost weight must be positive")
        if not (self.radius > 0):
            raise ValueError("gate radius must be positive")


@dataclass(frozen=True)
class AssociationResult:
    """matches are (detection index, track id) in processing order;
    unmatched_detections follow processing (descending confidence) order so
    that new-track ids assigned from it are reproducible; unmatched_tracks
    keep input order."""

    matches: Tuple[Tuple[int, int], ...]
    unmatched_detections: Tuple[int, ...]
    unmatched_tracks: Tuple[int, ...]


def pairwise_cost(det: Detection, trk: Track, weights: CostWeights) -> float:
    """Association cost between a detection and a track.

    Infinite across classes; otherwise
        alpha * ((du)^2 + (dv)^2) + beta * (dd)^2 + delta * ((dvx)^2 + (dvy)^2)
    on the raw center/depth/velocity differences (the displacement only
    shifts the gate, never the cost).
    """
    if det.class_id != trk.class_id:
        return math.inf
    pixel = (det.u - trk.u) ** 2 + (det.v - trk.v) ** 2
    depth = (det.depth - trk.depth) ** 2
    velocity = (det.vx - trk.vx) ** 2 + (det.vy - trk.vy) ** 2
    return weights.alpha * pixel + weights.beta * depth + weights.delta * velocity


def processing_order(dets: Sequence[Detection]) -> List[int]:
    """Descending confidence, ties by input index."""
    return sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, i))


def _feasible_pairs(
    dets: Sequence[Detection], tracks: Sequence[Track], weights: CostWeights
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Every pair the matcher may use: (det rows, track cols, costs), rows
    ascending. A pair is feasible when the classes agree and the track center
    lies within the gate radius of the displacement-compensated detection
    center. Costs are computed only for feasible pairs, elementwise with the
    same arithmetic as pairwise_cost."""
    det_state = np.array(
        [(d.u, d.v, d.depth, d.vx, d.vy, d.u - d.du, d.v - d.dv) for d in dets]
    )
    trk_state = np.array([(t.u, t.v, t.depth, t.vx, t.vy) for t in tracks])
    det_cls = np.array([d.class_id for d in dets], dtype=np.int32)
    trk_cls = np.array([t.class_id for t in tracks], dtype=np.int32)
    trk_u = trk_state[:, 0]
    trk_v = trk_state[:, 1]
    gated_u = det_state[:, 5]
    gated_v = det_state[:, 6]

    # Window prefilter on the u axis: any in-gate track satisfies
    # |track u - gated u| <= radius, so only tracks inside a slightly
    # widened u interval (slack swallows rounding) need the exact test.
    slack = 1e-9 + 1e-12 * weights.radius
    t_order = np.argsort(trk_u, kind="stable")
    tu_sorted = trk_u[t_order]
    lo = np.searchsorted(tu_sorted, gated_u - (weights.radius + slack), side="left")
    hi = np.searchsorted(tu_sorted, gated_u + (weights.radius + slack), side="right")
    lens = hi - lo
    total = int(lens.sum())
    if total == 0:
        empty = np.empty(0, dtype=np.intp)
        return empty, empty, np.empty(0)
    ii = np.repeat(np.arange(len(dets)), lens)
    offsets = np.repeat(np.cumsum(lens) - lens - lo, lens)
    jj = t_order[np.arange(total) - offsets]

    # Exact gate on the windowed pairs only.
    du = gated_u[ii] - trk_u[jj]
    dv = gated_v[ii] - trk_v[jj]
    keep = du * du + dv * dv <= weights.radius**2
    keep &= det_cls[ii] == trk_cls[jj]
    ii, jj = ii[keep], jj[keep]
    if ii.size == 0:
        return ii, jj, np.empty(0)

    det_pairs = det_state[ii]
    trk_pairs = trk_state[jj]
    pixel = (det_pairs[:, 0] - trk_pairs[:, 0]) ** 2 + (det_pairs[:, 1] - trk_pairs[:, 1]) ** 2
    depth = (det_pairs[:, 2] - trk_pairs[:, 2]) ** 2
    velocity = (det_pairs[:, 3] - trk_pairs[:, 3]) ** 2 + (det_pairs[:, 4] - trk_pairs[:, 4]) ** 2
    costs = weights.alpha * pixel + weights.beta * depth + weights.delta * velocity
    return ii, jj, costs


def greedy_associate(
    dets: Sequence[Detection], tracks: Sequence[Track], weights: CostWeights
) -> AssociationResult:
    """Greedy one-pass matching.

    Detections are processed in descending confidence order; each grabs the
    available track with the lowest pairwise cost among tracks inside its
    gate (||track center - (det center - displacement)|| <= radius, bounds
    closed). Cost ties fall to the lowest track id. A track serves at most
    one detection per frame.
    """
    ids = [t.track_id for t in tracks]
    if len(set(ids)) != len(ids):
        raise ValueError("track ids must be distinct")

    order = processing_order(dets)
    if not dets or not tracks:
        return AssociationResult((), tuple(order), tuple(ids))

    ii, jj, costs = _feasible_pairs(dets, tracks, weights)
    # Pairs arrive sorted by detection row, so each row is one slice.
    row_start = np.searchsorted(ii, np.arange(len(dets) + 1)).tolist()
    jj_list = jj.tolist()
    cost_list = costs.tolist()

    used = [False] * len(tracks)
    matches: List[Tuple[int, int]] = []
    unmatched_dets: List[int] = []
    for i in order:
        best: Optional[Tuple[float, int, int]] = None  # (cost, track id, track pos)
        for k in range(row_start[i], row_start[i + 1]):
            j = jj_list[k]
            if used[j]:
                continue
            key = (cost_list[k], ids[j], j)
            if best is None or key < best:
                best = key
        if best is None:
            unmatched_dets.append(i)
        else:
            matches.append((i, best[1]))
            used[best[2]] = True
    unmatched_tracks = tuple(t.track_id for j, t in enumerate(tracks) if not used[j])
    return AssociationResult(tuple(matches), tuple(unmatched_dets), unmatched_tracks)


def cost_matrix(dets: Sequence[Detection], tracks: Sequence[Track], weights: CostWeights) -> np.ndarray:
    """Dense detection-by-track cost matrix (rows = detections in input
    order), with +inf for every pair the greedy matcher would refuse:
    different class or displacement-compensated center outside the gate
    radius. Feeding this to an exact assignment solver therefore compares
    like against like."""
    out = np.full((len(dets), len(tracks)), np.inf)
    if dets and tracks:
        ii, jj, costs = _feasible_pairs(dets, tracks, weights)
        out[ii, jj] = costs
    return out
