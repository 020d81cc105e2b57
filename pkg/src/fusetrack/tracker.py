"""Online per-frame tracking: fuse, associate, manage identities.

One Tracker instance consumes an ordered stream of FrameInputs. Each step:

1. drops detections below the confidence floor,
2. (if enabled) refines each boxed detection's depth and velocity from the
   radar points that fall inside its frustum,
3. greedily associates the detections with live tracks,
4. updates matched tracks, ages the rest, drops tracks that have been
   missing for max_age consecutive frames, and spawns new tracks (fresh
   monotonically increasing ids, assigned in descending confidence order)
   for the leftovers.

There is no re-identification and no motion extrapolation: a coasted track
keeps its last observed state, and once an identity is dropped it never
comes back. With max_age = 1 a single missed frame therefore always splits
an identity. step() is deterministic, so replaying a recorded sequence
reproduces every result bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .association import AssociationResult, CostWeights, Detection, Track, greedy_associate
from .fusion import PillarDims, RadarPoint, associate_boxes, expand_pillars
from .geometry import CameraModel
from .heatmap import Heatmap, HeatmapConfig, render_gaussian


@dataclass(frozen=True)
class FrameInput:
    """One frame of sensor input. Detections carry an optional image box;
    only boxed detections participate in radar fusion."""

    frame_index: int
    timestamp: float
    detections: Tuple[Detection, ...]
    radar: Tuple[RadarPoint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "detections", tuple(self.detections))
        object.__setattr__(self, "radar", tuple(self.radar))
        if not math.isfinite(self.timestamp):
            raise ValueError("timestamp must be finite")


@dataclass(frozen=True)
class TrackerConfig:
    """Tracking policy. Scene geometry (the camera) is passed to the
    Tracker itself so this object stays a plain serializable config."""

    weights: CostWeights = CostWeights()
    pillar_dims: PillarDims = PillarDims()
    depth_tolerance: float = 0.25
    max_age: int = 3
    min_confidence: float = 0.0
    fusion_enabled: bool = True

    def __post_init__(self):
        if self.max_age < 1:
            raise ValueError("max_age must be >= 1")
        if not (0.0 <= self.min_confidence < 1.0):
            raise ValueError("min_confidence must lie in [0, 1)")
        if not (0.0 < self.depth_tolerance < 1.0):
            raise ValueError("depth_tolerance must lie in (0, 1)")


@dataclass(frozen=True, slots=True)
class TrackSnapshot:
    """Immutable view of a reported track at one frame. position is the
    vehicle-frame (x, y, z) of the track center, present when the tracker
    knows its camera; fused tells whether depth/velocity came from radar."""

    track_id: int
    u: float
    v: float
    depth: float
    vx: float
    vy: float
    class_id: int
    confidence: float
    age: int
    fused: bool
    position: Optional[Tuple[float, float, float]] = None


@dataclass(frozen=True)
class FrameResult:
    """Tracks reported for one frame: matched or newly spawned this frame
    (coasting tracks are withheld until they are seen again)."""

    frame_index: int
    timestamp: float
    tracks: Tuple[TrackSnapshot, ...]

    def __post_init__(self):
        ids = [t.track_id for t in self.tracks]
        if len(set(ids)) != len(ids):
            raise ValueError("track ids must be unique within a frame")


@dataclass(frozen=True)
class LatencyStats:
    """Wall-clock per-step timings in milliseconds."""

    count: int
    mean_ms: float
    median_ms: float
    p99_ms: float
    max_ms: float

    @staticmethod
    def from_samples(samples: Sequence[float]) -> "LatencyStats":
        if not samples:
            return LatencyStats(0, 0.0, 0.0, 0.0, 0.0)
        ordered = sorted(samples)

        def percentile(q: float) -> float:
            # linear interpolation between closest ranks
            pos = q * (len(ordered) - 1)
            lo = int(math.floor(pos))
            hi = min(lo + 1, len(ordered) - 1)
            return ordered[lo] + (ordered[hi] - ordered[lo]) * (pos - lo)

        return LatencyStats(
            count=len(ordered),
            mean_ms=math.fsum(ordered) / len(ordered),
            median_ms=percentile(0.5),
            p99_ms=percentile(0.99),
            max_ms=ordered[-1],
        )


class Tracker:
    """Stateful single-sequence tracker; see the module docstring.

    camera is required when fusion is enabled (frustums live in vehicle
    space) and is otherwise optional; without it, snapshots simply omit
    their vehicle-frame position.
    """

    def __init__(
        self,
        config: TrackerConfig = TrackerConfig(),
        camera: Optional[CameraModel] = None,
        record_association: bool = False,
    ):
        if config.fusion_enabled and camera is None:
            raise ValueError("fusion requires a camera model")
        self.config = config
        self.camera = camera
        self.record_association = record_association
        # (detections as associated, pre-update track copies, result) of the
        # most recent step; populated only when record_association is set.
        self.last_association = None
        self._tracks: List[Track] = []
        self._next_id = 1
        self._last_frame_index: Optional[int] = None
        self._last_timestamp: Optional[float] = None

    @property
    def live_tracks(self) -> Tuple[Track, ...]:
        """Current track states, including coasting ones (read-only copies)."""
        return tuple(replace(t) for t in self._tracks)

    def _check_order(self, frame: FrameInput):
        if self._last_frame_index is not None:
            if frame.frame_index <= self._last_frame_index:
                raise ValueError(
                    f"frame {frame.frame_index} is not after frame {self._last_frame_index}"
                )
            if frame.timestamp < self._last_timestamp:
                raise ValueError("timestamps must be non-decreasing")
        self._last_frame_index = frame.frame_index
        self._last_timestamp = frame.timestamp

    def _fuse(
        self, dets: Sequence[Detection], radar: Sequence[RadarPoint]
    ) -> Tuple[List[Detection], List[bool]]:
        """Override depth/velocity from the radar pillar found in each boxed
        detection's frustum; detections without a box or a hit pass through.
        Returns the (possibly replaced) detections and a fused-or-not flag
        per detection."""
        out = list(dets)
        flags = [False] * len(dets)
        boxed = [(i, d) for i, d in enumerate(dets) if d.bbox is not None]
        if not boxed or not radar:
            return out, flags
        pillars = expand_pillars(radar, self.config.pillar_dims)
        boxes = np.array([d.bbox for _, d in boxed])
        est = np.array([d.depth for _, d in boxed])
        conf = np.array([d.confidence for _, d in boxed])
        matches = associate_boxes(
            boxes, est, conf, pillars, self.camera, self.config.depth_tolerance
        )
        for (i, det), match in zip(boxed, matches):
            if match is None:
                continue
            out[i] = replace(det, depth=match.depth, vx=match.vx, vy=match.vy)
            flags[i] = True
        return out, flags

    def step(self, frame: FrameInput) -> FrameResult:
        self._check_order(frame)
        cfg = self.config

        kept = [d for d in frame.detections if d.confidence >= cfg.min_confidence]
        if cfg.fusion_enabled and kept:
            kept, fused_flags = self._fuse(kept, frame.radar)
        else:
            fused_flags = [False] * len(kept)

        result: AssociationResult = greedy_associate(kept, self._tracks, cfg.weights)
        if self.record_association:
            self.last_association = (
                tuple(kept),
                tuple(replace(t) for t in self._tracks),
                result,
            )
        by_id: Dict[int, Track] = {t.track_id: t for t in self._tracks}

        reported: List[Tuple[int, Detection, bool]] = []  # (track_id, det, fused)
        for det_idx, track_id in result.matches:
            det = kept[det_idx]
            trk = by_id[track_id]
            trk.u, trk.v, trk.depth = det.u, det.v, det.depth
            trk.vx, trk.vy = det.vx, det.vy
            trk.confidence = det.confidence
            trk.last_seen = frame.frame_index
            trk.age += 1
            trk.misses = 0
            trk.fused = fused_flags[det_idx]
            reported.append((track_id, det, trk.fused))

        for det_idx in result.unmatched_detections:
            det = kept[det_idx]
            trk = Track(
                track_id=self._next_id,
                u=det.u,
                v=det.v,
                depth=det.depth,
                vx=det.vx,
                vy=det.vy,
                class_id=det.class_id,
                confidence=det.confidence,
                last_seen=frame.frame_index,
                age=1,
                misses=0,
                fused=fused_flags[det_idx],
            )
            self._next_id += 1
            self._tracks.append(trk)
            reported.append((trk.track_id, det, trk.fused))

        survivors: List[Track] = []
        matched_ids = {tid for tid, _, _ in reported}
        for trk in self._tracks:
            if trk.track_id in matched_ids:
                survivors.append(trk)
                continue
            trk.misses += 1
            trk.age += 1
            if trk.misses < cfg.max_age:
                survivors.append(trk)
        self._tracks = survivors

        live_by_id = {t.track_id: t for t in self._tracks}
        reported.sort(key=lambda r: r[0])
        positions: List[Optional[Tuple[float, float, float]]] = [None] * len(reported)
        if self.camera is not None and reported:
            # One batched backprojection instead of a call per track; the
            # arithmetic matches image_to_vehicle exactly.
            cam = self.camera
            uvd = np.array([(det.u, det.v, det.depth) for _, det, _ in reported])
            d_cam = np.empty((len(reported), 3))
            d_cam[:, 0] = (uvd[:, 0] - cam.cx) / cam.fx
            d_cam[:, 1] = (uvd[:, 1] - cam.cy) / cam.fy
            d_cam[:, 2] = 1.0
            p_veh = (d_cam * uvd[:, 2:3] - cam.translation) @ cam.rotation
            positions = [tuple(row) for row in p_veh]
        snapshots = []
        for (track_id, det, was_fused), position in zip(reported, positions):
            trk = live_by_id[track_id]
            snapshots.append(
                TrackSnapshot(
                    track_id=track_id,
                    u=det.u,
                    v=det.v,
                    depth=det.depth,
                    vx=det.vx,
                    vy=det.vy,
                    class_id=det.class_id,
                    confidence=det.confidence,
                    age=trk.age,
                    fused=was_fused,
                    position=position,
                )
            )
        return FrameResult(frame.frame_index, frame.timestamp, tuple(snapshots))

    def prior_heatmap(self, config: HeatmapConfig, sigma: float = 2.0) -> Heatmap:
        """Diagnostic view of the current track centers as a center heatmap
        (one Gaussian per live track on its nearest grid cell)."""
        centers = []
        for t in self._tracks:
            gx = min(config.grid_width - 1, max(0, round(t.u / config.downsample)))
            gy = min(config.grid_height - 1, max(0, round(t.v / config.downsample)))
            centers.append((int(gx), int(gy), t.class_id, sigma))
        return render_gaussian(centers, config)


def run_sequence(
    frames: Sequence[FrameInput],
    config: TrackerConfig = TrackerConfig(),
    camera: Optional[CameraModel] = None,
) -> Tuple[List[FrameResult], LatencyStats]:
    """Fold step over an ordered sequence, timing each step (the timer wraps
    only the tracker work, not input construction or serialization)."""
    tracker = Tracker(config, camera)
    results: List[FrameResult] = []
    samples: List[float] = []
    for frame in frames:
        start = time.perf_counter()
        result = tracker.step(frame)
        samples.append((time.perf_counter() - start) * 1e3)
        results.append(result)
    return results, LatencyStats.from_samples(samples)
