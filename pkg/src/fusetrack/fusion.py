"""Radar-to-detection association through image-plane frustums.

Radar returns are sparse points with unreliable height. Each return is
expanded into a vertical pillar of predefined size so that the question
"does this return belong to that detected object" can be asked in the image:
a pillar belongs to a detection when the pillar pokes into the frustum that
the detection's 2D box spans between a near and a far depth plane. When
several pillars land in one frustum, the closest one (smallest camera-axis
depth of the pillar base) wins and supplies the detection's fused depth and
velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .geometry import CameraModel, backproject_ray, project_points


@dataclass(frozen=True)
class RadarPoint:
    """One radar return: vehicle-frame position plus velocity components.

    Velocities are carried through untouched; no ego-motion compensation
    happens anywhere in this module.
    """

    x: float
    y: float
    z: float
    vx: float
    vy: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z, self.vx, self.vy)):
            raise ValueError("radar point fields must be finite")

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class PillarDims:
    """Pillar extents in meters. Defaults follow the usual radar-pillar
    preprocessing sizes for vehicle scenes."""

    width_y: float = 0.5
    height_z: float = 1.5
    depth_x: float = 0.5

    def __post_init__(self):
        if min(self.width_y, self.height_z, self.depth_x) <= 0:
            raise ValueError("pillar dimensions must be positive")


@dataclass(frozen=True)
class Pillar:
    """A radar point expanded into an axis-aligned box: centered on the point
    in x and y, grounded at the point in z (the pillar grows upward)."""

    base: RadarPoint
    dims: PillarDims

    def corner_points(self) -> np.ndarray:
        """The 8 box corners, shape (8, 3)."""
        hx = 0.5 * self.dims.depth_x
        hy = 0.5 * self.dims.width_y
        xs = (self.base.x - hx, self.base.x + hx)
        ys = (self.base.y - hy, self.base.y + hy)
        zs = (self.base.z, self.base.z + self.dims.height_z)
        return np.array([(x, y, z) for x in xs for y in ys for z in zs])

    def test_points(self) -> np.ndarray:
        """Base point followed by the 8 corners, shape (9, 3)."""
        return np.vstack([self.base.position, self.corner_points()])


@dataclass(frozen=True)
class PreliminaryDetection:
    """A detected object before radar fusion: its image box, the estimated
    depth the frustum is centered on, and its class. Confidence only matters
    in exclusive association mode (higher confidence claims pillars first)."""

    bbox2d: Tuple[float, float, float, float]
    est_depth: float
    class_id: int
    confidence: float = 1.0

    def __post_init__(self):
        u_min, v_min, u_max, v_max = self.bbox2d
        if not (u_min < u_max and v_min < v_max):
            raise ValueError("bbox2d must have positive width and height")
        if not (self.est_depth > 0 and math.isfinite(self.est_depth)):
            raise ValueError("est_depth must be positive and finite")


@dataclass(frozen=True)
class Frustum:
    """The view volume behind a detection box, clipped to a depth window.

    corner_rays are unit directions (vehicle frame) through the four bbox
    corners; origin/axis are the camera center and optical axis so that
    containment can be tested without the camera at hand.
    """

    corner_rays: np.ndarray  # (4, 3), order: top-left, top-right, bottom-right, bottom-left
    depth_min: float
    depth_max: float
    origin: np.ndarray  # camera center, vehicle frame
    axis: np.ndarray  # unit optical axis, vehicle frame

    def __post_init__(self):
        if not (0.0 < self.depth_min < self.depth_max):
            raise ValueError("frustum depth window must satisfy 0 < depth_min < depth_max")

    def contains_point(self, point) -> bool:
        """True when the vehicle-frame point lies inside the frustum volume
        (closed bounds on both the side planes and the depth window)."""
        q = np.asarray(point, dtype=float) - self.origin
        depth = float(self.axis @ q)
        if not (self.depth_min <= depth <= self.depth_max):
            return False
        rays = self.corner_rays
        mean_ray = rays.sum(axis=0)
        for i in range(4):
            normal = np.cross(rays[i], rays[(i + 1) % 4])
            if normal @ mean_ray < 0:
                normal = -normal
            if normal @ q < -1e-12:
                return False
        return True


class RadarMatch(NamedTuple):
    """Fused values handed to a detection by its associated pillar."""

    depth: float
    vx: float
    vy: float


def expand_pillars(points: Sequence[RadarPoint], dims: PillarDims | Tuple[float, float, float]) -> List[Pillar]:
    """Expand radar points into pillars, one per point, order preserved."""
    if not isinstance(dims, PillarDims):
        dims = PillarDims(*dims)
    return [Pillar(p, dims) for p in points]


def build_frustum(det: PreliminaryDetection, camera: CameraModel, depth_tolerance: float) -> Frustum:
    """Frustum of a detection: rays through its bbox corners and the depth
    window est_depth * (1 -+ depth_tolerance)."""
    if not (0.0 < depth_tolerance < 1.0):
        raise ValueError("depth_tolerance must lie in (0, 1)")
    u_min, v_min, u_max, v_max = det.bbox2d
    corners = [(u_min, v_min), (u_max, v_min), (u_max, v_max), (u_min, v_max)]
    rays = np.array([backproject_ray(u, v, camera) for u, v in corners])
    return Frustum(
        corner_rays=rays,
        depth_min=det.est_depth * (1.0 - depth_tolerance),
        depth_max=det.est_depth * (1.0 + depth_tolerance),
        origin=camera.center,
        axis=camera.rotation[2].copy(),
    )


def associate_boxes(
    boxes: np.ndarray,
    est_depths: np.ndarray,
    confidences: np.ndarray,
    pillars: Sequence[Pillar],
    camera: CameraModel,
    depth_tolerance: float,
    exclusive: bool = False,
) -> List[Optional[RadarMatch]]:
    """Array-level core of frustum_associate: boxes is (D, 4) rows of
    (u_min, v_min, u_max, v_max), est_depths and confidences are (D,).
    Inputs are not validated here."""
    results: List[Optional[RadarMatch]] = [None] * len(boxes)
    if len(boxes) == 0 or not pillars:
        return results

    # Batched equivalent of stacking p.test_points(): row 0 is the base,
    # rows 1..8 the corners, offsets signed exactly as corner_points builds
    # them so the arithmetic matches point for point.
    bases_xyz = np.array([(p.base.x, p.base.y, p.base.z) for p in pillars])
    half_x = np.array([0.5 * p.dims.depth_x for p in pillars])
    half_y = np.array([0.5 * p.dims.width_y for p in pillars])
    height = np.array([p.dims.height_z for p in pillars])
    sign_x = np.array([0.0, -1, -1, -1, -1, 1, 1, 1, 1])
    sign_y = np.array([0.0, -1, -1, 1, 1, -1, -1, 1, 1])
    sign_z = np.array([0.0, 0, 1, 0, 1, 0, 1, 0, 1])
    pts = np.empty((len(pillars), 9, 3))
    pts[:, :, 0] = bases_xyz[:, [0]] + sign_x * half_x[:, None]
    pts[:, :, 1] = bases_xyz[:, [1]] + sign_y * half_y[:, None]
    pts[:, :, 2] = bases_xyz[:, [2]] + sign_z * height[:, None]
    uv, _, _ = project_points(pts.reshape(-1, 3), camera)
    uv = uv.reshape(len(pillars), 9, 2)
    # Base depth along the camera axis, defined even behind the camera
    # (negative depths simply fail every window test).
    bases = pts[:, 0, :]
    base_depth = bases @ camera.rotation[2] + camera.translation[2]

    u9 = uv[:, :, 0]  # (P, 9)
    v9 = uv[:, :, 1]
    with np.errstate(invalid="ignore"):
        # Cheap prefilter: a pillar can only have a point inside a box if the
        # rectangle around its projectable points overlaps the box. NaN
        # coordinates (unprojectable points) are excluded from the rectangle;
        # a pillar with no projectable point gets an empty rectangle.
        u_valid = ~np.isnan(u9)
        v_valid = ~np.isnan(v9)
        u_lo = np.where(u_valid, u9, np.inf).min(axis=1)
        u_hi = np.where(u_valid, u9, -np.inf).max(axis=1)
        v_lo = np.where(v_valid, v9, np.inf).min(axis=1)
        v_hi = np.where(v_valid, v9, -np.inf).max(axis=1)
        cand = u_hi[None, :] >= boxes[:, [0]]
        cand &= u_lo[None, :] <= boxes[:, [2]]
        cand &= v_hi[None, :] >= boxes[:, [1]]
        cand &= v_lo[None, :] <= boxes[:, [3]]
        cand &= base_depth[None, :] >= est_depths[:, None] * (1.0 - depth_tolerance)
        cand &= base_depth[None, :] <= est_depths[:, None] * (1.0 + depth_tolerance)

        di, pj = np.nonzero(cand)
        hit_di: np.ndarray
        hit_pj: np.ndarray
        if di.size:
            # Exact membership test, only on the surviving pairs.
            pu = u9[pj]
            pv = v9[pj]
            b = boxes[di]
            inside = pu >= b[:, [0]]
            inside &= pu <= b[:, [2]]
            inside &= pv >= b[:, [1]]
            inside &= pv <= b[:, [3]]
            some = inside.any(axis=1)
            hit_di, hit_pj = di[some], pj[some]
        else:
            hit_di, hit_pj = di, pj

    if exclusive:
        hit = np.zeros((len(boxes), len(pillars)), dtype=bool)
        hit[hit_di, hit_pj] = True
        order = sorted(range(len(boxes)), key=lambda i: (-confidences[i], i))
        used = np.zeros(len(pillars), dtype=bool)
        for i in order:
            candidates = np.nonzero(hit[i] & ~used)[0]
            if candidates.size == 0:
                continue
            # argmin returns the first minimum; candidates are in ascending
            # input order, which is exactly the documented tie-break.
            best = int(candidates[np.argmin(base_depth[candidates])])
            pillar = pillars[best]
            results[i] = RadarMatch(float(base_depth[best]), pillar.base.vx, pillar.base.vy)
            used[best] = True
        return results

    # Independent picks: per detection the smallest hit depth wins, exact
    # depth ties to the lowest pillar index (lexsort keys, minor to major).
    if hit_di.size:
        order = np.lexsort((hit_pj, base_depth[hit_pj], hit_di))
        di_sorted = hit_di[order]
        pj_sorted = hit_pj[order]
        first = np.unique(di_sorted, return_index=True)[1]
        for k in first.tolist():
            i = int(di_sorted[k])
            b = int(pj_sorted[k])
            pillar = pillars[b]
            results[i] = RadarMatch(float(base_depth[b]), pillar.base.vx, pillar.base.vy)
    return results


def frustum_associate(
    dets: Sequence[PreliminaryDetection],
    pillars: Sequence[Pillar],
    camera: CameraModel,
    depth_tolerance: float,
    exclusive: bool = False,
) -> List[Optional[RadarMatch]]:
    """Associate at most one pillar to every detection.

    A pillar is inside a detection's frustum when any of its 8 corners or
    its base point projects into the bbox (closed bounds) and the base
    camera-axis depth falls in [est_depth*(1-tol), est_depth*(1+tol)].
    Among inside pillars the smallest base depth wins; exact depth ties go
    to the lowest pillar input index. Detections with no inside pillar get
    None.

    With ``exclusive=True`` detections claim pillars greedily in descending
    confidence order (input order on ties) and a pillar serves at most one
    detection. The default mirrors the independent per-detection behavior.
    """
    if not (0.0 < depth_tolerance < 1.0):
        raise ValueError("depth_tolerance must lie in (0, 1)")
    if not dets or not pillars:
        return [None] * len(dets)
    boxes = np.array([d.bbox2d for d in dets])
    est = np.array([d.est_depth for d in dets])
    conf = np.array([d.confidence for d in dets])
    return associate_boxes(boxes, est, conf, pillars, camera, depth_tolerance, exclusive)
