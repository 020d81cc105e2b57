"""Deterministic synthetic scenes: scripted motion, noisy detections, radar.

Objects move with constant velocity in the vehicle frame. Each frame the
simulator projects every object center through the camera; an object is in
view while its center lands inside the (closed) image bounds with positive
depth. Visible objects produce:

* a detection: projected center + Gaussian pixel noise, camera-axis depth +
  noise, velocity + noise, the true projected box (used for radar fusion),
  and a backward pixel displacement du, dv such that (u - du, v - dv) is
  the true previous-frame center (exact zeros on frame 0);
* radar points scattered around the true ground position, carrying the
  object velocity + noise, plus per-frame uniform clutter backprojected
  from random pixels.

Two deterministic suppressions run before noise is applied: a visual
occlusion rule (when two true boxes overlap with IoU above the threshold,
the farther object loses its detection; radar is unaffected) and i.i.d.
detection dropout. Confidence is drawn once per object in [0.5, 1).

All randomness flows through counter-based Philox streams keyed by
(seed, frame, channel), so the same config generates a bit-identical Scene
on any platform, any number of times, in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .association import Detection
from .fusion import RadarPoint
from .geometry import CameraModel, image_to_vehicle, project_point, project_to_image
from .metrics import GroundTruthFrame, GroundTruthObject
from .tracker import FrameInput

# Philox stream channels: one per independent noise source.
_CENTER, _DEPTH, _VEL, _DISP, _DROPOUT, _CONF, _RADAR_POS, _RADAR_VEL, _CLUTTER = range(9)

_CLUTTER_DEPTH_RANGE = (5.0, 80.0)
_CLUTTER_SPEED_RANGE = (-10.0, 10.0)


def _stream(seed: int, frame: int, channel: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(frame, channel))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ObjectSpec:
    """One scripted object: constant-velocity motion from ``position`` with
    ``velocity`` (m/s, vehicle frame), a projected box of ``size`` =
    (width across y, height across z) meters."""

    class_id: int
    position: Tuple[float, float, float]
    velocity: Tuple[float, float, float]
    size: Tuple[float, float] = (1.8, 1.5)

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(x) for x in self.position))
        object.__setattr__(self, "velocity", tuple(float(x) for x in self.velocity))
        object.__setattr__(self, "size", tuple(float(x) for x in self.size))
        if len(self.position) != 3 or len(self.velocity) != 3 or len(self.size) != 2:
            raise ValueError("position/velocity are 3-vectors, size is (width, height)")
        if min(self.size) <= 0:
            raise ValueError("object size must be positive")

    def center_at(self, t: float) -> np.ndarray:
        p, v = self.position, self.velocity
        return np.array([p[0] + v[0] * t, p[1] + v[1] * t, p[2] + v[2] * t])


@dataclass(frozen=True)
class NoiseModel:
    """Standard deviations of the detection noise (zero = exact)."""

    center_px: float = 1.0
    depth_m: float = 0.5
    velocity_mps: float = 0.3
    displacement_px: float = 1.0

    def __post_init__(self):
        if min(self.center_px, self.depth_m, self.velocity_mps, self.displacement_px) < 0:
            raise ValueError("noise sigmas must be >= 0")

    @classmethod
    def none(cls) -> "NoiseModel":
        return cls(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class RadarModel:
    points_per_object: int = 3
    position_sigma_m: float = 0.3
    velocity_sigma_mps: float = 0.3
    clutter_per_frame: int = 2

    def __post_init__(self):
        if self.points_per_object < 0 or self.clutter_per_frame < 0:
            raise ValueError("radar point counts must be >= 0")
        if min(self.position_sigma_m, self.velocity_sigma_mps) < 0:
            raise ValueError("radar sigmas must be >= 0")


@dataclass(frozen=True)
class OcclusionRule:
    """Suppress the farther detection when two true boxes overlap more than
    iou_threshold. Equal-depth overlaps drop the later-listed object."""

    iou_threshold: float = 0.7
    enabled: bool = True

    def __post_init__(self):
        if not (0.0 < self.iou_threshold <= 1.0):
            raise ValueError("iou_threshold must lie in (0, 1]")


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    num_frames: int
    frame_dt: float
    camera: CameraModel
    objects: Tuple[ObjectSpec, ...]
    noise: NoiseModel = NoiseModel()
    dropout: float = 0.0
    radar: RadarModel = RadarModel()
    occlusion: OcclusionRule = OcclusionRule()

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if self.num_frames < 1:
            raise ValueError("num_frames must be >= 1")
        if not (self.frame_dt > 0):
            raise ValueError("frame_dt must be positive")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout must lie in [0, 1)")

    def to_dict(self) -> Dict:
        return {
            "seed": self.seed,
            "num_frames": self.num_frames,
            "frame_dt": self.frame_dt,
            "camera": self.camera.to_dict(),
            "objects": [
                {
                    "class_id": o.class_id,
                    "position": list(o.position),
                    "velocity": list(o.velocity),
                    "size": list(o.size),
                }
                for o in self.objects
            ],
            "noise": {
                "center_px": self.noise.center_px,
                "depth_m": self.noise.depth_m,
                "velocity_mps": self.noise.velocity_mps,
                "displacement_px": self.noise.displacement_px,
            },
            "dropout": self.dropout,
            "radar": {
                "points_per_object": self.radar.points_per_object,
                "position_sigma_m": self.radar.position_sigma_m,
                "velocity_sigma_mps": self.radar.velocity_sigma_mps,
                "clutter_per_frame": self.radar.clutter_per_frame,
            },
            "occlusion": {
                "iou_threshold": self.occlusion.iou_threshold,
                "enabled": self.occlusion.enabled,
            },
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ScenarioConfig":
        return cls(
            seed=int(data["seed"]),
            num_frames=int(data["num_frames"]),
            frame_dt=float(data["frame_dt"]),
            camera=CameraModel.from_dict(data["camera"]),
            objects=tuple(
                ObjectSpec(
                    class_id=int(o["class_id"]),
                    position=tuple(o["position"]),
                    velocity=tuple(o["velocity"]),
                    size=tuple(o.get("size", (1.8, 1.5))),
                )
                for o in data["objects"]
            ),
            noise=NoiseModel(**data.get("noise", {})),
            dropout=float(data.get("dropout", 0.0)),
            radar=RadarModel(**data.get("radar", {})),
            occlusion=OcclusionRule(**data.get("occlusion", {})),
        )


@dataclass(frozen=True)
class Scene:
    """Generated sequence: tracker inputs plus aligned ground truth.

    provenance[k][i] is the object index behind frames[k].detections[i];
    diagnostic only, never fed to the tracker."""

    config: ScenarioConfig
    frames: Tuple[FrameInput, ...]
    ground_truth: Tuple[GroundTruthFrame, ...]
    provenance: Tuple[Tuple[int, ...], ...]


def _project_box(center: np.ndarray, size: Tuple[float, float], camera: CameraModel):
    """True image box of an object: the bounding rectangle of its four
    outer corners (y +- w/2, z +- h/2 around the center). None when any
    corner falls behind the camera."""
    w, h = size
    us, vs = [], []
    for dy in (-0.5 * w, 0.5 * w):
        for dz in (-0.5 * h, 0.5 * h):
            p = project_point(center + np.array([0.0, dy, dz]), camera)
            if p is None:
                return None
            us.append(p.u)
            vs.append(p.v)
    return (min(us), min(vs), max(us), max(vs))


def _iou(a, b) -> float:
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    if inter == 0.0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def generate(cfg: ScenarioConfig) -> Scene:
    """Run the scripted scene; see the module docstring for the rules."""
    n_obj = len(cfg.objects)
    camera = cfg.camera
    for idx, obj in enumerate(cfg.objects):
        depth0 = float(camera.rotation[2] @ np.asarray(obj.position) + camera.translation[2])
        if depth0 <= 0:
            raise ValueError(f"object {idx} starts behind the camera")

    # Per-object confidence, fixed for the whole sequence (sequence-level
    # stream so a noise-free static scene emits identical detections).
    confidences = _stream(cfg.seed, 0, _CONF).uniform(0.5, 1.0, size=n_obj)

    pts = cfg.radar.points_per_object
    frames: List[FrameInput] = []
    gt_frames: List[GroundTruthFrame] = []
    provenance: List[Tuple[int, ...]] = []

    for k in range(cfg.num_frames):
        t = k * cfg.frame_dt
        center_noise = _stream(cfg.seed, k, _CENTER).standard_normal((n_obj, 2)) * cfg.noise.center_px
        depth_noise = _stream(cfg.seed, k, _DEPTH).standard_normal(n_obj) * cfg.noise.depth_m
        vel_noise = _stream(cfg.seed, k, _VEL).standard_normal((n_obj, 2)) * cfg.noise.velocity_mps
        disp_noise = _stream(cfg.seed, k, _DISP).standard_normal((n_obj, 2)) * cfg.noise.displacement_px
        dropout_draw = _stream(cfg.seed, k, _DROPOUT).uniform(size=n_obj)
        radar_pos_noise = _stream(cfg.seed, k, _RADAR_POS).standard_normal((n_obj, pts, 2)) * cfg.radar.position_sigma_m
        radar_vel_noise = _stream(cfg.seed, k, _RADAR_VEL).standard_normal((n_obj, pts, 2)) * cfg.radar.velocity_sigma_mps
        clutter_rng = _stream(cfg.seed, k, _CLUTTER)

        centers = [obj.center_at(t) for obj in cfg.objects]
        image_pts = [project_to_image(c, camera) for c in centers]
        visible = [p is not None for p in image_pts]
        boxes = [
            _project_box(c, obj.size, camera) if vis else None
            for c, obj, vis in zip(centers, cfg.objects, visible)
        ]

        # Occlusion on true boxes: the farther of an overlapping pair loses
        # its detection (radar still returns).
        occluded = [False] * n_obj
        if cfg.occlusion.enabled:
            for i in range(n_obj):
                for j in range(i + 1, n_obj):
                    if boxes[i] is None or boxes[j] is None:
                        continue
                    if _iou(boxes[i], boxes[j]) > cfg.occlusion.iou_threshold:
                        di, dj = image_pts[i].depth, image_pts[j].depth
                        occluded[j if dj >= di else i] = True

        gts = []
        dets: List[Detection] = []
        radar: List[RadarPoint] = []
        frame_prov: List[int] = []
        for i, obj in enumerate(cfg.objects):
            if not visible[i]:
                continue
            c = centers[i]
            gts.append(GroundTruthObject(i, float(c[0]), float(c[1]), obj.class_id))

            for p in range(pts):
                radar.append(
                    RadarPoint(
                        float(c[0] + radar_pos_noise[i, p, 0]),
                        float(c[1] + radar_pos_noise[i, p, 1]),
                        float(c[2]),
                        float(obj.velocity[0] + radar_vel_noise[i, p, 0]),
                        float(obj.velocity[1] + radar_vel_noise[i, p, 1]),
                    )
                )

            if occluded[i] or dropout_draw[i] < cfg.dropout:
                continue

            true_uv = np.array([image_pts[i].u, image_pts[i].v])
            if k == 0:
                du = dv = 0.0
            else:
                prev = project_point(obj.center_at(t - cfg.frame_dt), camera)
                if prev is None:
                    du = dv = 0.0
                else:
                    du = float(true_uv[0] - prev.u + disp_noise[i, 0])
                    dv = float(true_uv[1] - prev.v + disp_noise[i, 1])
            dets.append(
                Detection(
                    u=float(true_uv[0] + center_noise[i, 0]),
                    v=float(true_uv[1] + center_noise[i, 1]),
                    depth=max(1e-3, float(image_pts[i].depth + depth_noise[i])),
                    vx=float(obj.velocity[0] + vel_noise[i, 0]),
                    vy=float(obj.velocity[1] + vel_noise[i, 1]),
                    class_id=obj.class_id,
                    confidence=float(confidences[i]),
                    du=du,
                    dv=dv,
                    bbox=boxes[i],
                )
            )
            frame_prov.append(i)

        for _ in range(cfg.radar.clutter_per_frame):
            u = clutter_rng.uniform(0.0, camera.image_width)
            v = clutter_rng.uniform(0.0, camera.image_height)
            depth = clutter_rng.uniform(*_CLUTTER_DEPTH_RANGE)
            vx = clutter_rng.uniform(*_CLUTTER_SPEED_RANGE)
            vy = clutter_rng.uniform(*_CLUTTER_SPEED_RANGE)
            pos = image_to_vehicle(float(u), float(v), float(depth), camera)
            radar.append(RadarPoint(float(pos[0]), float(pos[1]), float(pos[2]), float(vx), float(vy)))

        frames.append(FrameInput(k, t, tuple(dets), tuple(radar)))
        gt_frames.append(GroundTruthFrame(k, tuple(gts)))
        provenance.append(tuple(frame_prov))

    return Scene(cfg, tuple(frames), tuple(gt_frames), tuple(provenance))


def crossing_scenario(depth_gap: float = 10.0, seed: int = 0, num_frames: int = 41) -> ScenarioConfig:
    """Two same-class cars crossing paths in image space.

    Both drive laterally (opposite directions) at different forward
    distances separated by depth_gap meters, so their projected centers
    sweep toward the image middle and coincide at the midpoint frame; the
    nearer box then occludes the farther one for exactly the coincidence
    frame with the default rule. depth_gap = 0 is the degenerate control
    where depth carries no information.
    """
    if depth_gap < 0:
        raise ValueError("depth_gap must be >= 0")
    camera = CameraModel.forward_facing(1000.0, 1000.0, 400.0, 224.0, 800, 448)
    mid = (num_frames - 1) // 2
    dt = 0.1
    lateral = 0.4 / dt  # 0.4 m per frame, meeting y=0 at the midpoint
    y0 = lateral * dt * mid
    objects = (
        ObjectSpec(class_id=0, position=(55.0, y0, 0.0), velocity=(0.0, -lateral, 0.0)),
        ObjectSpec(class_id=0, position=(55.0 + depth_gap, -y0, 0.0), velocity=(0.0, lateral, 0.0)),
    )
    return ScenarioConfig(
        seed=seed,
        num_frames=num_frames,
        frame_dt=dt,
        camera=camera,
        objects=objects,
    )
