"""
Camera geometry: vehicle coordinates in and out of the image
============================================================

The vehicle frame is x-forward / y-left / z-up; the camera looks down +x.
This walks a point through projection, shows what falls outside the image,
and inverts a pixel + depth back into the vehicle frame.
"""

import numpy as np

from fusetrack.geometry import (
    CameraModel,
    backproject_ray,
    image_to_vehicle,
    project_point,
    project_points,
)

# a forward camera with 1000 px focal length on an 800x448 image
cam = CameraModel.forward_facing(1000.0, 1000.0, 400.0, 224.0, 800, 448)

# a point 20 m ahead, 2 m to the left, at sensor height
p = (20.0, 2.0, 0.0)
pix = project_point(p, cam)
print(f"vehicle {p} -> pixel ({pix.u:.2f}, {pix.v:.2f}) depth {pix.depth:.2f} m")

# the same point mirrored to the right lands symmetrically about cx
q = (20.0, -2.0, 0.0)
print(f"vehicle {q} -> pixel ({project_point(q, cam).u:.2f}, ...)")

# points behind the camera or outside the bounds project to None
print("behind camera:", project_point((-5.0, 0.0, 0.0), cam))
print("too far left:", project_point((2.0, 30.0, 0.0), cam))

# batch projection keeps row alignment: invalid rows are masked out
pts = np.array([[20.0, 2.0, 0.0], [-5.0, 0.0, 0.0], [40.0, -1.0, 1.0]])
uv, depth, valid = project_points(pts, cam)
for row, (u, v), d, ok in zip(pts, uv, depth, valid):
    print(f"  {row} -> ({u:7.2f}, {v:7.2f}) depth {d:6.2f} valid={bool(ok)}")

# inverting a pixel at a known depth recovers the vehicle point exactly
back = image_to_vehicle(pix.u, pix.v, pix.depth, cam)
print("round trip error:", np.abs(back - np.asarray(p)).max())

# a backprojected ray is the unit direction the pixel looks along
ray = backproject_ray(400.0, 224.0, cam)
print("principal-point ray (should be +x):", np.round(ray, 6))
