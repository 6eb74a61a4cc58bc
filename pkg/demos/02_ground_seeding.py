"""
Ground surfels from a camera trajectory
=======================================

Cameras drive over a crest. Each ground surfel copies its height and tilt
from the nearest camera, then the road score measures how bumpy that is.
"""

import numpy as np

from occlabel.geom import CameraFrame, Pose, rot_y
from occlabel.ground import GroundSeedConfig, road_smoothness, seed_ground

# uphill at 8%, then downhill at 5%
xs = np.arange(0.0, 60.0, 3.0)
z = np.where(xs < 30, 0.08 * xs, 2.4 - 0.05 * (xs - 30))
grade = np.where(xs < 30, 0.08, -0.05)
cams = [
    CameraFrame(i, Pose(rot_y(-np.arctan(g)), [x, 0.0, h + 1.6]))
    for i, (x, h, g) in enumerate(zip(xs, z, grade))
]

surfels = seed_ground(cams, GroundSeedConfig(grid_spacing=0.5, height_offset=1.6, extent=6.0))
print(f"{len(surfels)} surfels, z from {surfels.centers[:, 2].min():.2f} to {surfels.centers[:, 2].max():.2f} m")

tilt = np.degrees(np.arccos(surfels.normals[:, 2]))
print(f"normal tilt: {tilt.min():.2f} to {tilt.max():.2f} degrees")

# surfels are flat within a camera cell, so the score comes from the steps between cells
print("road smoothness (0.6 m neighbours):", round(road_smoothness(surfels, 0.6), 6))
