"""
Rigid poses and the multi-level anchor index
============================================

Build a toy sparse reconstruction, pick the number of levels from the
camera-to-point distance range, and watch the voxel count grow level by level.
"""

import numpy as np

from occlabel import Pose, compose, invert
from occlabel.geom import rot_z
from occlabel.octree import OctreeConfig, adapt, build_index, compute_level_count, query_cumulative

# a quarter turn applied twice is a half turn
quarter = Pose(rot_z(np.pi / 2), np.zeros(3))
print("Rz(90) twice:\n", np.round(compose(quarter, quarter).rotation, 12))

# poses invert cleanly
p = Pose(rot_z(0.4), [3.0, -1.0, 2.0])
print("p then p^-1 is identity:", compose(p, invert(p)).allclose(Pose.identity()))

# a street-like cloud: dense near the cameras, sparse far away
rng = np.random.default_rng(0)
near = rng.normal(scale=3.0, size=(2000, 3)) + [10, 0, 0]
far = rng.uniform(-80, 80, size=(300, 3))
points = np.vstack([near, far])
cameras = np.array([[0.0, 0.0, 1.8], [5.0, 0.0, 1.8], [10.0, 0.0, 1.8]])

levels = compute_level_count(cameras, points)
print("levels:", levels)

cfg = OctreeConfig(base_voxel_size=16.0, anchors_per_voxel=4, expand_threshold=200, contract_threshold=1)
index = build_index(points, cameras, cfg)
for level in range(index.levels):
    print(f"level {level}: pitch {index.pitch(level):6.3f} m, {len(query_cumulative(index, level)):5d} voxels up to here")

# at 1.6 cm pitch every finest voxel holds a single point, so with a
# contract threshold of 1 the whole finest level is pruned
trimmed = adapt(index, cfg)
print("finest level before/after adapt:", index.counts()[-1], trimmed.counts()[-1])
