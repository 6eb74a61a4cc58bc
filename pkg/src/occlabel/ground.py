"""Ground surfels seeded from the camera trajectory, and a flatness score."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyTrajectory, NoNeighborPairs

# up axis in the camera body frame (x forward, y left, z up)
CAMERA_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class GroundSeedConfig:
    grid_spacing: float = 0.5
    height_offset: float = 1.6
    extent: float = 20.0

    def __post_init__(self):
        if not (self.grid_spacing > 0 and self.height_offset > 0 and self.extent > 0):
            raise ValueError("ground seed parameters must be positive")


@dataclass(frozen=True, eq=False)
class Surfels:
    """Column-wise surfel set: ``centers`` N x 3, ``normals`` N x 3 unit, ``radii`` N."""

    centers: np.ndarray
    normals: np.ndarray
    radii: np.ndarray

    def __len__(self):
        return len(self.centers)


def _footprint_lattice(cam_xy: np.ndarray, spacing: float, extent: float) -> np.ndarray:
    lo = np.floor((cam_xy.min(axis=0) - extent) / spacing).astype(np.int64)
    hi = np.ceil((cam_xy.max(axis=0) + extent) / spacing).astype(np.int64)
    gx = np.arange(lo[0], hi[0] + 1)
    gy = np.arange(lo[1], hi[1] + 1)
    ij = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1).reshape(-1, 2)
    xy = ij * spacing
    # union of axis-aligned squares of half-width `extent` around each camera
    inside = np.zeros(len(xy), dtype=bool)
    for c in cam_xy:
        inside |= np.all(np.abs(xy - c) <= extent, axis=1)
    return xy[inside]


def _nearest_camera(xy: np.ndarray, cam_xy: np.ndarray) -> np.ndarray:
    """Index of the closest camera in xy; ties go to the lowest index."""
    best = np.zeros(len(xy), dtype=np.int64)
    best_d = np.full(len(xy), np.inf)
    for i, c in enumerate(cam_xy):
        d = np.sum((xy - c) ** 2, axis=1)
        closer = d < best_d
        best[closer] = i
        best_d[closer] = d[closer]
    return best


def seed_ground(cameras, cfg: GroundSeedConfig) -> Surfels:
    """Ground surfels on an xy lattice under the trajectory.

    Each surfel copies z (minus ``height_offset``) and orientation from the
    camera nearest in xy. Ties resolve to the lower frame_id, so the result
    does not depend on camera list order.
    """
    cams = sorted(cameras, key=lambda c: c.frame_id)
    if not cams:
        raise EmptyTrajectory("no camera frames given")
    centers = np.array([c.camera_center for c in cams])
    xy = _footprint_lattice(centers[:, :2], cfg.grid_spacing, cfg.extent)
    nearest = _nearest_camera(xy, centers[:, :2])
    z = centers[nearest, 2] - cfg.height_offset
    ups = np.array([c.pose.rotation @ CAMERA_UP for c in cams])
    normals = ups[nearest]
    normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    radii = np.full(len(xy), cfg.grid_spacing * math.sqrt(0.5))
    return Surfels(np.column_stack([xy, z]), normals, radii)


def road_smoothness(surfels, neighbor_radius: float) -> float:
    """Mean squared height difference over surfel pairs within ``neighbor_radius`` in xy."""
    centers = getattr(surfels, "centers", surfels)
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    if len(centers) < 2:
        raise NoNeighborPairs("need at least two surfels")
    pairs = cKDTree(centers[:, :2]).query_pairs(neighbor_radius, output_type="ndarray")
    if len(pairs) == 0:
        raise NoNeighborPairs(f"no surfel pairs within {neighbor_radius} m")
    dz = centers[pairs[:, 0], 2] - centers[pairs[:, 1], 2]
    return float(np.mean(dz * dz))
